#ifndef SEROCLASS_ERRORS_HPP_
#define SEROCLASS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace seroclass {

// Invalid configuration or option values (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or insufficient input data, violated preconditions (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: zero mass, non-convergence, degenerate estimator
// (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace seroclass

#endif  // SEROCLASS_ERRORS_HPP_
