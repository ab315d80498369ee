#ifndef SEROCLASS_TYPES_HPP_
#define SEROCLASS_TYPES_HPP_

#include <cmath>
#include <string>

#include "seroclass/errors.hpp"

namespace seroclass {

// A point in the transformed log-measurement plane.  All densities and
// classification rules live in this space.
struct LogPoint {
    double lx = 0.0;  // log-transformed channel A (RBD)
    double ly = 0.0;  // log-transformed channel B (S1)
};

// Diagonal/anti-diagonal rotation used by both density families:
//   z = (lx + ly) / sqrt(2),  w = (lx - ly) / sqrt(2).
struct RotatedPoint {
    double z = 0.0;
    double w = 0.0;
};

inline RotatedPoint rotate(LogPoint p) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return {(p.lx + p.ly) * inv_sqrt2, (p.lx - p.ly) * inv_sqrt2};
}

inline LogPoint unrotate(double diag, double w) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return {(diag + w) * inv_sqrt2, (diag - w) * inv_sqrt2};
}

// Square truncation rectangle [lo,hi]^2 in log space.
struct DomainSpec {
    double lo = 0.0;
    double hi = 7.0;

    bool contains(LogPoint p) const {
        return p.lx >= lo && p.lx <= hi && p.ly >= lo && p.ly <= hi;
    }
    double width() const { return hi - lo; }
    void validate() const {
        if (!(lo < hi)) throw ConfigError("domain: lo must be < hi");
    }
};

inline bool operator==(const DomainSpec& a, const DomainSpec& b) {
    return a.lo == b.lo && a.hi == b.hi;
}

enum class SampleLabel { positive, negative, unknown };

inline std::string to_string(SampleLabel l) {
    switch (l) {
        case SampleLabel::positive: return "positive";
        case SampleLabel::negative: return "negative";
        default: return "unknown";
    }
}

// Classification outcome.  Binary rules assign ties to `negative`;
// ternary rules use `holdout` for the indeterminate region.
enum class Label { positive, negative, holdout };

inline std::string to_string(Label l) {
    switch (l) {
        case Label::positive: return "positive";
        case Label::negative: return "negative";
        default: return "holdout";
    }
}

// Admissible prevalence range [p_lo, p_hi] for ternary classification.
struct PrevalenceInterval {
    double p_lo = 0.0;
    double p_hi = 1.0;

    void validate() const {
        if (!(p_lo >= 0.0 && p_lo <= p_hi && p_hi <= 1.0))
            throw ConfigError("prevalence interval: need 0 <= p_lo <= p_hi <= 1");
    }
};

}  // namespace seroclass

#endif  // SEROCLASS_TYPES_HPP_
