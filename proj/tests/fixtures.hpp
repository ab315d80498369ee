// Committed synthetic model parameters used across the test and acceptance
// suites.  They play the role of densities fitted to real two-channel IgG
// data: a negative population clustered near the origin with a widening
// diagonal tail, and a positive population spread along the diagonal.
#ifndef SEROCLASS_TESTS_FIXTURES_HPP_
#define SEROCLASS_TESTS_FIXTURES_HPP_

#include <memory>

#include "seroclass/density.hpp"

namespace fixtures {

inline seroclass::NegativeModelParams negative_params() {
    return {0.25, 3.2, 0.06, 0.0, 2.0};  // theta, k, alpha, mu, beta
}

inline seroclass::PositiveModelParams positive_params() {
    return {8.0, 2.4, 0.24, 0.0, 9.0};  // alpha, beta_shape, theta, mu, z_scale
}

struct DensityPair {
    seroclass::DensityPtr pos;
    seroclass::DensityPtr neg;
};

inline DensityPair densities(const seroclass::QuadratureSpec& quad = {},
                             seroclass::DomainSpec domain = {}) {
    return {std::make_shared<seroclass::TruncatedDensity>(
                seroclass::normalize(positive_params(), domain, quad)),
            std::make_shared<seroclass::TruncatedDensity>(
                seroclass::normalize(negative_params(), domain, quad))};
}

// Generating parameters for the negative-family fit round-trip.  The wide
// domain keeps rectangle truncation negligible, so the untruncated
// analytic likelihood sees an unbiased sample.
inline seroclass::NegativeModelParams roundtrip_negative_params() {
    return {0.5, 2.0, 0.2, 0.0, 3.0};
}

inline seroclass::DomainSpec wide_domain() { return {-4.0, 14.0}; }

}  // namespace fixtures

#endif  // SEROCLASS_TESTS_FIXTURES_HPP_
