#ifndef SEROCLASS_FIT_HPP_
#define SEROCLASS_FIT_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "seroclass/density.hpp"
#include "seroclass/types.hpp"

namespace seroclass {

struct NelderMeadOptions {
    int max_iterations = 2000;
    double diameter_tol = 1e-6;  // simplex diameter in parameter space
    double initial_step = 0.15;
};

struct SimplexResult {
    std::vector<double> x;
    double fval = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Standard downhill-simplex minimization (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5).
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x0, const NelderMeadOptions& opts = {});

struct FitOptions {
    int max_iterations = 2000;
    double diameter_tol = 1e-6;     // in log-parameter space
    int restarts = 5;               // random restarts around the init
    double restart_spread = 0.3;    // stddev of log-space perturbations
    std::uint64_t restart_seed = 0x5ec1a55f17ull;
};

template <typename Params>
struct FitResult {
    Params params;
    double log_likelihood = 0.0;
    double init_log_likelihood = 0.0;
    int iterations = 0;     // iterations of the winning run
    bool converged = false; // winning run met the simplex tolerance
};

// Maximum-likelihood fits of the untruncated analytic likelihoods (domain
// truncation and renormalization happen afterwards, via normalize()).
// Positivity of scale/shape parameters is enforced by optimizing their
// logarithms.  Requires at least 10 finite points inside the family's
// support; the returned log-likelihood is never below the init's.
FitResult<NegativeModelParams> fit_negative_mle(std::span<const LogPoint> points,
                                                const NegativeModelParams& init,
                                                const FitOptions& opts = {});
FitResult<PositiveModelParams> fit_positive_mle(std::span<const LogPoint> points,
                                                const PositiveModelParams& init,
                                                const FitOptions& opts = {});

// Method-of-moments starting values.
NegativeModelParams negative_moment_init(std::span<const LogPoint> points);
PositiveModelParams positive_moment_init(std::span<const LogPoint> points,
                                         double z_scale = 9.0);

// Exact analytic log-likelihoods (sum over points of the untruncated
// normalized joint density).
double negative_log_likelihood(std::span<const LogPoint> points,
                               const NegativeModelParams& params);
double positive_log_likelihood(std::span<const LogPoint> points,
                               const PositiveModelParams& params);

}  // namespace seroclass

#endif  // SEROCLASS_FIT_HPP_
