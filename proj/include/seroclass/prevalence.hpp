#ifndef SEROCLASS_PREVALENCE_HPP_
#define SEROCLASS_PREVALENCE_HPP_

#include <span>
#include <vector>

#include "seroclass/classifier.hpp"

namespace seroclass {

// Output of the pooled prevalence estimator
//   p_hat = (Q_bar_P - N_P) / (P_P - N_P),
// where Q_bar_P is the empirical fraction of samples falling in D_P and
// P_P, N_P are the model masses of the positive/negative densities over
// the same region.
struct PrevalenceEstimate {
    double p_hat = 0.0;
    double empirical_fraction = 0.0;  // Q_bar_P
    double pos_mass = 0.0;            // P_P
    double neg_mass = 0.0;            // N_P
    bool clamped = false;             // raw estimate fell outside [0,1]
    std::size_t sample_count = 0;
};

// Separation guard: below this |P_P - N_P| the rule carries no prevalence
// information and the estimator is undefined.
inline constexpr double kEpsilonSeparation = 1e-6;

// Raised when the estimator denominator degenerates; carries the estimates
// produced so far when thrown from the adaptive loop.
class SeparationError : public NumericError {
public:
    explicit SeparationError(std::vector<PrevalenceEstimate> trace)
        : NumericError("prevalence estimator: |P_P - N_P| below separation threshold"),
          partial_trace(std::move(trace)) {}
    std::vector<PrevalenceEstimate> partial_trace;
};

// Fraction of points the rule labels positive.  All points count toward
// the denominator, including holdout-labeled ones under ternary rules.
double empirical_positive_fraction(std::span<const LogPoint> points,
                                   const ClassificationRule& rule);

// Core estimator arithmetic, clamped into [0,1] with an explicit flag.
PrevalenceEstimate estimate_from_fraction(double empirical_fraction, double pos_mass,
                                          double neg_mass, std::size_t sample_count);

PrevalenceEstimate estimate_prevalence(std::span<const LogPoint> points,
                                       const ClassificationRule& rule,
                                       const QuadratureSpec& quad = {});

struct AdaptiveOptions {
    double p_init = 0.5;
    double tol = 1e-4;       // stop when |p_{k+1} - p_k| < tol
    int max_iterations = 20; // 1 reproduces the single estimate-then-reclassify step
    ClassWeights weights{};
    QuadratureSpec quad{};
};

struct AdaptiveResult {
    std::vector<PrevalenceEstimate> estimates;  // one per iteration
    ClassificationRule final_rule;
    std::vector<Label> labels;  // aligned with the input points
    bool converged = false;
};

// Classify-estimate-reclassify fixed point: starting from rule(p_init),
// re-estimates the prevalence via the pooled estimator and rebuilds the
// rule until the estimate settles or max_iterations is reached.  The final
// prevalence is always the pooled estimate, never the labeled-positive
// count.
AdaptiveResult adaptive_classify(std::span<const LogPoint> points, DensityPtr pos,
                                 DensityPtr neg, const AdaptiveOptions& opts = {});

}  // namespace seroclass

#endif  // SEROCLASS_PREVALENCE_HPP_
