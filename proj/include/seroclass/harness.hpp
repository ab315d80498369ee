#ifndef SEROCLASS_HARNESS_HPP_
#define SEROCLASS_HARNESS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "seroclass/classifier.hpp"
#include "seroclass/prevalence.hpp"

namespace seroclass {

// Synthetic draw from the mixture (1-p) N + p P with deterministic class
// counts: round(p*S) positives, the rest negatives.  Points are ordered
// negatives first; `truth_positive` records the generating class.
struct MixtureSample {
    std::vector<LogPoint> points;
    std::vector<bool> truth_positive;
    std::size_t positive_count = 0;
};

MixtureSample sample_mixture(const TruncatedDensity& pos, const TruncatedDensity& neg,
                             double p, std::size_t total, std::uint64_t seed);

struct SweepRow {
    double q = 0.0;          // assumed prevalence defining the trial domains
    double false_pos = 0.0;  // (1 - true_p) * N-mass over D_P(q)
    double false_neg = 0.0;  // true_p * P-mass over D_N(q)
    double total = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double argmin_q = 0.0;
    bool flat = false;  // loss indistinguishable across the whole grid
};

// Binary loss under the true prevalence, evaluated over trial domains
// induced by each assumed prevalence q (unit weights).
SweepReport sweep_loss_vs_q(double true_p, std::span<const double> q_grid,
                            DensityPtr pos, DensityPtr neg,
                            const QuadratureSpec& quad = {});

std::vector<double> linspace(double lo, double hi, int count);

struct ExperimentConfig {
    std::vector<double> prevalence_grid;
    std::vector<std::size_t> sample_sizes;
    int trials = 500;
    std::uint64_t base_seed = 1;
    QuadratureSpec quad{};
    DensityPtr pos;
    DensityPtr neg;
    double p_init = 0.5;  // adaptive mode
    double tol = 1e-4;
    int max_iterations = 20;
    int threads = 1;

    void validate() const;
};

struct McCell {
    double p = 0.0;
    std::size_t sample_size = 0;
    double mean_error = 0.0;  // mean total error rate (false pos + false neg) / S
    double std_error = 0.0;
    double mean_plus_3sigma = 0.0;
    // Adaptive mode only: statistics of |p_hat - p| / p over trials.
    double mean_prev_rel_error = 0.0;
    double prev_rel_error_plus_3sigma = 0.0;
    std::size_t failed_trials = 0;  // estimator separation failures
};

struct ExponentFit {
    double p = 0.0;
    double exponent = 0.0;  // slope of log std-error vs log sample size
};

struct McErrorReport {
    bool known_prevalence = true;
    std::vector<McCell> cells;
    std::vector<ExponentFit> std_exponents;  // one per prevalence (>= 2 usable sizes)
    // Fraction of adaptive trials whose |p_{k+1} - p_k| sequence was
    // non-increasing after the first step (diagnostic, adaptive mode only).
    double contraction_fraction = 0.0;
};

// Classification error statistics over the (prevalence, sample size) grid.
// With known_prevalence the optimal rule at the true p classifies each
// draw; otherwise the prevalence is estimated adaptively from p_init.
// Bitwise reproducible from (config, base_seed) for a fixed thread count
// contract: per-trial seeds depend only on grid indices.
McErrorReport mc_error_stats(const ExperimentConfig& cfg, bool known_prevalence);

struct PerturbationReport {
    double max_loss_decrease = 0.0;  // best improvement over all single-cell swaps
    std::size_t cells_checked = 0;
    double tolerance = 1e-10;
    bool passed = false;
};

// Discretized optimality check: relabeling any single quadrature cell to
// any alternative region must not decrease the rule's loss.
PerturbationReport perturbation_optimality_check(const ClassificationRule& rule,
                                                 const QuadratureSpec& quad = {});

// Least-squares slope of log(values) vs log(sizes); NaN with fewer than
// two positive values.
double fit_power_exponent(std::span<const double> sizes, std::span<const double> values);

}  // namespace seroclass

#endif  // SEROCLASS_HARNESS_HPP_
