#ifndef SEROCLASS_CLASSIFIER_HPP_
#define SEROCLASS_CLASSIFIER_HPP_

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "seroclass/density.hpp"
#include "seroclass/quadrature.hpp"
#include "seroclass/types.hpp"

namespace seroclass {

// Relative weighting of the two error kinds in the loss functionals.
// (1,1) reproduces the unweighted losses exactly.
struct ClassWeights {
    double false_positive = 1.0;
    double false_negative = 1.0;

    void validate() const {
        if (!(false_positive > 0.0 && false_negative > 0.0))
            throw ConfigError("class weights must be positive");
    }
    bool unit() const { return false_positive == 1.0 && false_negative == 1.0; }
};

enum class RuleKind { binary, ternary };

// A decision rule over a positive/negative density pair.  All region
// membership tests use the product form (prevalence-weighted density
// comparison), never a ratio, so vanishing densities need no special
// casing.  Exact ties are labeled negative by binary rules (conservative
// default) and holdout by ternary rules.
class ClassificationRule {
public:
    static ClassificationRule binary(double p, DensityPtr pos, DensityPtr neg,
                                     ClassWeights weights = {});
    static ClassificationRule ternary(PrevalenceInterval interval, DensityPtr pos,
                                      DensityPtr neg, ClassWeights weights = {});

    RuleKind kind() const { return kind_; }
    // Binary prevalence, or the interval endpoints for ternary rules.
    double prevalence() const { return interval_.p_lo; }
    const PrevalenceInterval& interval() const { return interval_; }
    const ClassWeights& weights() const { return weights_; }
    const TruncatedDensity& pos_density() const { return *pos_; }
    const TruncatedDensity& neg_density() const { return *neg_; }
    DensityPtr pos_ptr() const { return pos_; }
    DensityPtr neg_ptr() const { return neg_; }
    const DomainSpec& domain() const { return pos_->domain(); }

    // Label from already-evaluated density values at a point.
    Label label_from_values(double pos_value, double neg_value) const;

private:
    ClassificationRule(RuleKind kind, PrevalenceInterval interval, DensityPtr pos,
                       DensityPtr neg, ClassWeights weights);

    RuleKind kind_;
    PrevalenceInterval interval_;  // p_lo == p_hi for binary rules
    DensityPtr pos_;
    DensityPtr neg_;
    ClassWeights weights_;
};

// Labels a point inside the rule's domain; throws DataError outside.
Label classify(const ClassificationRule& rule, LogPoint p);

// Likelihood ratio P(r)/N(r) with explicit +infinity when N = 0 < P and
// zero when both densities vanish.
double likelihood_ratio(const TruncatedDensity& pos, const TruncatedDensity& neg,
                        LogPoint p);

struct LossReport {
    double false_pos_mass = 0.0;   // integral of N over D_P
    double false_neg_mass = 0.0;   // integral of P over D_N
    double total = 0.0;            // prevalence- and weight-composed loss
    double holdout_mass_pos = 0.0; // integral of P over H
    double holdout_mass_neg = 0.0; // integral of N over H
};

// Density values tabulated on a shared quadrature grid; reused by the loss
// integrals, mass computations, prevalence estimation and the sweep/
// perturbation experiments so all masses are mutually consistent.
struct DensityPairGrid {
    DomainSpec domain;
    AxisRule axis;
    std::vector<double> pos;  // index = iy * n + ix
    std::vector<double> neg;

    std::size_t nodes_per_axis() const { return axis.nodes.size(); }
    static DensityPairGrid build(const TruncatedDensity& pos, const TruncatedDensity& neg,
                                 const QuadratureSpec& quad);
};

using Labeler = std::function<Label(LogPoint)>;

// Binary loss (false positives weighted by w_fp*(1-p), false negatives by
// w_fn*p) over the regions induced by the rule, or by an overriding
// labeler when supplied.
LossReport loss_binary(const ClassificationRule& rule, const QuadratureSpec& quad = {});
LossReport loss_binary_with_labels(const ClassificationRule& rule,
                                   const QuadratureSpec& quad, const Labeler& labeler);
LossReport loss_binary_on_grid(const ClassificationRule& rule, const DensityPairGrid& grid);

// Ternary loss: worst-case false-classification mass minus the
// correct-classification mass; always within [-1, 1].
double loss_ternary(const ClassificationRule& rule, const QuadratureSpec& quad = {});
double loss_ternary_with_labels(const ClassificationRule& rule,
                                const QuadratureSpec& quad, const Labeler& labeler);

struct DomainMasses {
    double pos_in_pos = 0.0;  // P over D_P
    double neg_in_pos = 0.0;  // N over D_P
    double pos_in_neg = 0.0;  // P over D_N
    double neg_in_neg = 0.0;  // N over D_N
    double pos_in_holdout = 0.0;
    double neg_in_holdout = 0.0;
};

DomainMasses domain_masses(const ClassificationRule& rule, const QuadratureSpec& quad = {});
DomainMasses domain_masses_on_grid(const ClassificationRule& rule,
                                   const DensityPairGrid& grid);

// Decision-boundary polylines extracted by marching squares on a uniform
// (resolution+1)^2 lattice.  Binary rules yield one level-set family;
// ternary rules yield the positive-side (p_lo) and negative-side (p_hi)
// families, tagged by `side`.
enum class BoundarySide { binary, lower, upper };

struct ContourPolyline {
    std::vector<LogPoint> points;
    bool closed = false;
    BoundarySide side = BoundarySide::binary;
};

std::vector<ContourPolyline> boundary_contour(const ClassificationRule& rule,
                                              int resolution);

// Per-axis mean + 3*stddev thresholds fitted to negative-population points;
// anything beyond either threshold classifies positive.
struct ThreeSigmaRule {
    double threshold_x = 0.0;
    double threshold_y = 0.0;

    bool is_positive(LogPoint p) const {
        return p.lx > threshold_x || p.ly > threshold_y;
    }
};

ThreeSigmaRule three_sigma_rule(std::span<const LogPoint> negative_points);

}  // namespace seroclass

#endif  // SEROCLASS_CLASSIFIER_HPP_
