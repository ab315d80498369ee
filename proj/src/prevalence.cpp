#include "seroclass/prevalence.hpp"

#include <algorithm>
#include <cmath>

namespace seroclass {

double empirical_positive_fraction(std::span<const LogPoint> points,
                                   const ClassificationRule& rule) {
    if (points.empty())
        throw DataError("empirical_positive_fraction: empty input");
    std::size_t count = 0;
    for (const auto& p : points)
        if (classify(rule, p) == Label::positive) ++count;
    return static_cast<double>(count) / static_cast<double>(points.size());
}

PrevalenceEstimate estimate_from_fraction(double empirical_fraction, double pos_mass,
                                          double neg_mass, std::size_t sample_count) {
    if (std::abs(pos_mass - neg_mass) <= kEpsilonSeparation)
        throw SeparationError({});
    PrevalenceEstimate est;
    est.empirical_fraction = empirical_fraction;
    est.pos_mass = pos_mass;
    est.neg_mass = neg_mass;
    est.sample_count = sample_count;
    const double raw = (empirical_fraction - neg_mass) / (pos_mass - neg_mass);
    est.p_hat = std::clamp(raw, 0.0, 1.0);
    est.clamped = raw != est.p_hat;
    return est;
}

PrevalenceEstimate estimate_prevalence(std::span<const LogPoint> points,
                                       const ClassificationRule& rule,
                                       const QuadratureSpec& quad) {
    const double q_bar = empirical_positive_fraction(points, rule);
    const DomainMasses m = domain_masses(rule, quad);
    return estimate_from_fraction(q_bar, m.pos_in_pos, m.neg_in_pos, points.size());
}

AdaptiveResult adaptive_classify(std::span<const LogPoint> points, DensityPtr pos,
                                 DensityPtr neg, const AdaptiveOptions& opts) {
    if (points.empty()) throw DataError("adaptive_classify: empty input");
    if (!(opts.p_init >= 0.0 && opts.p_init <= 1.0))
        throw ConfigError("adaptive_classify: p_init must lie in [0,1]");
    if (opts.max_iterations < 1)
        throw ConfigError("adaptive_classify: max_iterations must be >= 1");

    // Densities are fixed across iterations; cache their values once, both
    // on the quadrature grid and at the sample points.
    const DensityPairGrid grid = DensityPairGrid::build(*pos, *neg, opts.quad);
    std::vector<double> pv(points.size()), nv(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!pos->domain().contains(points[i]))
            throw DataError("adaptive_classify: point outside the density domain");
        pv[i] = pos->value(points[i]);
        nv[i] = neg->value(points[i]);
    }

    auto rule_at = [&](double p) {
        return ClassificationRule::binary(p, pos, neg, opts.weights);
    };

    std::vector<PrevalenceEstimate> estimates;
    double p_current = opts.p_init;
    bool converged = false;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const ClassificationRule rule = rule_at(p_current);
        std::size_t in_pos = 0;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (rule.label_from_values(pv[i], nv[i]) == Label::positive) ++in_pos;
        const double q_bar = static_cast<double>(in_pos) / points.size();
        const DomainMasses m = domain_masses_on_grid(rule, grid);

        PrevalenceEstimate est;
        try {
            est = estimate_from_fraction(q_bar, m.pos_in_pos, m.neg_in_pos, points.size());
        } catch (const SeparationError&) {
            throw SeparationError(std::move(estimates));
        }
        estimates.push_back(est);
        const double delta = std::abs(est.p_hat - p_current);
        p_current = est.p_hat;
        if (delta < opts.tol) {
            converged = true;
            break;
        }
        // An endpoint estimate is a boundary fixed point: the rule at p = 0
        // (or 1) has an empty decision region on one side, so the estimator
        // carries no further information and iteration stops here.
        if (p_current == 0.0 || p_current == 1.0) {
            converged = true;
            break;
        }
    }

    const ClassificationRule final_rule = rule_at(p_current);
    std::vector<Label> labels(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        labels[i] = final_rule.label_from_values(pv[i], nv[i]);

    return {std::move(estimates), final_rule, std::move(labels), converged};
}

}  // namespace seroclass
