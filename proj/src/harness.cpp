#include "seroclass/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "seroclass/rng.hpp"

namespace seroclass {

namespace {

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

Moments sample_moments(std::span<const double> xs) {
    Moments m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= xs.size();
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stddev = std::sqrt(ss / (xs.size() - 1));
    }
    return m;
}

}  // namespace

MixtureSample sample_mixture(const TruncatedDensity& pos, const TruncatedDensity& neg,
                             double p, std::size_t total, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("sample_mixture: prevalence must lie in [0,1]");
    MixtureSample out;
    out.positive_count = static_cast<std::size_t>(std::llround(p * total));
    const std::size_t n_neg = total - out.positive_count;
    out.points = sample(neg, n_neg, derive_seed(seed, 0x6e));
    auto pos_points = sample(pos, out.positive_count, derive_seed(seed, 0x70));
    out.points.insert(out.points.end(), pos_points.begin(), pos_points.end());
    out.truth_positive.assign(n_neg, false);
    out.truth_positive.resize(total, true);
    return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * (count == 1 ? 0.0 : static_cast<double>(i) / (count - 1));
    return out;
}

SweepReport sweep_loss_vs_q(double true_p, std::span<const double> q_grid,
                            DensityPtr pos, DensityPtr neg, const QuadratureSpec& quad) {
    if (q_grid.empty()) throw ConfigError("sweep: empty q grid");
    for (double q : q_grid)
        if (!(q > 0.0 && q < 1.0))
            throw ConfigError("sweep: assumed prevalences must lie in (0,1)");
    const DensityPairGrid grid = DensityPairGrid::build(*pos, *neg, quad);

    SweepReport report;
    report.rows.reserve(q_grid.size());
    for (double q : q_grid) {
        const auto rule = ClassificationRule::binary(q, pos, neg);
        const DomainMasses m = domain_masses_on_grid(rule, grid);
        SweepRow row;
        row.q = q;
        row.false_pos = (1.0 - true_p) * m.neg_in_pos;
        row.false_neg = true_p * m.pos_in_neg;
        row.total = row.false_pos + row.false_neg;
        report.rows.push_back(row);
    }
    const auto best = std::min_element(
        report.rows.begin(), report.rows.end(),
        [](const SweepRow& a, const SweepRow& b) { return a.total < b.total; });
    report.argmin_q = best->q;
    const auto worst = std::max_element(
        report.rows.begin(), report.rows.end(),
        [](const SweepRow& a, const SweepRow& b) { return a.total < b.total; });
    report.flat = (worst->total - best->total) <= 1e-12 * std::max(1.0, worst->total);
    return report;
}

void ExperimentConfig::validate() const {
    if (prevalence_grid.empty() || sample_sizes.empty())
        throw ConfigError("experiment: prevalence and sample-size grids must be non-empty");
    if (trials < 1) throw ConfigError("experiment: trials must be >= 1");
    if (!pos || !neg) throw ConfigError("experiment: densities must be provided");
    quad.validate();
}

McErrorReport mc_error_stats(const ExperimentConfig& cfg, bool known_prevalence) {
    cfg.validate();
    const DensityPairGrid grid = DensityPairGrid::build(*cfg.pos, *cfg.neg, cfg.quad);

    McErrorReport report;
    report.known_prevalence = known_prevalence;

    std::size_t contraction_ok = 0, contraction_total = 0;

    for (std::size_t ip = 0; ip < cfg.prevalence_grid.size(); ++ip) {
        const double p = cfg.prevalence_grid[ip];
        for (std::size_t is = 0; is < cfg.sample_sizes.size(); ++is) {
            const std::size_t S = cfg.sample_sizes[is];
            std::vector<double> errors(cfg.trials,
                                       std::numeric_limits<double>::quiet_NaN());
            std::vector<double> prev_errors(cfg.trials,
                                            std::numeric_limits<double>::quiet_NaN());
            std::vector<std::uint8_t> contracted(cfg.trials, 0);
            std::atomic<std::size_t> failures{0};

            parallel_for(cfg.trials, cfg.threads, [&](std::size_t trial) {
                const std::uint64_t seed = derive_seed(cfg.base_seed, ip, is, trial);
                const MixtureSample draw =
                    sample_mixture(*cfg.pos, *cfg.neg, p, S, seed);
                std::vector<double> pv(S), nv(S);
                for (std::size_t i = 0; i < S; ++i) {
                    pv[i] = cfg.pos->value(draw.points[i]);
                    nv[i] = cfg.neg->value(draw.points[i]);
                }

                double p_rule = p;
                if (!known_prevalence) {
                    // Adaptive estimate from p_init on the shared grid.
                    double p_cur = cfg.p_init;
                    double prev_delta = std::numeric_limits<double>::infinity();
                    bool monotone = true;
                    bool failed = false;
                    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
                        const auto rule = ClassificationRule::binary(p_cur, cfg.pos, cfg.neg);
                        std::size_t in_pos = 0;
                        for (std::size_t i = 0; i < S; ++i)
                            if (rule.label_from_values(pv[i], nv[i]) == Label::positive)
                                ++in_pos;
                        const DomainMasses m = domain_masses_on_grid(rule, grid);
                        if (std::abs(m.pos_in_pos - m.neg_in_pos) <= kEpsilonSeparation) {
                            failed = true;
                            break;
                        }
                        const double q_bar = static_cast<double>(in_pos) / S;
                        const double raw =
                            (q_bar - m.neg_in_pos) / (m.pos_in_pos - m.neg_in_pos);
                        const double p_next = std::clamp(raw, 0.0, 1.0);
                        const double delta = std::abs(p_next - p_cur);
                        if (iter > 0 && delta > prev_delta) monotone = false;
                        prev_delta = delta;
                        p_cur = p_next;
                        if (delta < cfg.tol) break;
                        // Endpoint estimates are boundary fixed points.
                        if (p_cur == 0.0 || p_cur == 1.0) break;
                    }
                    if (failed) {
                        failures.fetch_add(1);
                        return;
                    }
                    p_rule = p_cur;
                    prev_errors[trial] = p > 0.0
                                             ? std::abs(p_cur - p) / p
                                             : std::abs(p_cur - p);
                    contracted[trial] = monotone ? 1 : 0;
                }

                const auto rule = ClassificationRule::binary(p_rule, cfg.pos, cfg.neg);
                std::size_t wrong = 0;
                for (std::size_t i = 0; i < S; ++i) {
                    const Label label = rule.label_from_values(pv[i], nv[i]);
                    const bool called_positive = label == Label::positive;
                    if (called_positive != static_cast<bool>(draw.truth_positive[i]))
                        ++wrong;
                }
                errors[trial] = static_cast<double>(wrong) / S;
            });

            McCell cell;
            cell.p = p;
            cell.sample_size = S;
            cell.failed_trials = failures.load();

            std::vector<double> ok_errors;
            ok_errors.reserve(cfg.trials);
            for (double e : errors)
                if (!std::isnan(e)) ok_errors.push_back(e);
            const Moments em = sample_moments(ok_errors);
            cell.mean_error = em.mean;
            cell.std_error = em.stddev;
            cell.mean_plus_3sigma = em.mean + 3.0 * em.stddev;

            if (!known_prevalence) {
                std::vector<double> ok_prev;
                for (double e : prev_errors)
                    if (!std::isnan(e)) ok_prev.push_back(e);
                const Moments pm = sample_moments(ok_prev);
                cell.mean_prev_rel_error = pm.mean;
                cell.prev_rel_error_plus_3sigma = pm.mean + 3.0 * pm.stddev;
                for (std::size_t t = 0; t < contracted.size(); ++t) {
                    if (std::isnan(prev_errors[t])) continue;
                    ++contraction_total;
                    contraction_ok += contracted[t];
                }
            }
            report.cells.push_back(cell);
        }
    }

    if (contraction_total > 0)
        report.contraction_fraction =
            static_cast<double>(contraction_ok) / contraction_total;

    // Per-prevalence decay exponent of the error std versus sample size.
    for (std::size_t ip = 0; ip < cfg.prevalence_grid.size(); ++ip) {
        std::vector<double> sizes, stds;
        for (const auto& cell : report.cells) {
            if (cell.p != cfg.prevalence_grid[ip]) continue;
            if (cell.std_error > 0.0) {
                sizes.push_back(static_cast<double>(cell.sample_size));
                stds.push_back(cell.std_error);
            }
        }
        const double slope = fit_power_exponent(sizes, stds);
        if (!std::isnan(slope))
            report.std_exponents.push_back({cfg.prevalence_grid[ip], slope});
    }
    return report;
}

PerturbationReport perturbation_optimality_check(const ClassificationRule& rule,
                                                 const QuadratureSpec& quad) {
    const DensityPairGrid grid =
        DensityPairGrid::build(rule.pos_density(), rule.neg_density(), quad);
    const std::size_t n = grid.nodes_per_axis();
    const auto& iv = rule.interval();
    const double w_fp = rule.weights().false_positive;
    const double w_fn = rule.weights().false_negative;
    const bool ternary = rule.kind() == RuleKind::ternary;

    PerturbationReport report;
    report.cells_checked = n * n;
    double max_decrease = -std::numeric_limits<double>::infinity();

    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w = grid.axis.weights[j] * grid.axis.weights[i];
            const double pval = grid.pos[j * n + i];
            const double nval = grid.neg[j * n + i];
            // Per-cell contribution of each candidate region to the
            // discretized loss.
            double c_pos, c_neg, c_hold = 0.0;
            if (ternary) {
                c_pos = w * (w_fp * (1.0 - iv.p_lo) * nval - iv.p_lo * pval);
                c_neg = w * (w_fn * iv.p_hi * pval - (1.0 - iv.p_hi) * nval);
            } else {
                c_pos = w * w_fp * (1.0 - iv.p_lo) * nval;
                c_neg = w * w_fn * iv.p_lo * pval;
            }
            const Label current = rule.label_from_values(pval, nval);
            const double c_current = current == Label::positive  ? c_pos
                                     : current == Label::negative ? c_neg
                                                                  : c_hold;
            double best_alt = std::numeric_limits<double>::infinity();
            if (current != Label::positive) best_alt = std::min(best_alt, c_pos);
            if (current != Label::negative) best_alt = std::min(best_alt, c_neg);
            if (ternary && current != Label::holdout) best_alt = std::min(best_alt, c_hold);
            max_decrease = std::max(max_decrease, c_current - best_alt);
        }
    }

    report.max_loss_decrease = max_decrease;
    report.passed = max_decrease <= report.tolerance;
    return report;
}

double fit_power_exponent(std::span<const double> sizes, std::span<const double> values) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < sizes.size() && i < values.size(); ++i) {
        if (sizes[i] > 0.0 && values[i] > 0.0) {
            xs.push_back(std::log(sizes[i]));
            ys.push_back(std::log(values[i]));
        }
    }
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace seroclass
