#include "seroclass/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace seroclass {

ClassificationRule::ClassificationRule(RuleKind kind, PrevalenceInterval interval,
                                       DensityPtr pos, DensityPtr neg,
                                       ClassWeights weights)
    : kind_(kind),
      interval_(interval),
      pos_(std::move(pos)),
      neg_(std::move(neg)),
      weights_(weights) {
    if (!pos_ || !neg_) throw ConfigError("rule: densities must be provided");
    interval_.validate();
    weights_.validate();
    if (!(pos_->domain() == neg_->domain()))
        throw ConfigError("rule: densities must share the same domain");
}

ClassificationRule ClassificationRule::binary(double p, DensityPtr pos, DensityPtr neg,
                                              ClassWeights weights) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("rule: binary prevalence must lie in [0,1]");
    return ClassificationRule(RuleKind::binary, {p, p}, std::move(pos), std::move(neg),
                              weights);
}

ClassificationRule ClassificationRule::ternary(PrevalenceInterval interval,
                                               DensityPtr pos, DensityPtr neg,
                                               ClassWeights weights) {
    return ClassificationRule(RuleKind::ternary, interval, std::move(pos),
                              std::move(neg), weights);
}

Label ClassificationRule::label_from_values(double pv, double nv) const {
    const double w_fp = weights_.false_positive;
    const double w_fn = weights_.false_negative;
    if (kind_ == RuleKind::binary) {
        const double p = interval_.p_lo;
        const double lhs = w_fn * p * pv;
        const double rhs = w_fp * (1.0 - p) * nv;
        if (lhs > rhs) return Label::positive;
        return Label::negative;  // ties resolve to negative
    }
    // Ternary: pointwise minimization of the per-point loss contribution
    // (positive region: w_fp*(1-p_lo)*N - p_lo*P; negative region:
    // w_fn*p_hi*P - (1-p_hi)*N; holdout: 0).  At unit weights this reduces
    // to the D_P/D_N comparisons at the interval endpoints, which never
    // overlap; ties go to holdout, and between the two decided regions to
    // negative.
    const double c_pos = w_fp * (1.0 - interval_.p_lo) * nv - interval_.p_lo * pv;
    const double c_neg = w_fn * interval_.p_hi * pv - (1.0 - interval_.p_hi) * nv;
    if (c_pos < c_neg && c_pos < 0.0) return Label::positive;
    if (c_neg <= c_pos && c_neg < 0.0) return Label::negative;
    return Label::holdout;
}

Label classify(const ClassificationRule& rule, LogPoint p) {
    if (!rule.domain().contains(p))
        throw DataError("classify: point outside the rule's domain");
    return rule.label_from_values(rule.pos_density().value(p), rule.neg_density().value(p));
}

double likelihood_ratio(const TruncatedDensity& pos, const TruncatedDensity& neg,
                        LogPoint p) {
    const double pv = pos.value(p);
    const double nv = neg.value(p);
    if (nv > 0.0) return pv / nv;
    if (pv > 0.0) return std::numeric_limits<double>::infinity();
    return 0.0;
}

DensityPairGrid DensityPairGrid::build(const TruncatedDensity& pos,
                                       const TruncatedDensity& neg,
                                       const QuadratureSpec& quad) {
    if (!(pos.domain() == neg.domain()))
        throw ConfigError("density grid: densities must share the same domain");
    DensityPairGrid grid;
    grid.domain = pos.domain();
    grid.axis = make_axis_rule(grid.domain.lo, grid.domain.hi, quad);
    const std::size_t n = grid.axis.nodes.size();
    grid.pos.resize(n * n);
    grid.neg.resize(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const LogPoint p{grid.axis.nodes[i], grid.axis.nodes[j]};
            grid.pos[j * n + i] = pos.value(p);
            grid.neg[j * n + i] = neg.value(p);
        }
    }
    return grid;
}

namespace {

// Shared region-mass accumulation; the labeler defaults to the rule itself.
DomainMasses accumulate_masses(const ClassificationRule& rule,
                               const DensityPairGrid& grid, const Labeler* labeler) {
    DomainMasses m;
    const std::size_t n = grid.nodes_per_axis();
    for (std::size_t j = 0; j < n; ++j) {
        const double wj = grid.axis.weights[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double w = wj * grid.axis.weights[i];
            const double pv = grid.pos[j * n + i];
            const double nv = grid.neg[j * n + i];
            Label label;
            if (labeler)
                label = (*labeler)(LogPoint{grid.axis.nodes[i], grid.axis.nodes[j]});
            else
                label = rule.label_from_values(pv, nv);
            switch (label) {
                case Label::positive:
                    m.pos_in_pos += w * pv;
                    m.neg_in_pos += w * nv;
                    break;
                case Label::negative:
                    m.pos_in_neg += w * pv;
                    m.neg_in_neg += w * nv;
                    break;
                default:
                    m.pos_in_holdout += w * pv;
                    m.neg_in_holdout += w * nv;
            }
        }
    }
    return m;
}

LossReport binary_report(const ClassificationRule& rule, const DomainMasses& m) {
    const double p = rule.prevalence();
    LossReport r;
    r.false_pos_mass = m.neg_in_pos;
    r.false_neg_mass = m.pos_in_neg;
    r.holdout_mass_pos = m.pos_in_holdout;
    r.holdout_mass_neg = m.neg_in_holdout;
    r.total = rule.weights().false_positive * (1.0 - p) * m.neg_in_pos +
              rule.weights().false_negative * p * m.pos_in_neg;
    return r;
}

double ternary_value(const ClassificationRule& rule, const DomainMasses& m) {
    const auto& iv = rule.interval();
    return rule.weights().false_positive * (1.0 - iv.p_lo) * m.neg_in_pos +
           rule.weights().false_negative * iv.p_hi * m.pos_in_neg -
           iv.p_lo * m.pos_in_pos - (1.0 - iv.p_hi) * m.neg_in_neg;
}

}  // namespace

DomainMasses domain_masses_on_grid(const ClassificationRule& rule,
                                   const DensityPairGrid& grid) {
    return accumulate_masses(rule, grid, nullptr);
}

DomainMasses domain_masses(const ClassificationRule& rule, const QuadratureSpec& quad) {
    const auto grid = DensityPairGrid::build(rule.pos_density(), rule.neg_density(), quad);
    return accumulate_masses(rule, grid, nullptr);
}

LossReport loss_binary(const ClassificationRule& rule, const QuadratureSpec& quad) {
    return binary_report(rule, domain_masses(rule, quad));
}

LossReport loss_binary_on_grid(const ClassificationRule& rule,
                               const DensityPairGrid& grid) {
    return binary_report(rule, accumulate_masses(rule, grid, nullptr));
}

LossReport loss_binary_with_labels(const ClassificationRule& rule,
                                   const QuadratureSpec& quad, const Labeler& labeler) {
    const auto grid = DensityPairGrid::build(rule.pos_density(), rule.neg_density(), quad);
    return binary_report(rule, accumulate_masses(rule, grid, &labeler));
}

double loss_ternary(const ClassificationRule& rule, const QuadratureSpec& quad) {
    return ternary_value(rule, domain_masses(rule, quad));
}

double loss_ternary_with_labels(const ClassificationRule& rule,
                                const QuadratureSpec& quad, const Labeler& labeler) {
    const auto grid = DensityPairGrid::build(rule.pos_density(), rule.neg_density(), quad);
    return ternary_value(rule, accumulate_masses(rule, grid, &labeler));
}

namespace {

// Marching squares over one scalar field f on a uniform lattice.  A corner
// is "inside" when f > 0; boundary crossings are linearly interpolated.
struct SegmentEnd {
    // Edge key: (horizontal? , i, j) of the lattice edge the point lies on.
    int horizontal;
    int i, j;
    bool operator<(const SegmentEnd& o) const {
        return std::tie(horizontal, i, j) < std::tie(o.horizontal, o.i, o.j);
    }
};

struct Segment {
    SegmentEnd a, b;
};

LogPoint edge_point(const SegmentEnd& e, const std::vector<double>& nodes,
                    const std::vector<double>& f, std::size_t n) {
    const double f0 = f[static_cast<std::size_t>(e.j) * n + e.i];
    double f1;
    LogPoint p0{nodes[e.i], nodes[e.j]}, p1;
    if (e.horizontal) {
        f1 = f[static_cast<std::size_t>(e.j) * n + e.i + 1];
        p1 = {nodes[e.i + 1], nodes[e.j]};
    } else {
        f1 = f[static_cast<std::size_t>(e.j + 1) * n + e.i];
        p1 = {nodes[e.i], nodes[e.j + 1]};
    }
    double t = (f0 == f1) ? 0.5 : f0 / (f0 - f1);
    t = std::clamp(t, 0.0, 1.0);
    return {p0.lx + t * (p1.lx - p0.lx), p0.ly + t * (p1.ly - p0.ly)};
}

std::vector<ContourPolyline> trace_level_set(const std::vector<double>& f,
                                             const std::vector<double>& nodes,
                                             BoundarySide side) {
    const std::size_t n = nodes.size();
    std::vector<Segment> segments;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const bool c0 = f[j * n + i] > 0.0;          // bottom-left
            const bool c1 = f[j * n + i + 1] > 0.0;      // bottom-right
            const bool c2 = f[(j + 1) * n + i + 1] > 0.0; // top-right
            const bool c3 = f[(j + 1) * n + i] > 0.0;    // top-left
            const int code = (c0 ? 1 : 0) | (c1 ? 2 : 0) | (c2 ? 4 : 0) | (c3 ? 8 : 0);
            if (code == 0 || code == 15) continue;

            const SegmentEnd bottom{1, static_cast<int>(i), static_cast<int>(j)};
            const SegmentEnd top{1, static_cast<int>(i), static_cast<int>(j + 1)};
            const SegmentEnd left{0, static_cast<int>(i), static_cast<int>(j)};
            const SegmentEnd right{0, static_cast<int>(i + 1), static_cast<int>(j)};

            switch (code) {
                case 1: case 14: segments.push_back({left, bottom}); break;
                case 2: case 13: segments.push_back({bottom, right}); break;
                case 3: case 12: segments.push_back({left, right}); break;
                case 4: case 11: segments.push_back({right, top}); break;
                case 6: case 9:  segments.push_back({bottom, top}); break;
                case 7: case 8:  segments.push_back({left, top}); break;
                case 5: case 10: {
                    // Saddle: disambiguate by the cell-center sign.
                    const double center = 0.25 * (f[j * n + i] + f[j * n + i + 1] +
                                                  f[(j + 1) * n + i + 1] + f[(j + 1) * n + i]);
                    const bool center_in = center > 0.0;
                    if ((code == 5) == center_in) {
                        segments.push_back({left, top});
                        segments.push_back({bottom, right});
                    } else {
                        segments.push_back({left, bottom});
                        segments.push_back({right, top});
                    }
                    break;
                }
                default: break;
            }
        }
    }

    // Chain segments into polylines by walking shared edge keys.
    std::map<SegmentEnd, std::vector<std::size_t>> by_end;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        by_end[segments[s].a].push_back(s);
        by_end[segments[s].b].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    std::vector<ContourPolyline> polylines;

    auto next_unused = [&](const SegmentEnd& e, std::size_t skip) -> std::ptrdiff_t {
        auto it = by_end.find(e);
        if (it == by_end.end()) return -1;
        for (std::size_t s : it->second)
            if (!used[s] && s != skip) return static_cast<std::ptrdiff_t>(s);
        return -1;
    };

    for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
        if (used[s0]) continue;
        std::vector<SegmentEnd> chain{segments[s0].a, segments[s0].b};
        used[s0] = true;
        // Extend forward.
        for (;;) {
            const std::ptrdiff_t nxt = next_unused(chain.back(), s0);
            if (nxt < 0) break;
            used[nxt] = true;
            const auto& seg = segments[nxt];
            chain.push_back((seg.a < chain.back() || chain.back() < seg.a) ? seg.a : seg.b);
        }
        // Extend backward.
        for (;;) {
            const std::ptrdiff_t nxt = next_unused(chain.front(), s0);
            if (nxt < 0) break;
            used[nxt] = true;
            const auto& seg = segments[nxt];
            chain.insert(chain.begin(),
                         (seg.a < chain.front() || chain.front() < seg.a) ? seg.a : seg.b);
        }
        ContourPolyline poly;
        poly.side = side;
        poly.closed = !(chain.front() < chain.back()) && !(chain.back() < chain.front());
        if (poly.closed) chain.pop_back();
        poly.points.reserve(chain.size());
        for (const auto& e : chain) poly.points.push_back(edge_point(e, nodes, f, n));
        polylines.push_back(std::move(poly));
    }
    return polylines;
}

}  // namespace

std::vector<ContourPolyline> boundary_contour(const ClassificationRule& rule,
                                              int resolution) {
    if (resolution < 64)
        throw ConfigError("boundary_contour: resolution must be >= 64");
    const DomainSpec dom = rule.domain();
    const std::size_t n = static_cast<std::size_t>(resolution) + 1;
    std::vector<double> nodes(n);
    const double h = dom.width() / resolution;
    for (std::size_t i = 0; i < n; ++i) nodes[i] = dom.lo + h * i;

    const double w_fp = rule.weights().false_positive;
    const double w_fn = rule.weights().false_negative;
    auto field = [&](double p_level, bool negative_side) {
        std::vector<double> f(n * n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                const LogPoint pt{nodes[i], nodes[j]};
                const double pv = rule.pos_density().value(pt);
                const double nv = rule.neg_density().value(pt);
                if (rule.kind() == RuleKind::binary)
                    f[j * n + i] = w_fn * p_level * pv - w_fp * (1.0 - p_level) * nv;
                else if (!negative_side)
                    f[j * n + i] = p_level * pv - w_fp * (1.0 - p_level) * nv;
                else
                    f[j * n + i] = w_fn * p_level * pv - (1.0 - p_level) * nv;
            }
        }
        return f;
    };

    std::vector<ContourPolyline> out;
    if (rule.kind() == RuleKind::binary) {
        out = trace_level_set(field(rule.prevalence(), false), nodes, BoundarySide::binary);
    } else {
        out = trace_level_set(field(rule.interval().p_lo, false), nodes, BoundarySide::lower);
        auto upper = trace_level_set(field(rule.interval().p_hi, true), nodes,
                                     BoundarySide::upper);
        out.insert(out.end(), std::make_move_iterator(upper.begin()),
                   std::make_move_iterator(upper.end()));
    }
    return out;
}

ThreeSigmaRule three_sigma_rule(std::span<const LogPoint> negative_points) {
    const std::size_t n = negative_points.size();
    if (n < 2) throw DataError("three_sigma_rule: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (const auto& p : negative_points) {
        mx += p.lx;
        my += p.ly;
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0;
    for (const auto& p : negative_points) {
        vx += (p.lx - mx) * (p.lx - mx);
        vy += (p.ly - my) * (p.ly - my);
    }
    vx /= (n - 1);
    vy /= (n - 1);
    return {mx + 3.0 * std::sqrt(vx), my + 3.0 * std::sqrt(vy)};
}

}  // namespace seroclass
