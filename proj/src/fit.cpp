#include "seroclass/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "seroclass/rng.hpp"

namespace seroclass {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> x0, const NelderMeadOptions& opts) {
    const std::size_t dim = x0.size();
    std::vector<std::vector<double>> verts(dim + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < dim; ++i) verts[i + 1][i] += opts.initial_step;
    std::vector<double> fv(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(verts[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
    SimplexResult result;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[dim], second = order[dim - 1];

        double diameter = 0.0;
        for (std::size_t i = 1; i <= dim; ++i)
            for (std::size_t d = 0; d < dim; ++d)
                diameter = std::max(diameter,
                                    std::abs(verts[order[i]][d] - verts[best][d]));
        result.iterations = iter;
        if (diameter < opts.diameter_tol) {
            result.converged = true;
            break;
        }

        for (std::size_t d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i <= dim; ++i)
                if (i != worst) s += verts[i][d];
            centroid[d] = s / dim;
        }
        for (std::size_t d = 0; d < dim; ++d)
            xr[d] = centroid[d] + (centroid[d] - verts[worst][d]);
        const double fr = f(xr);

        if (fr < fv[best]) {
            for (std::size_t d = 0; d < dim; ++d)
                xe[d] = centroid[d] + 2.0 * (centroid[d] - verts[worst][d]);
            const double fe = f(xe);
            if (fe < fr) {
                verts[worst] = xe;
                fv[worst] = fe;
            } else {
                verts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            verts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const auto& base = outside ? xr : verts[worst];
            for (std::size_t d = 0; d < dim; ++d)
                xc[d] = centroid[d] + 0.5 * (base[d] - centroid[d]);
            const double fc = f(xc);
            if (fc < (outside ? fr : fv[worst])) {
                verts[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < dim; ++d)
                        verts[i][d] = verts[best][d] + 0.5 * (verts[i][d] - verts[best][d]);
                    fv[i] = f(verts[i]);
                }
            }
        }
    }

    const std::size_t best =
        std::min_element(fv.begin(), fv.end()) - fv.begin();
    result.x = verts[best];
    result.fval = fv[best];
    return result;
}

namespace {

struct RotatedData {
    std::vector<double> z, w;
};

RotatedData rotate_points(std::span<const LogPoint> points) {
    RotatedData d;
    d.z.reserve(points.size());
    d.w.reserve(points.size());
    for (const auto& p : points) {
        if (!std::isfinite(p.lx) || !std::isfinite(p.ly))
            throw DataError("fit: non-finite point");
        const auto [z, w] = rotate(p);
        d.z.push_back(z);
        d.w.push_back(w);
    }
    return d;
}

void require_points(std::size_t n) {
    if (n < 10) throw DataError("fit: need at least 10 points");
}

// Negative-family log-likelihood from precomputed rotated coordinates.
// Only the width-growth term needs a per-point pass; everything else
// reduces to sufficient statistics.
struct NegativeLL {
    const RotatedData& d;
    double sum_z = 0.0, sum_lnz = 0.0;

    explicit NegativeLL(const RotatedData& data) : d(data) {
        for (double z : d.z) {
            if (z <= 0.0)
                throw DataError("fit: negative family requires points with lx + ly > 0");
            sum_z += z;
            sum_lnz += std::log(z);
        }
    }

    double operator()(const NegativeModelParams& p) const {
        const std::size_t n = d.z.size();
        double sw2 = 0.0, sw1 = 0.0, sw0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-2.0 * d.z[i] / p.beta);
            sw2 += d.w[i] * d.w[i] * e;
            sw1 += d.w[i] * e;
            sw0 += e;
        }
        const double quad = sw2 - 2.0 * p.mu * sw1 + p.mu * p.mu * sw0;
        return (p.k - 1.0) * sum_lnz - sum_z / p.theta - sum_z / p.beta -
               quad / (2.0 * p.alpha * p.alpha) -
               static_cast<double>(n) *
                   (p.k * std::log(p.theta) + std::lgamma(p.k) +
                    0.5 * kLogTwoPi + std::log(p.alpha));
    }
};

// Positive-family log-likelihood; fully reducible to sufficient statistics.
struct PositiveLL {
    std::size_t n = 0;
    double z_scale;
    double sum_lnz = 0.0, sum_ln1mz = 0.0, sum_w2oz = 0.0, sum_woz = 0.0, sum_1oz = 0.0;

    PositiveLL(const RotatedData& d, double zs) : z_scale(zs) {
        n = d.z.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double z = d.z[i] / z_scale;
            if (z <= 0.0 || z >= 1.0)
                throw DataError(
                    "fit: positive family requires 0 < (lx + ly)/(z_scale*sqrt(2)) < 1");
            sum_lnz += std::log(z);
            sum_ln1mz += std::log1p(-z);
            sum_w2oz += d.w[i] * d.w[i] / z;
            sum_woz += d.w[i] / z;
            sum_1oz += 1.0 / z;
        }
    }

    double operator()(const PositiveModelParams& p) const {
        const double quad = sum_w2oz - 2.0 * p.mu * sum_woz + p.mu * p.mu * sum_1oz;
        return static_cast<double>(n) *
                   (std::lgamma(p.alpha + p.beta_shape) - std::lgamma(p.alpha) -
                    std::lgamma(p.beta_shape) - std::log(p.theta) -
                    0.5 * kLogTwoPi - std::log(z_scale)) +
               (p.alpha - 1.0) * sum_lnz + (p.beta_shape - 1.0) * sum_ln1mz -
               0.5 * sum_lnz - quad / (2.0 * p.theta * p.theta);
    }
};

// Runs Nelder-Mead from the init plus `restarts` perturbed starts, keeping
// the best final likelihood.  The transform maps the optimizer vector to
// parameters (positives are optimized in log space).
template <typename Params, typename LL, typename ToVec, typename FromVec>
FitResult<Params> run_fit(const LL& ll, const Params& init, const FitOptions& opts,
                          ToVec to_vec, FromVec from_vec) {
    NelderMeadOptions nm;
    nm.max_iterations = opts.max_iterations;
    nm.diameter_tol = opts.diameter_tol;

    auto objective = [&](std::span<const double> v) -> double {
        const double val = ll(from_vec(v));
        return std::isfinite(val) ? -val : std::numeric_limits<double>::max();
    };

    const std::vector<double> v0 = to_vec(init);
    SimplexResult best = nelder_mead(objective, v0, nm);

    auto rng = make_rng(opts.restart_seed);
    std::normal_distribution<double> perturb(0.0, opts.restart_spread);
    for (int r = 0; r < opts.restarts; ++r) {
        std::vector<double> start = v0;
        for (double& c : start) c += perturb(rng);
        SimplexResult run = nelder_mead(objective, start, nm);
        if (run.fval < best.fval) best = run;
    }

    FitResult<Params> result;
    result.params = from_vec(best.x);
    result.log_likelihood = ll(result.params);
    result.init_log_likelihood = ll(init);
    result.iterations = best.iterations;
    result.converged = best.converged;
    // The init is a vertex of the first simplex, so the winner can never be
    // worse; guard against pathological objective plateaus anyway.
    if (result.log_likelihood < result.init_log_likelihood) {
        result.params = init;
        result.log_likelihood = result.init_log_likelihood;
        result.converged = false;
    }
    return result;
}

}  // namespace

double negative_log_likelihood(std::span<const LogPoint> points,
                               const NegativeModelParams& params) {
    const RotatedData d = rotate_points(points);
    return NegativeLL(d)(params);
}

double positive_log_likelihood(std::span<const LogPoint> points,
                               const PositiveModelParams& params) {
    const RotatedData d = rotate_points(points);
    return PositiveLL(d, params.z_scale)(params);
}

FitResult<NegativeModelParams> fit_negative_mle(std::span<const LogPoint> points,
                                                const NegativeModelParams& init,
                                                const FitOptions& opts) {
    require_points(points.size());
    init.validate();
    const RotatedData d = rotate_points(points);
    const NegativeLL ll(d);
    auto to_vec = [](const NegativeModelParams& p) {
        return std::vector<double>{std::log(p.theta), std::log(p.k), std::log(p.alpha),
                                   p.mu, std::log(p.beta)};
    };
    auto from_vec = [](std::span<const double> v) {
        NegativeModelParams p;
        p.theta = std::exp(v[0]);
        p.k = std::exp(v[1]);
        p.alpha = std::exp(v[2]);
        p.mu = v[3];
        p.beta = std::exp(v[4]);
        return p;
    };
    return run_fit(ll, init, opts, to_vec, from_vec);
}

FitResult<PositiveModelParams> fit_positive_mle(std::span<const LogPoint> points,
                                                const PositiveModelParams& init,
                                                const FitOptions& opts) {
    require_points(points.size());
    init.validate();
    const RotatedData d = rotate_points(points);
    const PositiveLL ll(d, init.z_scale);
    const double zs = init.z_scale;  // fixed modeling choice, not fitted
    auto to_vec = [](const PositiveModelParams& p) {
        return std::vector<double>{std::log(p.alpha), std::log(p.beta_shape),
                                   std::log(p.theta), p.mu};
    };
    auto from_vec = [zs](std::span<const double> v) {
        PositiveModelParams p;
        p.alpha = std::exp(v[0]);
        p.beta_shape = std::exp(v[1]);
        p.theta = std::exp(v[2]);
        p.mu = v[3];
        p.z_scale = zs;
        return p;
    };
    return run_fit(ll, init, opts, to_vec, from_vec);
}

NegativeModelParams negative_moment_init(std::span<const LogPoint> points) {
    require_points(points.size());
    const RotatedData d = rotate_points(points);
    const std::size_t n = d.z.size();
    double mz = 0.0, mw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mz += d.z[i];
        mw += d.w[i];
    }
    mz /= n;
    mw /= n;
    double vz = 0.0, vw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        vz += (d.z[i] - mz) * (d.z[i] - mz);
        vw += (d.w[i] - mw) * (d.w[i] - mw);
    }
    vz /= n;
    vw /= n;
    NegativeModelParams p;
    p.theta = std::max(vz / std::max(mz, 1e-9), 1e-6);  // gamma: var = k theta^2
    p.k = std::max(mz / p.theta, 1e-3);
    p.mu = mw;
    p.beta = std::max(2.0 * mz, 0.5);
    // Crude width guess: undo the average growth factor.
    double mean_grow = 0.0;
    for (double z : d.z) mean_grow += std::exp(z / p.beta);
    mean_grow /= n;
    p.alpha = std::max(std::sqrt(vw) / mean_grow, 1e-6);
    return p;
}

PositiveModelParams positive_moment_init(std::span<const LogPoint> points,
                                         double z_scale) {
    require_points(points.size());
    const RotatedData d = rotate_points(points);
    const std::size_t n = d.z.size();
    double mz = 0.0, mw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mz += d.z[i] / z_scale;
        mw += d.w[i];
    }
    mz /= n;
    mw /= n;
    double vz = 0.0, vw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        vz += (d.z[i] / z_scale - mz) * (d.z[i] / z_scale - mz);
        vw += (d.w[i] - mw) * (d.w[i] - mw);
    }
    vz /= n;
    vw /= n;
    PositiveModelParams p;
    p.z_scale = z_scale;
    // Beta method of moments.
    const double m = std::min(std::max(mz, 1e-3), 1.0 - 1e-3);
    const double common = std::max(m * (1.0 - m) / std::max(vz, 1e-9) - 1.0, 0.1);
    p.alpha = m * common;
    p.beta_shape = (1.0 - m) * common;
    p.mu = mw;
    p.theta = std::max(std::sqrt(vw / m), 1e-6);
    return p;
}

}  // namespace seroclass
