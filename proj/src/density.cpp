#include "seroclass/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seroclass/rng.hpp"

namespace seroclass {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void NegativeModelParams::validate() const {
    if (!(theta > 0.0 && k > 0.0 && alpha > 0.0 && beta > 0.0) ||
        !std::isfinite(theta) || !std::isfinite(k) || !std::isfinite(alpha) ||
        !std::isfinite(mu) || !std::isfinite(beta))
        throw ConfigError("negative model: theta, k, alpha, beta must be positive and finite");
}

void PositiveModelParams::validate() const {
    if (!(alpha > 0.0 && beta_shape > 0.0 && theta > 0.0 && z_scale > 0.0) ||
        !std::isfinite(alpha) || !std::isfinite(beta_shape) || !std::isfinite(theta) ||
        !std::isfinite(mu) || !std::isfinite(z_scale))
        throw ConfigError("positive model: alpha, beta_shape, theta, z_scale must be positive and finite");
}

std::string to_string(Family f) {
    switch (f) {
        case Family::negative: return "negative";
        case Family::positive: return "positive";
        default: return "gridded";
    }
}

Family family_from_string(const std::string& s) {
    if (s == "negative") return Family::negative;
    if (s == "positive") return Family::positive;
    if (s == "gridded") return Family::gridded;
    throw ConfigError("unknown density family: " + s);
}

double eval_negative_shape(const NegativeModelParams& params, LogPoint p) {
    const auto [z, w] = rotate(p);
    if (z < 0.0) return 0.0;
    if (z == 0.0) {
        if (params.k > 1.0) return 0.0;
        if (params.k < 1.0) return std::numeric_limits<double>::infinity();
        // k == 1: the z^(k-1) factor is identically one.
        const double d = (w - params.mu) / params.alpha;
        return std::exp(-0.5 * d * d) /
               (std::sqrt(kTwoPi) * params.alpha * params.theta);
    }
    const double grow = std::exp(z / params.beta);
    const double d = (w - params.mu) / (params.alpha * grow);
    const double lg = (params.k - 1.0) * std::log(z) - z / params.theta -
                      params.k * std::log(params.theta) - std::lgamma(params.k) -
                      0.5 * std::log(kTwoPi) - std::log(params.alpha) -
                      z / params.beta - 0.5 * d * d;
    return std::exp(lg);
}

double eval_positive_shape(const PositiveModelParams& params, LogPoint p) {
    const auto [u, w] = rotate(p);
    const double z = u / params.z_scale;
    if (z <= 0.0 || z >= 1.0) return 0.0;
    const double lg = std::lgamma(params.alpha + params.beta_shape) -
                      std::lgamma(params.alpha) - std::lgamma(params.beta_shape) +
                      (params.alpha - 1.0) * std::log(z) +
                      (params.beta_shape - 1.0) * std::log1p(-z) -
                      std::log(params.theta) - 0.5 * std::log(kTwoPi * z) -
                      (w - params.mu) * (w - params.mu) /
                          (2.0 * params.theta * params.theta * z);
    return std::exp(lg);
}

void GriddedData::validate() const {
    if (xs.size() < 2 || ys.size() < 2)
        throw DataError("gridded density: need at least 2 nodes per axis");
    if (values.size() != xs.size() * ys.size())
        throw DataError("gridded density: values size does not match node grid");
    if (!std::is_sorted(xs.begin(), xs.end()) || !std::is_sorted(ys.begin(), ys.end()))
        throw DataError("gridded density: node coordinates must be ascending");
}

double GriddedData::interpolate(LogPoint p) const {
    if (p.lx < xs.front() || p.lx > xs.back() || p.ly < ys.front() || p.ly > ys.back())
        return 0.0;
    auto cell = [](const std::vector<double>& v, double t) {
        auto it = std::upper_bound(v.begin(), v.end(), t);
        std::size_t i = (it == v.begin()) ? 0 : (it - v.begin() - 1);
        return std::min(i, v.size() - 2);
    };
    const std::size_t i = cell(xs, p.lx);
    const std::size_t j = cell(ys, p.ly);
    const double tx = (p.lx - xs[i]) / (xs[i + 1] - xs[i]);
    const double ty = (p.ly - ys[j]) / (ys[j + 1] - ys[j]);
    const std::size_t nx = xs.size();
    const double v00 = values[j * nx + i];
    const double v10 = values[j * nx + i + 1];
    const double v01 = values[(j + 1) * nx + i];
    const double v11 = values[(j + 1) * nx + i + 1];
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 +
           (1 - tx) * ty * v01 + tx * ty * v11;
}

TruncatedDensity::TruncatedDensity(Model model, DomainSpec domain, double norm_const,
                                   double shape_integral, double refine_delta_rel)
    : model_(std::move(model)),
      domain_(domain),
      norm_const_(norm_const),
      shape_integral_(shape_integral),
      refine_delta_rel_(refine_delta_rel) {}

Family TruncatedDensity::family() const {
    if (std::holds_alternative<NegativeModelParams>(model_)) return Family::negative;
    if (std::holds_alternative<PositiveModelParams>(model_)) return Family::positive;
    return Family::gridded;
}

const NegativeModelParams& TruncatedDensity::negative_params() const {
    return std::get<NegativeModelParams>(model_);
}
const PositiveModelParams& TruncatedDensity::positive_params() const {
    return std::get<PositiveModelParams>(model_);
}
const GriddedData& TruncatedDensity::gridded() const {
    return std::get<GriddedData>(model_);
}

double TruncatedDensity::shape(LogPoint p) const {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, NegativeModelParams>)
                return eval_negative_shape(m, p);
            else if constexpr (std::is_same_v<T, PositiveModelParams>)
                return eval_positive_shape(m, p);
            else
                return m.interpolate(p);
        },
        model_);
}

double TruncatedDensity::value(LogPoint p) const {
    if (!domain_.contains(p)) return 0.0;
    return norm_const_ * shape(p);
}

namespace {

template <typename Shape>
double grid_mass(const DomainSpec& domain, const QuadratureSpec& quad, Shape&& f) {
    const TensorGrid grid = make_grid(domain, quad);
    const double total = grid.integrate(f);
    if (!std::isfinite(total))
        throw NumericError("normalize: non-finite shape values encountered");
    return total;
}

template <typename Shape>
TruncatedDensity normalize_shape(TruncatedDensity::Model model, DomainSpec domain,
                                 const QuadratureSpec& quad, Shape&& f) {
    domain.validate();
    quad.validate();
    const double total = grid_mass(domain, quad, f);
    if (total <= 0.0)
        throw NumericError("normalize: zero total mass on domain");
    const double coarse = grid_mass(domain, quad.coarsened(), f);
    const double delta = std::abs(coarse - total) / total;
    return TruncatedDensity(std::move(model), domain, 1.0 / total, total, delta);
}

// Mass of tabulated values over their own node set (non-uniform composite
// trapezoid), optionally strided for the convergence check.
double gridded_mass(const GriddedData& g, std::size_t stride) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < g.xs.size(); i += stride) xs.push_back(g.xs[i]);
    for (std::size_t j = 0; j < g.ys.size(); j += stride) ys.push_back(g.ys[j]);
    if (xs.size() < 2 || ys.size() < 2) return 0.0;
    auto axis_weight = [](const std::vector<double>& v, std::size_t i) {
        if (i == 0) return 0.5 * (v[1] - v[0]);
        if (i == v.size() - 1) return 0.5 * (v[i] - v[i - 1]);
        return 0.5 * (v[i + 1] - v[i - 1]);
    };
    const std::size_t nx = g.xs.size();
    double total = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        double row = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            row += axis_weight(xs, i) * g.values[(j * stride) * nx + i * stride];
        total += axis_weight(ys, j) * row;
    }
    return total;
}

}  // namespace

TruncatedDensity normalize(const NegativeModelParams& params, DomainSpec domain,
                           const QuadratureSpec& quad) {
    params.validate();
    return normalize_shape(params, domain, quad,
                           [&](LogPoint p) { return eval_negative_shape(params, p); });
}

TruncatedDensity normalize(const PositiveModelParams& params, DomainSpec domain,
                           const QuadratureSpec& quad) {
    params.validate();
    return normalize_shape(params, domain, quad,
                           [&](LogPoint p) { return eval_positive_shape(params, p); });
}

TruncatedDensity normalize(GriddedData grid, DomainSpec domain,
                           const QuadratureSpec& quad) {
    grid.validate();
    domain.validate();
    quad.validate();
    const double total = gridded_mass(grid, 1);
    if (!std::isfinite(total))
        throw NumericError("normalize: non-finite shape values encountered");
    if (total <= 0.0)
        throw NumericError("normalize: zero total mass on domain");
    const double coarse = gridded_mass(grid, 2);
    const double delta = std::abs(coarse - total) / total;
    return TruncatedDensity(std::move(grid), domain, 1.0 / total, total, delta);
}

std::vector<LogPoint> sample(const TruncatedDensity& density, std::size_t n,
                             std::uint64_t seed) {
    if (density.family() == Family::gridded)
        throw DataError("sample: gridded densities are not samplable");
    std::vector<LogPoint> out;
    out.reserve(n);
    if (n == 0) return out;

    auto rng = make_rng(seed);
    const DomainSpec& dom = density.domain();
    std::size_t attempts = 0;

    auto check_acceptance = [&]() {
        if (attempts >= 65536 && static_cast<double>(out.size()) < 1e-3 * attempts)
            throw NumericError("sample: acceptance rate below 1e-3 (pathological parameters)");
    };

    if (density.family() == Family::negative) {
        const auto& p = density.negative_params();
        std::gamma_distribution<double> gamma_z(p.k, p.theta);
        std::normal_distribution<double> unit;
        while (out.size() < n) {
            ++attempts;
            const double z = gamma_z(rng);
            const double w = p.mu + p.alpha * std::exp(z / p.beta) * unit(rng);
            const LogPoint pt = unrotate(z, w);
            if (dom.contains(pt)) out.push_back(pt);
            check_acceptance();
        }
    } else {
        const auto& p = density.positive_params();
        std::gamma_distribution<double> ga(p.alpha, 1.0);
        std::gamma_distribution<double> gb(p.beta_shape, 1.0);
        std::normal_distribution<double> unit;
        while (out.size() < n) {
            ++attempts;
            const double a = ga(rng), b = gb(rng);
            const double z = a / (a + b);
            const double w = p.mu + p.theta * std::sqrt(z) * unit(rng);
            const LogPoint pt = unrotate(z * p.z_scale, w);
            if (dom.contains(pt)) out.push_back(pt);
            check_acceptance();
        }
    }
    return out;
}

double to_linear_units(const TruncatedDensity& density, double x, double y) {
    if (!(x > 0.0) || !(y > 0.0))
        throw DataError("to_linear_units: coordinates must be strictly positive");
    return density.value({std::log(x), std::log(y)}) / (x * y);
}

TruncatedDensity convolve_noise(const TruncatedDensity& density,
                                const GriddedData& noise,
                                const QuadratureSpec& quad) {
    noise.validate();
    quad.validate();

    auto uniform_step = [](const std::vector<double>& v, const char* what) {
        const double h = v[1] - v[0];
        for (std::size_t i = 1; i + 1 < v.size(); ++i)
            if (std::abs((v[i + 1] - v[i]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw DataError(std::string("convolve_noise: ") + what +
                                " grid must be uniformly spaced");
        return h;
    };
    const double hx = uniform_step(noise.xs, "noise");
    const double hy = uniform_step(noise.ys, "noise");
    if (std::abs(hx - hy) > 1e-9 * hx ||
        std::abs(noise.xs.front() - noise.ys.front()) > 1e-9 ||
        std::abs(noise.xs.back() - noise.ys.back()) > 1e-9)
        throw DataError("convolve_noise: noise grid must have a square support");

    // Noise must integrate to one (uniform-weight Riemann sum on its grid).
    double noise_mass = 0.0;
    for (double v : noise.values) noise_mass += v;
    noise_mass *= hx * hy;
    if (std::abs(noise_mass - 1.0) > 1e-6)
        throw DataError("convolve_noise: noise kernel does not integrate to 1");

    // Sample the input density on a uniform grid whose spacing matches the
    // noise grid.
    const DomainSpec dom = density.domain();
    const int n = quad.nodes_per_axis;
    const double h = dom.width() / (n - 1);
    if (std::abs(h - hx) > 1e-9 * h)
        throw DataError("convolve_noise: grid resolution mismatch between density and noise");

    std::vector<double> in(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            in[static_cast<std::size_t>(j) * n + i] =
                density.value({dom.lo + h * i, dom.lo + h * j});

    const std::size_t kx = noise.xs.size(), ky = noise.ys.size();
    const std::size_t mx = n + kx - 1, my = n + ky - 1;
    GriddedData out;
    out.xs.resize(mx);
    out.ys.resize(my);
    for (std::size_t a = 0; a < mx; ++a) out.xs[a] = dom.lo + noise.xs.front() + h * a;
    for (std::size_t b = 0; b < my; ++b) out.ys[b] = dom.lo + noise.ys.front() + h * b;
    out.values.assign(mx * my, 0.0);

    // Direct quadrature over the source grid; trapezoid weights on the
    // source keep the total mass consistent with the input normalization.
    auto src_weight = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * h : h; };
    for (int j = 0; j < n; ++j) {
        const double wj = src_weight(j);
        for (int i = 0; i < n; ++i) {
            const double sw = in[static_cast<std::size_t>(j) * n + i] * wj * src_weight(i);
            if (sw == 0.0) continue;
            for (std::size_t kb = 0; kb < ky; ++kb) {
                const std::size_t b = j + kb;
                double* dst = &out.values[b * mx + i];
                const double* ker = &noise.values[kb * kx];
                for (std::size_t ka = 0; ka < kx; ++ka) dst[ka] += sw * ker[ka];
            }
        }
    }

    DomainSpec enlarged{dom.lo + noise.xs.front(), dom.hi + noise.xs.back()};
    TruncatedDensity result = normalize(std::move(out), enlarged, quad);
    if (std::abs(result.shape_integral() - 1.0) > 1e-5)
        throw NumericError("convolve_noise: convolved mass deviates from 1 by more than 1e-5");
    return result;
}

}  // namespace seroclass
