#include "seroclass/quadrature.hpp"

#include <cmath>

namespace seroclass {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Tricomi-style initial guess, then Newton on P_n(x) = 0.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        // Recompute derivative at the converged node for the weight.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

AxisRule make_axis_rule(double lo, double hi, const QuadratureSpec& spec) {
    spec.validate();
    const int n = spec.nodes_per_axis;
    AxisRule rule;
    if (spec.scheme == QuadScheme::tensor_gauss_legendre) {
        std::vector<double> x, w;
        gauss_legendre(n, x, w);
        rule.nodes.resize(n);
        rule.weights.resize(n);
        const double c = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
        for (int i = 0; i < n; ++i) {
            rule.nodes[i] = m + c * x[i];
            rule.weights[i] = c * w[i];
        }
    } else {
        // Composite trapezoid with endpoints included; uniform spacing is
        // required by the gridded-convolution path.
        rule.nodes.resize(n);
        rule.weights.resize(n);
        const double h = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) {
            rule.nodes[i] = lo + h * i;
            rule.weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
        }
    }
    return rule;
}

TensorGrid make_grid(const DomainSpec& domain, const QuadratureSpec& spec) {
    domain.validate();
    return {domain, make_axis_rule(domain.lo, domain.hi, spec)};
}

}  // namespace seroclass
