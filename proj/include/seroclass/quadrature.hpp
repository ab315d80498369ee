#ifndef SEROCLASS_QUADRATURE_HPP_
#define SEROCLASS_QUADRATURE_HPP_

#include <cstddef>
#include <vector>

#include "seroclass/types.hpp"

namespace seroclass {

enum class QuadScheme { tensor_trapezoid, tensor_gauss_legendre };

struct QuadratureSpec {
    int nodes_per_axis = 512;
    QuadScheme scheme = QuadScheme::tensor_gauss_legendre;

    void validate() const {
        if (nodes_per_axis < 16)
            throw ConfigError("quadrature: nodes_per_axis must be >= 16");
    }
    QuadratureSpec coarsened() const {
        return {nodes_per_axis / 2, scheme};
    }
};

// Gauss-Legendre nodes and weights on [-1,1] (Newton iteration on the
// Legendre recurrence).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// One-dimensional rule over [lo,hi]; the tensor product of two copies
// covers the square domain.  Node order is ascending.
struct AxisRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

AxisRule make_axis_rule(double lo, double hi, const QuadratureSpec& spec);

// Tensor-product rule over a square domain.  Integrals are accumulated in
// a fixed row-major order so results are bitwise reproducible for a given
// node count.
struct TensorGrid {
    DomainSpec domain;
    AxisRule axis;  // shared by both axes

    std::size_t nodes_per_axis() const { return axis.nodes.size(); }

    template <typename F>
    double integrate(F&& f) const {
        double total = 0.0;
        for (std::size_t j = 0; j < axis.nodes.size(); ++j) {
            double row = 0.0;
            for (std::size_t i = 0; i < axis.nodes.size(); ++i)
                row += axis.weights[i] * f(LogPoint{axis.nodes[i], axis.nodes[j]});
            total += axis.weights[j] * row;
        }
        return total;
    }
};

TensorGrid make_grid(const DomainSpec& domain, const QuadratureSpec& spec);

}  // namespace seroclass

#endif  // SEROCLASS_QUADRATURE_HPP_
