#ifndef SEROCLASS_DENSITY_HPP_
#define SEROCLASS_DENSITY_HPP_

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "seroclass/quadrature.hpp"
#include "seroclass/types.hpp"

namespace seroclass {

class TruncatedDensity;
using DensityPtr = std::shared_ptr<const TruncatedDensity>;

// Hybrid gamma-Gaussian model for the negative population.  In rotated
// coordinates the shape factorizes as
//   gamma_pdf(z; k, theta) * normal_pdf(w; mu, alpha * exp(z / beta)),
// i.e. a gamma ridge along the diagonal whose transverse Gaussian width
// grows with distance from the origin.
struct NegativeModelParams {
    double theta = 1.0;  // gamma scale
    double k = 2.0;      // gamma shape
    double alpha = 0.1;  // base Gaussian width
    double mu = 0.0;     // Gaussian center in w
    double beta = 1.0;   // width-growth length scale

    void validate() const;
};

// Hybrid beta-Gaussian model for the positive population:
//   beta_pdf(z; alpha, beta_shape) * normal_pdf(w; mu, theta * sqrt(z))
// with z = (lx + ly) / (z_scale * sqrt(2)).  z_scale rescales the diagonal
// coordinate onto the standard beta support (0,1); the shape is zero
// outside it.
struct PositiveModelParams {
    double alpha = 2.0;       // beta shape
    double beta_shape = 2.0;  // beta shape
    double theta = 0.3;       // Gaussian width scale
    double mu = 0.0;          // Gaussian center in w
    double z_scale = 9.0;     // upper-bound scale for the diagonal coordinate

    void validate() const;
};

enum class Family { negative, positive, gridded };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Tabulated density values on a rectangular set of node coordinates,
// stored row-major (index = iy * nx + ix).  Evaluation between nodes is
// bilinear; outside the node hull the value is zero.
struct GriddedData {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> values;

    double interpolate(LogPoint p) const;
    void validate() const;
};

// Unnormalized shape evaluations (total functions on finite inputs; zero
// outside the family's support).
double eval_negative_shape(const NegativeModelParams& params, LogPoint p);
double eval_positive_shape(const PositiveModelParams& params, LogPoint p);

// A parametric or gridded PDF restricted to a rectangular domain, with the
// normalization constant computed by quadrature so the truncated density
// integrates to one.
class TruncatedDensity {
public:
    using Model = std::variant<NegativeModelParams, PositiveModelParams, GriddedData>;

    TruncatedDensity(Model model, DomainSpec domain, double norm_const,
                     double shape_integral, double refine_delta_rel);

    Family family() const;
    const DomainSpec& domain() const { return domain_; }
    double norm_const() const { return norm_const_; }
    // Integral of the unnormalized shape over the domain.
    double shape_integral() const { return shape_integral_; }
    // Relative change of the shape integral when halving nodes_per_axis.
    double refine_delta_rel() const { return refine_delta_rel_; }
    bool refine_converged() const { return refine_delta_rel_ < 1e-6; }

    const Model& model() const { return model_; }
    const NegativeModelParams& negative_params() const;
    const PositiveModelParams& positive_params() const;
    const GriddedData& gridded() const;

    // Unnormalized shape at p (no domain truncation applied).
    double shape(LogPoint p) const;
    // Normalized density: shape * norm_const inside the domain, 0 outside.
    double value(LogPoint p) const;

private:
    Model model_;
    DomainSpec domain_;
    double norm_const_;
    double shape_integral_;
    double refine_delta_rel_;
};

// Computes the normalization over `domain` by quadrature, together with a
// half-resolution convergence check.  Throws NumericError for zero or
// non-finite mass.
TruncatedDensity normalize(const NegativeModelParams& params, DomainSpec domain = {},
                           const QuadratureSpec& quad = {});
TruncatedDensity normalize(const PositiveModelParams& params, DomainSpec domain = {},
                           const QuadratureSpec& quad = {});
TruncatedDensity normalize(GriddedData grid, DomainSpec domain = {},
                           const QuadratureSpec& quad = {});

// Draws n points from the truncated density: z from the exact marginal
// (gamma or beta), w from the conditional Gaussian, rotated back and
// rejection-sampled against the domain rectangle.  Deterministic for a
// given seed.  Throws NumericError if the acceptance rate falls below 1e-3.
std::vector<LogPoint> sample(const TruncatedDensity& density, std::size_t n,
                             std::uint64_t seed);

// Density expressed in the original measurement units via the 1/(x*y)
// log-transform Jacobian.  Coordinates must be strictly positive.
double to_linear_units(const TruncatedDensity& density, double x, double y);

// Discretized convolution with a measurement-noise kernel given on a
// uniform displacement grid: out(r) = integral S(r0) E(r - r0) dr0,
// evaluated on a uniform grid over the enlarged domain and renormalized.
// Both the density grid (tensor_trapezoid) and the noise grid must share
// the same spacing.
TruncatedDensity convolve_noise(const TruncatedDensity& density,
                                const GriddedData& noise,
                                const QuadratureSpec& quad = {});

}  // namespace seroclass

#endif  // SEROCLASS_DENSITY_HPP_
