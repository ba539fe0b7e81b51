#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pilotwave/grid.hpp"

namespace pilotwave {

/// One complex field per axis.
using ComplexGradient = std::vector<ComplexField>;

/// Real scalar with a validity mask, produced by operators acting on masked
/// vector fields.
struct MaskedRealField {
    RealField field;
    std::vector<std::uint8_t> mask;
};

// Differential operators. The spectral scheme differentiates Fourier modes
// exactly (odd derivatives drop the Nyquist mode); central2 uses the
// second-order three-point stencils.

ComplexGradient gradient(const ComplexField& f, DerivativeScheme scheme);
/// Gradient of a real field; every point of the result is valid.
VectorField gradient(const RealField& f, DerivativeScheme scheme);

ComplexField laplacian(const ComplexField& f, DerivativeScheme scheme);
RealField laplacian(const RealField& f, DerivativeScheme scheme);

ComplexField divergence(std::span<const ComplexField> components, DerivativeScheme scheme);
/// Masked components are treated as zero; the output mask equals the input mask.
MaskedRealField divergence(const VectorField& f, DerivativeScheme scheme);

/// Integral of |f|^2 over the box by the grid's product rule.
double norm_squared_integral(const ComplexField& f);

/// Normalised isotropic Gaussian of standard deviation `epsilon` per axis,
/// summed over periodic images. Stands in for a point-mass density on the grid.
/// Throws ValidationError when epsilon < 3 * grid spacing.
RealField mollified_delta(const Point& center, double epsilon, const GridSpec& grid);

ComplexField conj(const ComplexField& f);
RealField abs2(const ComplexField& f);

/// Periodic multilinear interpolation of grid samples.
double interpolate_linear(std::span<const double> values, const GridSpec& grid, const Point& p);
/// As above, but nullopt if any of the surrounding samples is masked.
std::optional<Point> interpolate_linear(const VectorField& f, const Point& p);

/// Band-limited (trigonometric) interpolation of a field at arbitrary points.
class SpectralInterpolant {
public:
    explicit SpectralInterpolant(const ComplexField& f);
    Complex operator()(const Point& p) const;

private:
    GridSpec grid_;
    std::vector<Complex> coefficients_;
    std::array<std::vector<double>, kMaxDim> k_;
};

}  // namespace pilotwave
