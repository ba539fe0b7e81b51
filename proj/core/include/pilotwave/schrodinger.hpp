#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pilotwave/grid.hpp"

namespace pilotwave {

/// Time-independent external scalar potential.
class Potential {
public:
    enum class Kind { free, harmonic, tabulated };

    static Potential free();
    /// V = m omega^2 |x - center|^2 / 2 (minimum-image distance).
    static Potential harmonic(double omega, const Point& center = {});
    static Potential tabulated(RealField values);

    Kind kind() const noexcept { return kind_; }
    double omega() const noexcept { return omega_; }
    const Point& center() const noexcept { return center_; }
    bool is_free() const noexcept { return kind_ == Kind::free; }

    /// Samples V on the grid. Tabulated potentials must live on the same grid.
    RealField sample(const GridSpec& grid, const Units& units) const;

private:
    Kind kind_ = Kind::free;
    double omega_ = 0.0;
    Point center_{};
    std::optional<RealField> table_;
};

enum class Propagator { split_step, implicit_midpoint };

std::string to_string(Propagator p);

struct PropagationResult {
    /// Stored frames with equally spaced, strictly increasing time tags.
    std::vector<ComplexField> frames;
    double dt = 0.0;
    std::size_t frame_stride = 1;
    Propagator method = Propagator::split_step;

    double frame_interval() const noexcept { return dt * static_cast<double>(frame_stride); }
    const GridSpec& grid() const { return frames.front().grid; }
};

/// Strang-split Fourier propagation: half potential kick, exact kinetic step
/// in Fourier space, half potential kick. Frames are stored every
/// `frame_stride` steps, starting with psi0; `steps` must be a multiple of it.
PropagationResult evolve_split_step(const ComplexField& psi0, const Potential& potential, double dt,
                                    std::size_t steps, std::size_t frame_stride, const Units& units = {});

struct ImplicitMidpointOptions {
    double tolerance = 1e-14;
    std::size_t max_iterations = 1000;
};

/// Crank-Nicolson (implicit midpoint) stepping with the second-order finite
/// difference Laplacian; each step solves (1 + i dt H / 2hbar) psi' = (1 - i dt H / 2hbar) psi
/// with BiCGSTAB. Throws ConvergenceError if a solve stalls.
PropagationResult evolve_implicit_midpoint(const ComplexField& psi0, const Potential& potential, double dt,
                                           std::size_t steps, std::size_t frame_stride, const Units& units = {},
                                           const ImplicitMidpointOptions& options = {});

/// <psi|H|psi> with the spectral kinetic operator, divided by <psi|psi>.
double energy_expectation(const ComplexField& psi, const Potential& potential, const Units& units = {});

/// <a|b> over the box.
Complex inner_product(const ComplexField& a, const ComplexField& b);

/// Relative L2 distance ||a - b|| / ||b||.
double relative_l2(const ComplexField& a, const ComplexField& b);

}  // namespace pilotwave
