#pragma once

#include <array>
#include <span>
#include <vector>

#include "pilotwave/bohm.hpp"
#include "pilotwave/grid.hpp"
#include "pilotwave/schrodinger.hpp"

namespace pilotwave {

/// Pointwise b and v of the particle.
struct PointKinematics {
    Point b{};
    Point v{};
};

/// L = |b||v| - b.v. Nonnegative, zero exactly when b and v are co-oriented.
double lagrangian_value(const PointKinematics& k) noexcept;

/// p = (|b| / |v|) v - b, the derivative of L with respect to velocity.
/// Throws ValidationError when |v| = 0.
Point generalized_momentum(const PointKinematics& k);

/// Fills `action` along a trajectory with the trapezoid integral of
/// L(b(x(t), t), v(t)) from the first sample. `b_frames[k]` must carry the time
/// of sample k. A masked b stops the integration: the returned trajectory ends
/// at the last sample with a defined action and has node_encountered set.
Trajectory action_along_trajectory(const Trajectory& trajectory, std::span<const VectorField> b_frames);

/// Psi = psi exp(iS/hbar).
ComplexField gauge_forward(const ComplexField& small_psi, const RealField& action, const Units& units = {});
/// psi = Psi exp(-iS/hbar).
ComplexField gauge_inverse(const ComplexField& big_psi, const RealField& action, const Units& units = {});

/// Linear winding of an action field per axis, in units of 2 pi hbar / extent.
/// Only exp(iS/hbar) has to be periodic, so S may grow by 2 pi hbar n across
/// the box (S = 2x on [-pi, pi) has n = 2). The integers are read off the jump
/// between the last and first sample of every grid line.
std::array<long, kMaxDim> action_winding(const RealField& action, const Units& units = {});

/// grad S: the winding ramp is removed, the periodic remainder differentiated
/// with `scheme`, and the ramp slope added back.
VectorField action_gradient(const RealField& action, DerivativeScheme scheme, const Units& units = {});

/// grad S = m v - b on the intersection of both masks.
VectorField grad_S_field(const VectorField& v, const VectorField& b, double mass);

/// The wavefunction Psi, the action S and psi = Psi exp(-iS/hbar) on a shared
/// time axis.
struct GaugeTriple {
    PropagationResult big_psi;
    std::vector<RealField> action;
    std::vector<ComplexField> small_psi;
    Units units;
};

/// Builds the triple, checking that every action frame matches its Psi frame
/// in grid and time and that |psi| = |Psi| to 1e-12.
GaugeTriple make_gauge_triple(PropagationResult big_psi, std::vector<RealField> action, const Units& units = {});

}  // namespace pilotwave
