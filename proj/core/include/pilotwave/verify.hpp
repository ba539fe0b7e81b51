#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilotwave/action_gauge.hpp"
#include "pilotwave/bohm.hpp"
#include "pilotwave/grid.hpp"
#include "pilotwave/schrodinger.hpp"

namespace pilotwave {

/// Summary norms of a discrete residual (LHS - RHS) over the unmasked points of
/// every frame it was evaluated on.
struct ResidualReport {
    std::string equation;
    /// L2 norm of the residual divided by the L2 norm of its largest individual term.
    double rel_l2 = 0.0;
    double l_inf = 0.0;
    double unmasked_fraction = 1.0;
    /// Points along the first axis.
    std::size_t n = 0;
    /// Spacing of the frames the time derivatives were taken over; 0 for
    /// single-time residuals.
    double dt = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    /// Where |residual| peaks.
    std::size_t worst_index = 0;
    double worst_time = 0.0;
    /// Measured order from a refinement pair, when one was attached.
    std::optional<double> convergence_order;
};

/// Pointwise residual values per frame, kept so that residuals of different
/// equations can be compared point by point.
struct ResidualField {
    std::string equation;
    GridSpec grid;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<std::vector<Complex>> values;
    /// Per-frame masks; an empty mask means every point is valid.
    std::vector<std::vector<std::uint8_t>> masks;
    /// Squared L2 norm of each individual term, summed over valid points.
    std::vector<double> term_norm_sq;

    void add_frame(double t, std::vector<Complex> residual, std::vector<std::uint8_t> mask = {});
    void add_term(std::size_t term, std::span<const Complex> values, std::span<const std::uint8_t> mask = {});
};

/// Reduces a residual field to its report. Throws DegenerateFieldError when no
/// point is unmasked.
ResidualReport summarize(const ResidualField& field);

/// log(coarse / fine) / log(refinement).
double convergence_order(double coarse_error, double fine_error, double refinement = 2.0);

struct ResidualOptions {
    DerivativeScheme scheme = DerivativeScheme::spectral;
    NodeMaskPolicy policy{};
};

// Action gradients go through action_gradient, so S may carry a 2 pi hbar
// winding across the box.
//
// Time derivatives come from the stored frames: centred differences inside,
// second-order one-sided stencils on the first and last frame. Series inputs
// need at least three equally spaced frames.

/// -(hbar^2/2m) lap Psi + V Psi - i hbar dPsi/dt.
ResidualField schrodinger_residual_field(const PropagationResult& frames, const Potential& potential,
                                         const Units& units = {}, const ResidualOptions& options = {});
ResidualReport schrodinger_residual(const PropagationResult& frames, const Potential& potential,
                                    const Units& units = {}, const ResidualOptions& options = {});

/// The field equation for psi in the gauge of S:
/// -(hbar^2/2m) lap psi - i hbar dpsi/dt - (i hbar/2) div((grad S/m) psi)
/// - (i hbar/2)(grad S/m).grad psi + |grad S|^2 psi / 2m + (dS/dt) psi (+ V psi).
ResidualField model_field_residual_field(const GaugeTriple& triple, const Potential& potential = Potential::free(),
                                         const ResidualOptions& options = {});
ResidualReport model_field_residual(const GaugeTriple& triple, const Potential& potential = Potential::free(),
                                    const ResidualOptions& options = {});

/// Schrodinger operator on Psi = psi exp(iS/hbar) minus exp(iS/hbar) times the
/// field-equation bracket on psi. Vanishes for any smooth psi and S.
ResidualField gauge_identity_residual_field(std::span<const ComplexField> small_psi,
                                            std::span<const RealField> action, const Units& units = {},
                                            const ResidualOptions& options = {});
ResidualReport gauge_identity_residual(std::span<const ComplexField> small_psi, std::span<const RealField> action,
                                       const Units& units = {}, const ResidualOptions& options = {});

/// div[(hbar/2im) psi* <-> grad psi + P ratio grad S] + d(psi* psi)/dt.
/// `ratio` is the speed-to-|b| factor; 1/m closes the model. For rel_l2 each
/// flux, scaled by 2 pi over the longest box side, counts as a term too.
ResidualReport continuity_residual(const GaugeTriple& triple, std::span<const RealField> probability, double ratio,
                                   const ResidualOptions& options = {});

/// grad S . b + |grad S|^2 / 2 on the unmasked points of b.
ResidualReport eikonal_identity_residual(const RealField& action, const VectorField& b, const Units& units = {},
                                         const ResidualOptions& options = {});
/// Same, accumulated over matching series.
ResidualReport eikonal_identity_residual(std::span<const RealField> action, std::span<const VectorField> b,
                                         const Units& units = {}, const ResidualOptions& options = {});

/// dS/dt over the series. The residual is normalised by the larger of
/// ||dS/dt|| and ||S - mean S|| / (time span).
ResidualReport stationary_action_residual(std::span<const RealField> action);

/// |b| - m |v| on the common unmasked points.
ResidualReport mass_ratio_residual(const VectorField& b, const VectorField& v, double mass);
ResidualReport mass_ratio_residual(std::span<const VectorField> b, std::span<const VectorField> v, double mass);

/// |v_gauge - v_guidance| where v_gauge = (b(psi) + grad S)/m with
/// psi = Psi exp(-iS/hbar) and v_guidance = b(Psi)/m.
ResidualReport velocity_gauge_residual(const ComplexField& big_psi, const RealField& action, const Units& units = {},
                                       const ResidualOptions& options = {});
ResidualReport velocity_gauge_residual(std::span<const ComplexField> big_psi, std::span<const RealField> action,
                                       const Units& units = {}, const ResidualOptions& options = {});

/// Pointwise comparison of exp(iS/hbar) * model_field_residual_field with the
/// Schrodinger residual of Psi, relative to the largest Schrodinger term.
ResidualReport gauge_transfer_discrepancy(const GaugeTriple& triple, const Potential& potential = Potential::free(),
                                          const ResidualOptions& options = {});

/// A point particle at `position` moving with `velocity`.
struct ParticleState {
    Point position{};
    Point velocity{};
};

struct SourceTerm {
    ComplexField field;
    /// Integral of |source|.
    double l1_mass = 0.0;
    /// Integral of sigma |v| (hbar |grad phi| / |phi| + |b|): the size the source
    /// terms take when nothing cancels.
    double reference_scale = 0.0;
};

/// Right-hand side of the non-statistical field equation with the particle
/// density replaced by mollified_delta(position, epsilon):
/// (i hbar/2) div(w phi) + (i hbar/2) w.grad phi + (w.b) phi, with
/// w = sigma (v - (|v|/|b|) b) / |phi|^2. Throws NodeError when a masked point
/// or a zero of b lies within 5 epsilon of the particle.
SourceTerm source_term_field(const ComplexField& phi, const ParticleState& particle, double epsilon,
                             const NodeMaskPolicy& policy = {}, const Units& units = {},
                             DerivativeScheme scheme = DerivativeScheme::spectral);

/// Fraction of the L1 mass of `field` within `radius` (minimum image) of `center`.
double l1_fraction_within(const ComplexField& field, const Point& center, double radius);

}  // namespace pilotwave
