#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pilotwave/grid.hpp"
#include "pilotwave/schrodinger.hpp"

namespace pilotwave {

/// Points where |f|^2 < relative_threshold * max |f|^2 count as nodes and are
/// masked out of b, v and every quantity derived from them.
struct NodeMaskPolicy {
    double relative_threshold = 1e-10;
};

/// b = (hbar / 2i) (f* grad f - (grad f*) f) / (f* f), the momentum-like field
/// built from the two-sided derivative. Throws DegenerateFieldError when every
/// point is masked, and NumericalError if the two-sided numerator is not
/// imaginary to 1e-12 of the field scale.
VectorField b_field(const ComplexField& f, DerivativeScheme scheme, const NodeMaskPolicy& policy = {},
                    const Units& units = {});

/// Guidance velocity b_field(f) / m, sharing its mask.
VectorField velocity_field(const ComplexField& f, DerivativeScheme scheme, const NodeMaskPolicy& policy = {},
                           const Units& units = {});

struct TrajectorySample {
    double t = 0.0;
    Point position{};
    Point velocity{};
    double action = 0.0;
};

/// Samples are recorded at every stored frame time. An integration that runs
/// into a masked region stops there with `node_encountered` set.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    bool node_encountered = false;

    const TrajectorySample& back() const { return samples.back(); }
};

/// Velocity fields of every stored frame, interpolated linearly in time and
/// multilinearly in space.
class GuidanceField {
public:
    GuidanceField(const PropagationResult& frames, DerivativeScheme scheme, const NodeMaskPolicy& policy = {},
                  const Units& units = {});

    /// nullopt when any surrounding grid sample is masked.
    std::optional<Point> velocity(const Point& x, double t) const;

    const GridSpec& grid() const { return fields_.front().grid; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<VectorField>& fields() const { return fields_; }

private:
    std::vector<VectorField> fields_;
    std::vector<double> times_;
};

struct TrajectoryOptions {
    /// RK4 steps per stored frame interval.
    std::size_t substeps = 4;
};

/// Classical RK4 through the guidance field from x0 at the first frame time.
/// Throws ValidationError if x0 is outside the box, NodeError if the velocity
/// is undefined at x0.
Trajectory integrate_trajectory(const GuidanceField& guidance, const Point& x0, const TrajectoryOptions& options = {});
Trajectory integrate_trajectory(const PropagationResult& frames, const Point& x0, DerivativeScheme scheme,
                                const NodeMaskPolicy& policy = {}, const Units& units = {},
                                const TrajectoryOptions& options = {});

/// n i.i.d. positions from |f|^2 / int |f|^2. 1D inverts the cumulative
/// trapezoid; 2D and 3D use rejection against the grid maximum of the
/// multilinear density.
std::vector<Point> sample_born(const ComplexField& f, std::size_t n, std::uint64_t seed);

struct Ensemble {
    std::vector<Trajectory> trajectories;
    std::uint64_t rng_seed = 0;
};

/// Integrates one trajectory per start point. With `frozen` set the particles
/// stay at their start points with zero velocity, which is the negative control
/// for equivariance checks.
Ensemble integrate_ensemble(const GuidanceField& guidance, std::span<const Point> starts, std::uint64_t seed,
                            const TrajectoryOptions& options = {}, bool frozen = false);

struct EquivarianceResult {
    enum class Kind { ks_distance, chi_square_p_value };
    Kind kind = Kind::ks_distance;
    double statistic = 0.0;
    std::size_t survivors = 0;
    std::size_t aborted = 0;
};

/// Compares trajectory positions at t_check against |psi(t_check)|^2: KS
/// distance in 1D, binned chi-square p-value in 2D/3D. Throws NodeError if
/// fewer than 99% of the trajectories reached t_check.
EquivarianceResult equivariance_statistic(const PropagationResult& frames, const Ensemble& ensemble, double t_check);

/// Index of the stored frame whose time tag matches t (within 1e-9 of the
/// frame interval); throws ValidationError otherwise.
std::size_t frame_index(const PropagationResult& frames, double t);

}  // namespace pilotwave
