#include "pilotwave/bohm.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"
#include "pilotwave/stats.hpp"

namespace pilotwave {

VectorField b_field(const ComplexField& f, DerivativeScheme scheme, const NodeMaskPolicy& policy,
                    const Units& units) {
    require_finite(f, "b_field");
    if (!(policy.relative_threshold > 0.0 && policy.relative_threshold < 1.0)) {
        throw ValidationError("node mask threshold must lie in (0, 1)");
    }
    const auto& g = f.grid;
    const int dim = g.dim();
    const auto grad = gradient(f, scheme);
    const auto grad_conj = gradient(conj(f), scheme);

    double max_abs2 = 0.0;
    double scale = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        max_abs2 = std::max(max_abs2, std::norm(f.values[j]));
        double g2 = 0.0;
        for (int a = 0; a < dim; ++a) g2 += std::norm(grad[a].values[j]);
        scale = std::max(scale, 2.0 * std::abs(f.values[j]) * std::sqrt(g2));
    }
    if (!(max_abs2 > 0.0)) throw DegenerateFieldError("b_field: field is identically zero");

    VectorField b(g, f.time);
    const double cutoff = policy.relative_threshold * max_abs2;
    const double residue_bound = 1e-12 * std::max(scale, max_abs2);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double rho = std::norm(f.values[j]);
        if (rho < cutoff) {
            b.mask[j] = 0;
            continue;
        }
        for (int a = 0; a < dim; ++a) {
            const Complex numerator = std::conj(f.values[j]) * grad[a].values[j] - grad_conj[a].values[j] * f.values[j];
            // (hbar / 2i) * numerator must be real.
            if (std::abs(numerator.real()) > residue_bound) {
                throw NumericalError("b_field: two-sided derivative has a real residue of " +
                                     std::to_string(numerator.real()));
            }
            b.components[a][j] = units.hbar * numerator.imag() / (2.0 * rho);
        }
    }
    if (b.valid_count() == 0) throw DegenerateFieldError("b_field: every point is masked as a node");
    return b;
}

VectorField velocity_field(const ComplexField& f, DerivativeScheme scheme, const NodeMaskPolicy& policy,
                           const Units& units) {
    VectorField v = b_field(f, scheme, policy, units);
    for (int a = 0; a < f.grid.dim(); ++a) {
        for (auto& c : v.components[a]) c /= units.mass;
    }
    return v;
}

GuidanceField::GuidanceField(const PropagationResult& frames, DerivativeScheme scheme, const NodeMaskPolicy& policy,
                             const Units& units) {
    if (frames.frames.size() < 2) throw ValidationError("guidance needs at least two stored frames");
    fields_.reserve(frames.frames.size());
    for (const auto& frame : frames.frames) {
        fields_.push_back(velocity_field(frame, scheme, policy, units));
        times_.push_back(frame.time);
    }
}

std::optional<Point> GuidanceField::velocity(const Point& x, double t) const {
    const double t0 = times_.front();
    const double dt = times_[1] - times_[0];
    const double u = std::clamp((t - t0) / dt, 0.0, static_cast<double>(times_.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(u), times_.size() - 2);
    const double w = u - static_cast<double>(i);
    const auto lo = interpolate_linear(fields_[i], x);
    if (!lo) return std::nullopt;
    if (w == 0.0) return lo;
    const auto hi = interpolate_linear(fields_[i + 1], x);
    if (!hi) return std::nullopt;
    Point out{};
    for (int a = 0; a < kMaxDim; ++a) out[a] = (1.0 - w) * (*lo)[a] + w * (*hi)[a];
    return out;
}

namespace {

Point axpy(const Point& x, double h, const Point& v) {
    return {x[0] + h * v[0], x[1] + h * v[1], x[2] + h * v[2]};
}

bool inside(const GridSpec& g, const Point& p) {
    for (int a = 0; a < g.dim(); ++a) {
        if (!(p[a] >= g.origin(a) && p[a] < g.origin(a) + g.extent(a))) return false;
    }
    return true;
}

}  // namespace

Trajectory integrate_trajectory(const GuidanceField& guidance, const Point& x0, const TrajectoryOptions& options) {
    const auto& g = guidance.grid();
    if (!inside(g, x0)) throw ValidationError("trajectory start lies outside the box");
    if (options.substeps == 0) throw ValidationError("substeps must be >= 1");
    const auto& times = guidance.times();
    const auto v0 = guidance.velocity(x0, times.front());
    if (!v0) throw NodeError("velocity is undefined at the trajectory start (node)");

    Trajectory traj;
    traj.samples.reserve(times.size());
    traj.samples.push_back({times.front(), x0, *v0, 0.0});
    Point x = x0;
    for (std::size_t frame = 1; frame < times.size(); ++frame) {
        const double t_start = times[frame - 1];
        const double h = (times[frame] - t_start) / static_cast<double>(options.substeps);
        for (std::size_t s = 0; s < options.substeps; ++s) {
            const double t = t_start + static_cast<double>(s) * h;
            const auto k1 = guidance.velocity(x, t);
            if (!k1) {
                traj.node_encountered = true;
                return traj;
            }
            const auto k2 = guidance.velocity(g.wrap(axpy(x, 0.5 * h, *k1)), t + 0.5 * h);
            if (!k2) {
                traj.node_encountered = true;
                return traj;
            }
            const auto k3 = guidance.velocity(g.wrap(axpy(x, 0.5 * h, *k2)), t + 0.5 * h);
            if (!k3) {
                traj.node_encountered = true;
                return traj;
            }
            const auto k4 = guidance.velocity(g.wrap(axpy(x, h, *k3)), t + h);
            if (!k4) {
                traj.node_encountered = true;
                return traj;
            }
            for (int a = 0; a < g.dim(); ++a) {
                x[a] += h / 6.0 * ((*k1)[a] + 2.0 * (*k2)[a] + 2.0 * (*k3)[a] + (*k4)[a]);
            }
            x = g.wrap(x);
        }
        const auto v = guidance.velocity(x, times[frame]);
        if (!v) {
            traj.node_encountered = true;
            return traj;
        }
        traj.samples.push_back({times[frame], x, *v, 0.0});
    }
    return traj;
}

Trajectory integrate_trajectory(const PropagationResult& frames, const Point& x0, DerivativeScheme scheme,
                                const NodeMaskPolicy& policy, const Units& units, const TrajectoryOptions& options) {
    return integrate_trajectory(GuidanceField(frames, scheme, policy, units), x0, options);
}

std::vector<Point> sample_born(const ComplexField& f, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("sample_born needs n >= 1");
    require_finite(f, "sample_born");
    const auto& g = f.grid;
    const RealField density = abs2(f);
    const double max_density = *std::max_element(density.values.begin(), density.values.end());
    if (!(max_density > 0.0)) throw DegenerateFieldError("sample_born: field is identically zero");

    UniformStream uniform(seed);
    std::vector<Point> out;
    out.reserve(n);
    if (g.dim() == 1) {
        const DensityCdf1D cdf(density);
        for (std::size_t i = 0; i < n; ++i) out.push_back(g.wrap(Point{cdf.inverse(uniform()), 0.0, 0.0}));
        return out;
    }

    double mean = 0.0;
    for (double d : density.values) mean += d;
    mean /= static_cast<double>(density.size());
    const double acceptance = mean / max_density;
    if (acceptance < 1e-3) {
        throw PathologicalDensityError("rejection sampling acceptance rate " + std::to_string(acceptance) +
                                       " is below 1e-3");
    }
    while (out.size() < n) {
        Point p{};
        for (int a = 0; a < g.dim(); ++a) p[a] = g.origin(a) + uniform() * g.extent(a);
        const double u = uniform();
        if (u * max_density < interpolate_linear(density.values, g, p)) out.push_back(g.wrap(p));
    }
    return out;
}

Ensemble integrate_ensemble(const GuidanceField& guidance, std::span<const Point> starts, std::uint64_t seed,
                            const TrajectoryOptions& options, bool frozen) {
    Ensemble ensemble;
    ensemble.rng_seed = seed;
    ensemble.trajectories.resize(starts.size());
    const auto& times = guidance.times();
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!frozen) {
                ensemble.trajectories[i] = integrate_trajectory(guidance, starts[i], options);
                continue;
            }
            Trajectory& t = ensemble.trajectories[i];
            for (double time : times) t.samples.push_back({time, starts[i], Point{}, 0.0});
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                                            starts.size() / 64 + 1));
    if (threads == 1) {
        work(0, starts.size());
        return ensemble;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (starts.size() + threads - 1) / threads;
    for (std::size_t k = 0; k < threads; ++k) {
        const std::size_t begin = k * chunk;
        const std::size_t end = std::min(starts.size(), begin + chunk);
        if (begin < end) pool.emplace_back(work, begin, end);
    }
    return ensemble;
}

std::size_t frame_index(const PropagationResult& frames, double t) {
    const double t0 = frames.frames.front().time;
    const double step = frames.frame_interval();
    const double u = (t - t0) / step;
    const double r = std::round(u);
    if (r < 0.0 || r >= static_cast<double>(frames.frames.size()) || std::abs(u - r) > 1e-9 * std::max(1.0, std::abs(u))) {
        throw ValidationError("time " + std::to_string(t) + " is not a stored frame time");
    }
    return static_cast<std::size_t>(r);
}

EquivarianceResult equivariance_statistic(const PropagationResult& frames, const Ensemble& ensemble, double t_check) {
    const std::size_t index = frame_index(frames, t_check);
    const ComplexField& psi = frames.frames[index];
    const auto& g = psi.grid;

    std::vector<Point> positions;
    positions.reserve(ensemble.trajectories.size());
    for (const auto& traj : ensemble.trajectories) {
        if (traj.samples.size() > index) positions.push_back(traj.samples[index].position);
    }
    EquivarianceResult result;
    result.survivors = positions.size();
    result.aborted = ensemble.trajectories.size() - positions.size();
    if (ensemble.trajectories.empty() ||
        static_cast<double>(result.survivors) < 0.99 * static_cast<double>(ensemble.trajectories.size())) {
        throw NodeError(std::to_string(result.aborted) + " of " + std::to_string(ensemble.trajectories.size()) +
                        " trajectories stopped at nodes before t_check; fewer than 99% survive");
    }

    const RealField density = abs2(psi);
    if (g.dim() == 1) {
        const DensityCdf1D cdf(density);
        std::vector<double> xs;
        xs.reserve(positions.size());
        for (const auto& p : positions) xs.push_back(p[0]);
        result.kind = EquivarianceResult::Kind::ks_distance;
        result.statistic = ks_distance(std::move(xs), [&](double x) { return cdf(x); });
        return result;
    }

    // Blocks of grid cells; each sample is assigned through its nearest grid point.
    constexpr std::size_t kBlocksPerAxis = 8;
    std::size_t bins = 1;
    for (int a = 0; a < g.dim(); ++a) bins *= kBlocksPerAxis;
    auto block_of = [&](const std::array<std::size_t, kMaxDim>& idx) {
        std::size_t b = 0;
        for (int a = 0; a < g.dim(); ++a) b = b * kBlocksPerAxis + idx[a] * kBlocksPerAxis / g.points(a);
        return b;
    };
    std::vector<double> expected(bins, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        expected[block_of(g.unravel(j))] += density.values[j];
        total += density.values[j];
    }
    for (auto& e : expected) e *= static_cast<double>(positions.size()) / total;
    std::vector<double> observed(bins, 0.0);
    for (const auto& p : positions) {
        std::array<std::size_t, kMaxDim> idx{};
        for (int a = 0; a < g.dim(); ++a) {
            const auto n = static_cast<long long>(g.points(a));
            auto i = static_cast<long long>(std::llround((p[a] - g.origin(a)) / g.spacing(a)));
            i = ((i % n) + n) % n;
            idx[a] = static_cast<std::size_t>(i);
        }
        observed[block_of(idx)] += 1.0;
    }
    result.kind = EquivarianceResult::Kind::chi_square_p_value;
    result.statistic = chi_square_p_value(observed, expected);
    return result;
}

}  // namespace pilotwave
