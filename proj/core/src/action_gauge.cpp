#include "pilotwave/action_gauge.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"

namespace pilotwave {

double lagrangian_value(const PointKinematics& k) noexcept { return norm(k.b) * norm(k.v) - dot(k.b, k.v); }

Point generalized_momentum(const PointKinematics& k) {
    const double speed = norm(k.v);
    if (!(speed > 0.0)) throw ValidationError("generalized momentum is undefined for zero velocity");
    const double ratio = norm(k.b) / speed;
    Point p{};
    for (int a = 0; a < kMaxDim; ++a) p[a] = ratio * k.v[a] - k.b[a];
    return p;
}

Trajectory action_along_trajectory(const Trajectory& trajectory, std::span<const VectorField> b_frames) {
    Trajectory out;
    out.node_encountered = trajectory.node_encountered;
    if (trajectory.samples.empty()) return out;
    if (b_frames.size() < trajectory.samples.size()) {
        throw ValidationError("action_along_trajectory: fewer b frames than trajectory samples");
    }
    double previous_l = 0.0;
    double action = 0.0;
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        const auto& s = trajectory.samples[k];
        const auto& b = b_frames[k];
        const double tol = 1e-9 * std::max(1.0, std::abs(s.t));
        if (std::abs(b.time - s.t) > tol) {
            throw ValidationError("action_along_trajectory: b frame " + std::to_string(k) +
                                  " does not match the sample time");
        }
        const auto b_here = interpolate_linear(b, s.position);
        if (!b_here) {
            out.node_encountered = true;
            return out;
        }
        const double l = lagrangian_value({*b_here, s.velocity});
        if (k > 0) action += 0.5 * (s.t - trajectory.samples[k - 1].t) * (l + previous_l);
        previous_l = l;
        auto filled = s;
        filled.action = action;
        out.samples.push_back(filled);
    }
    return out;
}

namespace {

ComplexField rotate(const ComplexField& f, const RealField& action, double sign, const Units& units) {
    require_same_grid(f.grid, action.grid, "gauge map");
    if (std::abs(f.time - action.time) > 1e-12 * std::max(1.0, std::abs(f.time))) {
        throw ValidationError("gauge map: field and action carry different times");
    }
    ComplexField out(f.grid, f.time);
    for (std::size_t j = 0; j < f.size(); ++j) {
        out.values[j] = f.values[j] * std::polar(1.0, sign * action.values[j] / units.hbar);
    }
    return out;
}

}  // namespace

ComplexField gauge_forward(const ComplexField& small_psi, const RealField& action, const Units& units) {
    return rotate(small_psi, action, 1.0, units);
}

ComplexField gauge_inverse(const ComplexField& big_psi, const RealField& action, const Units& units) {
    return rotate(big_psi, action, -1.0, units);
}

std::array<long, kMaxDim> action_winding(const RealField& action, const Units& units) {
    const auto& g = action.grid;
    std::array<long, kMaxDim> winding{};
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t n = g.points(a);
        double jump = 0.0;
        std::size_t lines = 0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto idx = g.unravel(j);
            if (idx[a] != 0) continue;
            idx[a] = n - 1;
            jump += action.values[g.ravel(idx)] - action.values[j];
            ++lines;
        }
        // Last minus first spans (n - 1) cells; scale to the full period.
        jump = jump / static_cast<double>(lines) * static_cast<double>(n) / static_cast<double>(n - 1);
        winding[a] = std::lround(jump / (2.0 * std::numbers::pi * units.hbar));
    }
    return winding;
}

VectorField action_gradient(const RealField& action, DerivativeScheme scheme, const Units& units) {
    const auto& g = action.grid;
    const auto winding = action_winding(action, units);
    Point slope{};
    bool ramp = false;
    for (int a = 0; a < g.dim(); ++a) {
        slope[a] = 2.0 * std::numbers::pi * units.hbar * static_cast<double>(winding[a]) / g.extent(a);
        ramp = ramp || winding[a] != 0;
    }
    if (!ramp) return gradient(action, scheme);
    RealField periodic(g, action.time);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Point p = g.position(j);
        double r = 0.0;
        for (int a = 0; a < g.dim(); ++a) r += slope[a] * (p[a] - g.origin(a));
        periodic.values[j] = action.values[j] - r;
    }
    VectorField grad = gradient(periodic, scheme);
    for (int a = 0; a < g.dim(); ++a) {
        for (auto& c : grad.components[a]) c += slope[a];
    }
    return grad;
}

VectorField grad_S_field(const VectorField& v, const VectorField& b, double mass) {
    require_same_grid(v.grid, b.grid, "grad_S_field");
    VectorField out(v.grid, v.time);
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!v.mask[j] || !b.mask[j]) {
            out.mask[j] = 0;
            continue;
        }
        for (int a = 0; a < v.grid.dim(); ++a) out.components[a][j] = mass * v.components[a][j] - b.components[a][j];
    }
    return out;
}

GaugeTriple make_gauge_triple(PropagationResult big_psi, std::vector<RealField> action, const Units& units) {
    if (action.size() != big_psi.frames.size()) {
        throw ValidationError("gauge triple: need one action frame per wavefunction frame");
    }
    GaugeTriple triple{std::move(big_psi), std::move(action), {}, units};
    triple.small_psi.reserve(triple.action.size());
    for (std::size_t n = 0; n < triple.action.size(); ++n) {
        require_finite(triple.action[n], "gauge triple action");
        triple.small_psi.push_back(gauge_inverse(triple.big_psi.frames[n], triple.action[n], units));
        const auto& big = triple.big_psi.frames[n].values;
        const auto& small = triple.small_psi.back().values;
        for (std::size_t j = 0; j < big.size(); ++j) {
            const double scale = std::max(1.0, std::abs(big[j]));
            if (std::abs(std::abs(small[j]) - std::abs(big[j])) > 1e-12 * scale) {
                throw NumericalError("gauge triple: |psi| and |Psi| disagree");
            }
        }
    }
    return triple;
}

}  // namespace pilotwave
