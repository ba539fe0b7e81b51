#include "pilotwave/schrodinger.hpp"

#include <cmath>
#include <functional>

#include "fft.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"

namespace pilotwave {

Potential Potential::free() { return Potential{}; }

Potential Potential::harmonic(double omega, const Point& center) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("harmonic potential needs omega > 0");
    Potential p;
    p.kind_ = Kind::harmonic;
    p.omega_ = omega;
    p.center_ = center;
    return p;
}

Potential Potential::tabulated(RealField values) {
    require_finite(values, "tabulated potential");
    Potential p;
    p.kind_ = Kind::tabulated;
    p.table_ = std::move(values);
    return p;
}

RealField Potential::sample(const GridSpec& grid, const Units& units) const {
    switch (kind_) {
        case Kind::free:
            return RealField(grid);
        case Kind::harmonic: {
            RealField v(grid);
            const double k = 0.5 * units.mass * omega_ * omega_;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const Point d = grid.displacement(grid.position(j), center_);
                v.values[j] = k * dot(d, d);
            }
            return v;
        }
        case Kind::tabulated:
            require_same_grid(grid, table_->grid, "tabulated potential");
            return *table_;
    }
    return RealField(grid);
}

std::string to_string(Propagator p) {
    return p == Propagator::split_step ? "split_step" : "implicit_midpoint";
}

namespace {

void validate_start(const ComplexField& psi0, double dt, std::size_t steps, std::size_t frame_stride) {
    require_finite(psi0, "initial state");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step dt must be > 0");
    if (frame_stride == 0) throw ValidationError("frame_stride must be >= 1");
    if (steps % frame_stride != 0) throw ValidationError("steps must be a multiple of frame_stride");
    const double n = norm_squared_integral(psi0);
    if (std::abs(n - 1.0) > 1e-8) {
        throw ValidationError("initial state is not normalised (norm^2 = " + std::to_string(n) + ")");
    }
}

using Vec = std::vector<Complex>;

Complex vdot(const Vec& a, const Vec& b) {
    Complex s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

double vnorm(const Vec& a) { return std::sqrt(std::real(vdot(a, a))); }

// Solves A x = b; x holds the initial guess on entry.
void bicgstab(const std::function<void(const Vec&, Vec&)>& apply, const Vec& b, Vec& x, double tol,
              std::size_t max_iter) {
    const std::size_t n = b.size();
    Vec r(n), r0(n), p(n, Complex{}), v(n, Complex{}), s(n), t(n);
    apply(x, t);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
    r0 = r;
    const double target = tol * std::max(vnorm(b), 1e-300);
    if (vnorm(r) <= target) return;
    Complex rho{1.0}, alpha{1.0}, omega{1.0};
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const Complex rho_new = vdot(r0, r);
        if (std::abs(rho_new) == 0.0) throw ConvergenceError("BiCGSTAB breakdown", it);
        const Complex beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        apply(p, v);
        alpha = rho / vdot(r0, v);
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (vnorm(s) <= target) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            return;
        }
        apply(s, t);
        const double tt = std::real(vdot(t, t));
        omega = tt > 0.0 ? vdot(t, s) / tt : Complex{};
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if (vnorm(r) <= target) return;
        if (std::abs(omega) == 0.0) throw ConvergenceError("BiCGSTAB stagnated", it);
    }
    throw ConvergenceError("implicit midpoint solve did not converge", max_iter);
}

}  // namespace

PropagationResult evolve_split_step(const ComplexField& psi0, const Potential& potential, double dt,
                                    std::size_t steps, std::size_t frame_stride, const Units& units) {
    validate_start(psi0, dt, steps, frame_stride);
    const auto& g = psi0.grid;
    const auto plan = detail::fft_plan(g);

    const RealField v = potential.sample(g, units);
    std::vector<Complex> half_kick(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) half_kick[j] = std::polar(1.0, -0.5 * dt * v.values[j] / units.hbar);

    std::vector<double> k2(g.size(), 0.0);
    for (int a = 0; a < g.dim(); ++a) {
        const auto k = detail::wavenumbers(g, a);
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double ka = k[g.unravel(j)[a]];
            k2[j] += ka * ka;
        }
    }
    std::vector<Complex> drift(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        drift[j] = std::polar(1.0, -dt * units.hbar * k2[j] / (2.0 * units.mass));
    }

    PropagationResult result{{psi0}, dt, frame_stride, Propagator::split_step};
    std::vector<Complex> psi = psi0.values;
    const bool kicks = !potential.is_free();
    for (std::size_t step = 1; step <= steps; ++step) {
        if (kicks) {
            for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kick[j];
        }
        plan->forward(psi);
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= drift[j];
        plan->inverse(psi);
        if (kicks) {
            for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= half_kick[j];
        }
        if (step % frame_stride == 0) {
            result.frames.emplace_back(g, psi, psi0.time + static_cast<double>(step) * dt);
        }
    }
    return result;
}

PropagationResult evolve_implicit_midpoint(const ComplexField& psi0, const Potential& potential, double dt,
                                           std::size_t steps, std::size_t frame_stride, const Units& units,
                                           const ImplicitMidpointOptions& options) {
    validate_start(psi0, dt, steps, frame_stride);
    const auto& g = psi0.grid;
    const RealField v = potential.sample(g, units);
    const double kinetic = -units.hbar * units.hbar / (2.0 * units.mass);
    const Complex tau(0.0, 0.5 * dt / units.hbar);

    // out = psi + sign * tau * H psi
    auto apply_h = [&](const Vec& in, Vec& out, double sign) {
        const ComplexField lap = laplacian(ComplexField(g, in, 0.0), DerivativeScheme::central2);
        out.resize(in.size());
        for (std::size_t j = 0; j < in.size(); ++j) {
            out[j] = in[j] + sign * tau * (kinetic * lap.values[j] + v.values[j] * in[j]);
        }
    };
    const std::function<void(const Vec&, Vec&)> lhs = [&](const Vec& in, Vec& out) { apply_h(in, out, 1.0); };

    PropagationResult result{{psi0}, dt, frame_stride, Propagator::implicit_midpoint};
    Vec psi = psi0.values;
    Vec rhs;
    for (std::size_t step = 1; step <= steps; ++step) {
        apply_h(psi, rhs, -1.0);
        Vec next = psi;
        bicgstab(lhs, rhs, next, options.tolerance, options.max_iterations);
        psi = std::move(next);
        if (step % frame_stride == 0) {
            result.frames.emplace_back(g, psi, psi0.time + static_cast<double>(step) * dt);
        }
    }
    return result;
}

Complex inner_product(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid, b.grid, "inner_product");
    Complex s{};
    for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a.values[j]) * b.values[j];
    return s * a.grid.cell_volume();
}

double relative_l2(const ComplexField& a, const ComplexField& b) {
    require_same_grid(a.grid, b.grid, "relative_l2");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += std::norm(a.values[j] - b.values[j]);
        den += std::norm(b.values[j]);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double energy_expectation(const ComplexField& psi, const Potential& potential, const Units& units) {
    const auto lap = laplacian(psi, DerivativeScheme::spectral);
    const RealField v = potential.sample(psi.grid, units);
    const double kinetic = -units.hbar * units.hbar / (2.0 * units.mass);
    Complex e{};
    double n = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) {
        e += std::conj(psi.values[j]) * (kinetic * lap.values[j] + v.values[j] * psi.values[j]);
        n += std::norm(psi.values[j]);
    }
    return e.real() / n;
}

}  // namespace pilotwave
