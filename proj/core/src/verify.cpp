#include "pilotwave/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <functional>
#include <limits>

#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"

namespace pilotwave {

void ResidualField::add_frame(double t, std::vector<Complex> residual, std::vector<std::uint8_t> mask) {
    times.push_back(t);
    values.push_back(std::move(residual));
    masks.push_back(std::move(mask));
}

void ResidualField::add_term(std::size_t term, std::span<const Complex> term_values,
                             std::span<const std::uint8_t> mask) {
    if (term_norm_sq.size() <= term) term_norm_sq.resize(term + 1, 0.0);
    double s = 0.0;
    for (std::size_t j = 0; j < term_values.size(); ++j) {
        if (!mask.empty() && !mask[j]) continue;
        s += std::norm(term_values[j]);
    }
    term_norm_sq[term] += s;
}

ResidualReport summarize(const ResidualField& field) {
    ResidualReport r;
    r.equation = field.equation;
    r.n = field.grid.points(0);
    r.dt = field.dt;
    if (!field.times.empty()) {
        r.t_begin = field.times.front();
        r.t_end = field.times.back();
    }
    double sum = 0.0;
    std::size_t valid = 0;
    std::size_t total = 0;
    for (std::size_t n = 0; n < field.values.size(); ++n) {
        const auto& vals = field.values[n];
        const auto& mask = field.masks[n];
        total += vals.size();
        for (std::size_t j = 0; j < vals.size(); ++j) {
            if (!mask.empty() && !mask[j]) continue;
            ++valid;
            const double a = std::abs(vals[j]);
            sum += a * a;
            if (a > r.l_inf) {
                r.l_inf = a;
                r.worst_index = j;
                r.worst_time = field.times[n];
            }
        }
    }
    if (valid == 0) throw DegenerateFieldError(field.equation + " residual: no unmasked points");
    r.unmasked_fraction = static_cast<double>(valid) / static_cast<double>(total);
    double scale = 0.0;
    for (double t : field.term_norm_sq) scale = std::max(scale, t);
    if (scale > 0.0) {
        r.rel_l2 = std::sqrt(sum / scale);
    } else {
        r.rel_l2 = sum > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return r;
}

double convergence_order(double coarse_error, double fine_error, double refinement) {
    return std::log(coarse_error / fine_error) / std::log(refinement);
}

namespace {

double frame_spacing(std::span<const double> times) {
    if (times.size() < 3) throw ValidationError("time derivatives need at least three frames");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw ValidationError("frame times must increase");
    for (std::size_t n = 1; n < times.size(); ++n) {
        if (std::abs((times[n] - times[n - 1]) - dt) > 1e-9 * dt) {
            throw ValidationError("frame times are not equally spaced");
        }
    }
    return dt;
}

template <typename Series>
std::vector<double> times_of(const Series& s) {
    std::vector<double> t;
    t.reserve(s.size());
    for (const auto& f : s) t.push_back(f.time);
    return t;
}

// d/dt of a sampled series at frame n.
template <typename T>
std::vector<T> time_derivative(const std::function<const std::vector<T>&(std::size_t)>& at, std::size_t count,
                               std::size_t n, double dt) {
    const double inv = 1.0 / (2.0 * dt);
    std::vector<T> out(at(n).size());
    if (n == 0) {
        const auto &f0 = at(0), &f1 = at(1), &f2 = at(2);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (4.0 * (f1[j] - f0[j]) - (f2[j] - f0[j])) * inv;
    } else if (n == count - 1) {
        const auto &f0 = at(n), &f1 = at(n - 1), &f2 = at(n - 2);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = ((f2[j] - f0[j]) - 4.0 * (f1[j] - f0[j])) * inv;
    } else {
        const auto &fp = at(n + 1), &fm = at(n - 1);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = (fp[j] - fm[j]) * inv;
    }
    return out;
}

std::vector<Complex> complex_time_derivative(std::span<const ComplexField> s, std::size_t n, double dt) {
    return time_derivative<Complex>([&](std::size_t k) -> const std::vector<Complex>& { return s[k].values; },
                                    s.size(), n, dt);
}

std::vector<double> real_time_derivative(std::span<const RealField> s, std::size_t n, double dt) {
    return time_derivative<double>([&](std::size_t k) -> const std::vector<double>& { return s[k].values; },
                                   s.size(), n, dt);
}

std::vector<Complex> to_complex(const std::vector<double>& v) { return {v.begin(), v.end()}; }

// The six terms of the psi field equation, in the order
// kinetic, time, divergence, advection, quadratic, action rate.
using BracketTerms = std::array<std::vector<Complex>, 6>;

BracketTerms bracket_terms(const ComplexField& psi, const RealField& action, const std::vector<Complex>& dpsi_dt,
                           const std::vector<double>& daction_dt, const Units& units, DerivativeScheme scheme) {
    const auto& g = psi.grid;
    const std::size_t size = g.size();
    const int dim = g.dim();
    const double hbar = units.hbar;
    const double m = units.mass;
    const Complex i_hbar_half(0.0, 0.5 * hbar);

    const auto lap = laplacian(psi, scheme);
    const auto grad_psi = gradient(psi, scheme);
    const VectorField grad_s = action_gradient(action, scheme, units);

    std::vector<ComplexField> carried;
    carried.reserve(dim);
    for (int a = 0; a < dim; ++a) {
        ComplexField c(g, psi.time);
        for (std::size_t j = 0; j < size; ++j) c.values[j] = grad_s.components[a][j] / m * psi.values[j];
        carried.push_back(std::move(c));
    }
    const auto div = divergence(std::span<const ComplexField>(carried), scheme);

    BracketTerms t;
    for (auto& v : t) v.assign(size, Complex{});
    for (std::size_t j = 0; j < size; ++j) {
        double grad_s2 = 0.0;
        Complex advect{};
        for (int a = 0; a < dim; ++a) {
            const double gs = grad_s.components[a][j];
            grad_s2 += gs * gs;
            advect += gs / m * grad_psi[a].values[j];
        }
        t[0][j] = -hbar * hbar / (2.0 * m) * lap.values[j];
        t[1][j] = Complex(0.0, -hbar) * dpsi_dt[j];
        t[2][j] = -i_hbar_half * div.values[j];
        t[3][j] = -i_hbar_half * advect;
        t[4][j] = grad_s2 / (2.0 * m) * psi.values[j];
        t[5][j] = daction_dt[j] * psi.values[j];
    }
    return t;
}

void check_series(std::span<const ComplexField> psi, std::span<const RealField> action) {
    if (psi.size() != action.size()) throw ValidationError("wavefunction and action series differ in length");
    for (std::size_t n = 0; n < psi.size(); ++n) {
        require_same_grid(psi[n].grid, action[n].grid, "residual");
        if (std::abs(psi[n].time - action[n].time) > 1e-9 * std::max(1.0, std::abs(psi[n].time))) {
            throw ValidationError("wavefunction and action frames carry different times");
        }
    }
}

std::vector<std::uint8_t> mask_and(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] && b[j];
    return out;
}

}  // namespace

ResidualField schrodinger_residual_field(const PropagationResult& frames, const Potential& potential,
                                         const Units& units, const ResidualOptions& options) {
    const std::span<const ComplexField> series(frames.frames);
    const double dt = frame_spacing(times_of(frames.frames));
    const auto& g = frames.grid();
    const RealField v = potential.sample(g, units);
    ResidualField out{"schrodinger", g, dt, {}, {}, {}, {}};
    for (std::size_t n = 0; n < series.size(); ++n) {
        const auto& psi = series[n];
        const auto lap = laplacian(psi, options.scheme);
        const auto dpsi = complex_time_derivative(series, n, dt);
        std::vector<Complex> kin(g.size()), pot(g.size()), tim(g.size()), r(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            kin[j] = -units.hbar * units.hbar / (2.0 * units.mass) * lap.values[j];
            pot[j] = v.values[j] * psi.values[j];
            tim[j] = Complex(0.0, -units.hbar) * dpsi[j];
            r[j] = kin[j] + pot[j] + tim[j];
        }
        out.add_term(0, kin);
        out.add_term(1, pot);
        out.add_term(2, tim);
        out.add_frame(psi.time, std::move(r));
    }
    return out;
}

ResidualReport schrodinger_residual(const PropagationResult& frames, const Potential& potential, const Units& units,
                                    const ResidualOptions& options) {
    return summarize(schrodinger_residual_field(frames, potential, units, options));
}

ResidualField model_field_residual_field(const GaugeTriple& triple, const Potential& potential,
                                         const ResidualOptions& options) {
    const std::span<const ComplexField> psi(triple.small_psi);
    const std::span<const RealField> action(triple.action);
    check_series(psi, action);
    const double dt = frame_spacing(times_of(triple.small_psi));
    const auto& g = psi.front().grid;
    const RealField v = potential.sample(g, triple.units);
    ResidualField out{"model_field", g, dt, {}, {}, {}, {}};
    for (std::size_t n = 0; n < psi.size(); ++n) {
        const auto terms = bracket_terms(psi[n], action[n], complex_time_derivative(psi, n, dt),
                                         real_time_derivative(action, n, dt), triple.units, options.scheme);
        std::vector<Complex> pot(g.size());
        std::vector<Complex> r(g.size(), Complex{});
        for (std::size_t j = 0; j < g.size(); ++j) {
            pot[j] = v.values[j] * psi[n].values[j];
            r[j] = pot[j];
            for (const auto& t : terms) r[j] += t[j];
        }
        for (std::size_t k = 0; k < terms.size(); ++k) out.add_term(k, terms[k]);
        out.add_term(terms.size(), pot);
        out.add_frame(psi[n].time, std::move(r));
    }
    return out;
}

ResidualReport model_field_residual(const GaugeTriple& triple, const Potential& potential,
                                    const ResidualOptions& options) {
    return summarize(model_field_residual_field(triple, potential, options));
}

ResidualField gauge_identity_residual_field(std::span<const ComplexField> small_psi, std::span<const RealField> action,
                                            const Units& units, const ResidualOptions& options) {
    check_series(small_psi, action);
    const double dt = frame_spacing(times_of(std::vector<ComplexField>(small_psi.begin(), small_psi.end())));
    const auto& g = small_psi.front().grid;
    std::vector<ComplexField> big;
    big.reserve(small_psi.size());
    for (std::size_t n = 0; n < small_psi.size(); ++n) big.push_back(gauge_forward(small_psi[n], action[n], units));
    const std::span<const ComplexField> big_span(big);

    ResidualField out{"gauge_identity", g, dt, {}, {}, {}, {}};
    for (std::size_t n = 0; n < small_psi.size(); ++n) {
        const auto lap = laplacian(big[n], options.scheme);
        const auto dbig = complex_time_derivative(big_span, n, dt);
        auto terms = bracket_terms(small_psi[n], action[n], complex_time_derivative(small_psi, n, dt),
                                   real_time_derivative(action, n, dt), units, options.scheme);
        std::vector<Complex> kin(g.size()), tim(g.size()), r(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            const Complex phase = std::polar(1.0, action[n].values[j] / units.hbar);
            kin[j] = -units.hbar * units.hbar / (2.0 * units.mass) * lap.values[j];
            tim[j] = Complex(0.0, -units.hbar) * dbig[j];
            Complex bracket{};
            for (auto& t : terms) {
                t[j] *= phase;
                bracket += t[j];
            }
            r[j] = kin[j] + tim[j] - bracket;
        }
        out.add_term(0, kin);
        out.add_term(1, tim);
        for (std::size_t k = 0; k < terms.size(); ++k) out.add_term(2 + k, terms[k]);
        out.add_frame(small_psi[n].time, std::move(r));
    }
    return out;
}

ResidualReport gauge_identity_residual(std::span<const ComplexField> small_psi, std::span<const RealField> action,
                                       const Units& units, const ResidualOptions& options) {
    return summarize(gauge_identity_residual_field(small_psi, action, units, options));
}

ResidualReport continuity_residual(const GaugeTriple& triple, std::span<const RealField> probability, double ratio,
                                   const ResidualOptions& options) {
    const std::span<const ComplexField> psi(triple.small_psi);
    const std::span<const RealField> action(triple.action);
    check_series(psi, action);
    if (probability.size() != psi.size()) throw ValidationError("continuity: need one P frame per psi frame");
    const double dt = frame_spacing(times_of(triple.small_psi));
    const auto& g = psi.front().grid;
    const int dim = g.dim();
    const double hbar = triple.units.hbar;
    const double m = triple.units.mass;

    std::vector<RealField> density;
    density.reserve(psi.size());
    for (const auto& f : psi) density.push_back(abs2(f));
    const std::span<const RealField> density_span(density);

    double longest = 0.0;
    for (int a = 0; a < dim; ++a) longest = std::max(longest, g.extent(a));
    const double k_box = 2.0 * std::numbers::pi / longest;

    ResidualField out{"continuity", g, dt, {}, {}, {}, {}};
    for (std::size_t n = 0; n < psi.size(); ++n) {
        require_same_grid(g, probability[n].grid, "continuity");
        const auto grad = gradient(psi[n], options.scheme);
        const auto grad_conj = gradient(conj(psi[n]), options.scheme);
        const VectorField grad_s = action_gradient(action[n], options.scheme, triple.units);
        VectorField wave_flux(g, psi[n].time);
        VectorField action_flux(g, psi[n].time);
        for (std::size_t j = 0; j < g.size(); ++j) {
            for (int a = 0; a < dim; ++a) {
                const Complex two_sided =
                    std::conj(psi[n].values[j]) * grad[a].values[j] - grad_conj[a].values[j] * psi[n].values[j];
                wave_flux.components[a][j] = (hbar / (2.0 * m) * two_sided / Complex(0.0, 1.0)).real();
                action_flux.components[a][j] = probability[n].values[j] * ratio * grad_s.components[a][j];
            }
        }
        const auto div_wave = divergence(wave_flux, options.scheme);
        const auto div_action = divergence(action_flux, options.scheme);
        const auto drho = to_complex(real_time_derivative(density_span, n, dt));
        const auto dw = to_complex(div_wave.field.values);
        const auto da = to_complex(div_action.field.values);
        std::vector<Complex> r(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) r[j] = dw[j] + da[j] + drho[j];
        out.add_term(0, dw);
        out.add_term(1, da);
        out.add_term(2, drho);
        // Both divergences vanish for uniform fluxes, so each flux also counts
        // as a term at the slowest box wavenumber; otherwise the relative norm
        // of an exactly divergence-free pair would be rounding over rounding.
        std::vector<Complex> wave_scale(g.size()), action_scale(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
            wave_scale[j] = k_box * norm(wave_flux.at(j));
            action_scale[j] = k_box * norm(action_flux.at(j));
        }
        out.add_term(3, wave_scale);
        out.add_term(4, action_scale);
        out.add_frame(psi[n].time, std::move(r));
    }
    return summarize(out);
}

namespace {

void add_eikonal_frame(ResidualField& out, const RealField& action, const VectorField& b, const Units& units,
                       const ResidualOptions& options) {
    require_same_grid(action.grid, b.grid, "eikonal residual");
    const auto& g = action.grid;
    const VectorField grad_s = action_gradient(action, options.scheme, units);
    std::vector<Complex> cross(g.size()), quad(g.size()), r(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!b.mask[j]) continue;
        double c = 0.0;
        double q = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            c += grad_s.components[a][j] * b.components[a][j];
            q += grad_s.components[a][j] * grad_s.components[a][j];
        }
        cross[j] = c;
        quad[j] = 0.5 * q;
        r[j] = cross[j] + quad[j];
    }
    out.add_term(0, cross, b.mask);
    out.add_term(1, quad, b.mask);
    out.add_frame(action.time, std::move(r), b.mask);
}

void add_mass_ratio_frame(ResidualField& out, const VectorField& b, const VectorField& v, double mass) {
    require_same_grid(b.grid, v.grid, "mass ratio residual");
    const auto mask = mask_and(b.mask, v.mask);
    std::vector<Complex> bn(b.size()), vn(b.size()), r(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (!mask[j]) continue;
        bn[j] = norm(b.at(j));
        vn[j] = mass * norm(v.at(j));
        r[j] = bn[j] - vn[j];
    }
    out.add_term(0, bn, mask);
    out.add_term(1, vn, mask);
    out.add_frame(b.time, std::move(r), mask);
}

void add_velocity_gauge_frame(ResidualField& out, const ComplexField& big_psi, const RealField& action,
                              const Units& units, const ResidualOptions& options) {
    const auto& g = big_psi.grid;
    const ComplexField small_psi = gauge_inverse(big_psi, action, units);
    const VectorField b_small = b_field(small_psi, options.scheme, options.policy, units);
    const VectorField b_big = b_field(big_psi, options.scheme, options.policy, units);
    const VectorField grad_s = action_gradient(action, options.scheme, units);
    const auto mask = mask_and(b_small.mask, b_big.mask);
    std::vector<Complex> wave(g.size()), gauge(g.size()), guidance(g.size()), r(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!mask[j]) continue;
        Point v_gauge{}, v_guidance{}, b_part{}, s_part{};
        for (int a = 0; a < g.dim(); ++a) {
            b_part[a] = b_small.components[a][j] / units.mass;
            s_part[a] = grad_s.components[a][j] / units.mass;
            v_gauge[a] = (b_small.components[a][j] + grad_s.components[a][j]) / units.mass;
            v_guidance[a] = b_big.components[a][j] / units.mass;
        }
        Point diff{};
        for (int a = 0; a < kMaxDim; ++a) diff[a] = v_gauge[a] - v_guidance[a];
        wave[j] = norm(b_part);
        gauge[j] = norm(s_part);
        guidance[j] = norm(v_guidance);
        r[j] = norm(diff);
    }
    out.add_term(0, wave, mask);
    out.add_term(1, gauge, mask);
    out.add_term(2, guidance, mask);
    out.add_frame(big_psi.time, std::move(r), mask);
}

double optional_spacing(const std::vector<double>& times) {
    return times.size() >= 2 ? times[1] - times[0] : 0.0;
}

}  // namespace

ResidualReport eikonal_identity_residual(const RealField& action, const VectorField& b, const Units& units,
                                         const ResidualOptions& options) {
    ResidualField out{"eikonal_identity", action.grid, 0.0, {}, {}, {}, {}};
    add_eikonal_frame(out, action, b, units, options);
    return summarize(out);
}

ResidualReport eikonal_identity_residual(std::span<const RealField> action, std::span<const VectorField> b,
                                         const Units& units, const ResidualOptions& options) {
    if (action.empty() || action.size() != b.size()) throw ValidationError("eikonal residual: series mismatch");
    ResidualField out{"eikonal_identity", action.front().grid, optional_spacing(times_of(action)), {}, {}, {}, {}};
    for (std::size_t n = 0; n < action.size(); ++n) add_eikonal_frame(out, action[n], b[n], units, options);
    return summarize(out);
}

ResidualReport stationary_action_residual(std::span<const RealField> action) {
    const auto times = times_of(action);
    const double dt = frame_spacing(times);
    const auto& g = action.front().grid;
    const double span = times.back() - times.front();
    ResidualField out{"stationary_action", g, dt, {}, {}, {}, {}};
    for (std::size_t n = 0; n < action.size(); ++n) {
        require_same_grid(g, action[n].grid, "stationary action residual");
        const auto rate = to_complex(real_time_derivative(action, n, dt));
        double mean = 0.0;
        for (double s : action[n].values) mean += s;
        mean /= static_cast<double>(g.size());
        std::vector<Complex> variation(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) variation[j] = (action[n].values[j] - mean) / span;
        out.add_term(0, rate);
        out.add_term(1, variation);
        out.add_frame(action[n].time, rate);
    }
    return summarize(out);
}

ResidualReport mass_ratio_residual(const VectorField& b, const VectorField& v, double mass) {
    ResidualField out{"mass_ratio", b.grid, 0.0, {}, {}, {}, {}};
    add_mass_ratio_frame(out, b, v, mass);
    return summarize(out);
}

ResidualReport mass_ratio_residual(std::span<const VectorField> b, std::span<const VectorField> v, double mass) {
    if (b.empty() || b.size() != v.size()) throw ValidationError("mass ratio residual: series mismatch");
    ResidualField out{"mass_ratio", b.front().grid, optional_spacing(times_of(b)), {}, {}, {}, {}};
    for (std::size_t n = 0; n < b.size(); ++n) add_mass_ratio_frame(out, b[n], v[n], mass);
    return summarize(out);
}

ResidualReport velocity_gauge_residual(const ComplexField& big_psi, const RealField& action, const Units& units,
                                       const ResidualOptions& options) {
    ResidualField out{"velocity_gauge", big_psi.grid, 0.0, {}, {}, {}, {}};
    add_velocity_gauge_frame(out, big_psi, action, units, options);
    return summarize(out);
}

ResidualReport velocity_gauge_residual(std::span<const ComplexField> big_psi, std::span<const RealField> action,
                                       const Units& units, const ResidualOptions& options) {
    check_series(big_psi, action);
    if (big_psi.empty()) throw ValidationError("velocity gauge residual: empty series");
    ResidualField out{"velocity_gauge", big_psi.front().grid,
                      optional_spacing(times_of(std::vector<ComplexField>(big_psi.begin(), big_psi.end()))),
                      {}, {}, {}, {}};
    for (std::size_t n = 0; n < big_psi.size(); ++n) add_velocity_gauge_frame(out, big_psi[n], action[n], units, options);
    return summarize(out);
}

ResidualReport gauge_transfer_discrepancy(const GaugeTriple& triple, const Potential& potential,
                                          const ResidualOptions& options) {
    const auto model = model_field_residual_field(triple, potential, options);
    const auto schr = schrodinger_residual_field(triple.big_psi, potential, triple.units, options);
    ResidualField out{"gauge_transfer", schr.grid, schr.dt, {}, {}, {}, schr.term_norm_sq};
    for (std::size_t n = 0; n < schr.values.size(); ++n) {
        const auto& s = triple.action[n].values;
        std::vector<Complex> d(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) {
            d[j] = std::polar(1.0, s[j] / triple.units.hbar) * model.values[n][j] - schr.values[n][j];
        }
        out.add_frame(schr.times[n], std::move(d));
    }
    return summarize(out);
}

SourceTerm source_term_field(const ComplexField& phi, const ParticleState& particle, double epsilon,
                             const NodeMaskPolicy& policy, const Units& units, DerivativeScheme scheme) {
    const auto& g = phi.grid;
    const int dim = g.dim();
    const RealField sigma = mollified_delta(particle.position, epsilon, g);
    const VectorField b = b_field(phi, scheme, policy, units);
    const auto grad_phi = gradient(phi, scheme);
    const double speed = norm(particle.velocity);

    std::array<std::vector<double>, kMaxDim> w;
    for (int a = 0; a < dim; ++a) w[a].assign(g.size(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double distance = norm(g.displacement(g.position(j), particle.position));
        const double b_norm = b.mask[j] ? norm(b.at(j)) : 0.0;
        if (!b.mask[j] || !(b_norm > 0.0)) {
            if (distance <= 5.0 * epsilon) {
                throw NodeError("source term: node or vanishing b within 5 epsilon of the particle");
            }
            continue;
        }
        const double weight = sigma.values[j] / std::norm(phi.values[j]);
        for (int a = 0; a < dim; ++a) {
            w[a][j] = weight * (particle.velocity[a] - speed / b_norm * b.components[a][j]);
        }
    }

    std::vector<ComplexField> carried;
    carried.reserve(dim);
    for (int a = 0; a < dim; ++a) {
        ComplexField c(g, phi.time);
        for (std::size_t j = 0; j < g.size(); ++j) c.values[j] = w[a][j] * phi.values[j];
        carried.push_back(std::move(c));
    }
    const auto div = divergence(std::span<const ComplexField>(carried), scheme);

    const Complex i_hbar_half(0.0, 0.5 * units.hbar);
    SourceTerm out{ComplexField(g, phi.time), 0.0, 0.0};
    for (std::size_t j = 0; j < g.size(); ++j) {
        Complex advect{};
        double wb = 0.0;
        double grad_norm2 = 0.0;
        for (int a = 0; a < dim; ++a) {
            advect += w[a][j] * grad_phi[a].values[j];
            wb += w[a][j] * b.components[a][j];
            grad_norm2 += std::norm(grad_phi[a].values[j]);
        }
        out.field.values[j] = i_hbar_half * div.values[j] + i_hbar_half * advect + wb * phi.values[j];
        out.l1_mass += std::abs(out.field.values[j]);
        if (b.mask[j]) {
            out.reference_scale += sigma.values[j] * speed *
                                   (units.hbar * std::sqrt(grad_norm2) / std::abs(phi.values[j]) + norm(b.at(j)));
        }
    }
    out.l1_mass *= g.cell_volume();
    out.reference_scale *= g.cell_volume();
    return out;
}

double l1_fraction_within(const ComplexField& field, const Point& center, double radius) {
    const auto& g = field.grid;
    double inside = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double a = std::abs(field.values[j]);
        total += a;
        if (norm(g.displacement(g.position(j), center)) <= radius) inside += a;
    }
    return total > 0.0 ? inside / total : 0.0;
}

}  // namespace pilotwave
