#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles/closed_forms.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"
#include "pilotwave/verify.hpp"
#include "random_pairs.hpp"
#include "support.hpp"

using namespace pilotwave;
using namespace testing_support;
using std::numbers::pi;

namespace {

constexpr auto kSpectral = DerivativeScheme::spectral;

PropagationResult as_result(std::vector<ComplexField> frames, double dt) {
    PropagationResult r;
    r.frames = std::move(frames);
    r.dt = dt;
    return r;
}

// Psi = exp(i(x - t/2))/sqrt(L), S = 2x on [-pi, pi), frames injected from the
// closed form.
GaugeTriple plane_wave_pair(std::size_t n, double dt, std::size_t frames) {
    const double L = 2 * pi;
    const auto g = make_grid(1, L, n);
    std::vector<ComplexField> big;
    std::vector<RealField> action;
    for (std::size_t k = 0; k < frames; ++k) {
        const double t = dt * double(k);
        big.push_back(complex_from(g, [&](const Point& p) { return oracle::plane_wave(p[0], t, 1.0, L); }, t));
        action.push_back(real_from(g, [](const Point& p) { return 2.0 * p[0]; }, t));
    }
    return make_gauge_triple(as_result(std::move(big), dt), std::move(action));
}

std::vector<RealField> densities(const std::vector<ComplexField>& psi) {
    std::vector<RealField> out;
    for (const auto& f : psi) out.push_back(abs2(f));
    return out;
}

}  // namespace

TEST_CASE("summary norms: relative L2 against the largest term, masks and worst point") {
    const auto g = make_grid(1, 1.0, 8);
    ResidualField f{"demo", g, 0.1, {}, {}, {}, {}};
    std::vector<Complex> term(8, Complex(2.0, 0.0));
    std::vector<Complex> r(8, Complex{});
    r[5] = Complex(0.0, 3.0);
    r[2] = 100.0;
    std::vector<std::uint8_t> mask(8, 1);
    mask[2] = 0;
    f.add_term(0, term, mask);
    f.add_frame(0.0, r, mask);
    const auto rep = summarize(f);
    CHECK(rep.l_inf == doctest::Approx(3.0));
    CHECK(rep.worst_index == 5);
    CHECK(rep.rel_l2 == doctest::Approx(3.0 / std::sqrt(7 * 4.0)));
    CHECK(rep.unmasked_fraction == doctest::Approx(7.0 / 8.0));
    CHECK(rep.n == 8);

    ResidualField empty{"none", g, 0.0, {}, {}, {}, {}};
    empty.add_frame(0.0, r, std::vector<std::uint8_t>(8, 0));
    CHECK_THROWS_AS(summarize(empty), DegenerateFieldError);

    ResidualField zeros{"zeros", g, 0.0, {}, {}, {}, {}};
    zeros.add_term(0, std::vector<Complex>(8));
    zeros.add_frame(0.0, std::vector<Complex>(8));
    CHECK(summarize(zeros).rel_l2 == 0.0);
    CHECK(convergence_order(4e-4, 1e-4) == doctest::Approx(2.0));
}

TEST_CASE("time derivatives need three equally spaced frames") {
    auto pair = plane_wave_pair(16, 1e-3, 2);
    CHECK_THROWS_AS(schrodinger_residual(pair.big_psi, Potential::free()), ValidationError);
    auto uneven = plane_wave_pair(16, 1e-3, 4);
    uneven.big_psi.frames[3].time = 5e-3;
    CHECK_THROWS_AS(schrodinger_residual(uneven.big_psi, Potential::free()), ValidationError);
}

TEST_CASE("schrodinger residual of split-step Gaussian frames is small and second order in dt") {
    const auto g = make_grid(1, 40.0, 256);
    const auto psi0 = oracle::sample_free_gaussian(g, 0.0, 1.0);
    const auto fine = evolve_split_step(psi0, Potential::free(), 1e-3, 1000, 1);
    const auto rep = schrodinger_residual(fine, Potential::free());
    CHECK(rep.rel_l2 <= 1e-6);
    const auto coarse = evolve_split_step(psi0, Potential::free(), 2e-3, 500, 1);
    const double order = convergence_order(schrodinger_residual(coarse, Potential::free()).rel_l2, rep.rel_l2);
    CHECK(order == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("schrodinger residual of exact plane-wave frames") {
    const auto pair = plane_wave_pair(32, 2e-5, 5);
    CHECK(schrodinger_residual(pair.big_psi, Potential::free()).rel_l2 <= 1e-10);
}

TEST_CASE("a corrupted frame shows up as an l_inf spike at the corrupted point") {
    auto pair = plane_wave_pair(32, 2e-5, 7);
    const double clean = schrodinger_residual(pair.big_psi, Potential::free()).l_inf;
    pair.big_psi.frames[3].values[11] *= 1.01;
    const auto rep = schrodinger_residual(pair.big_psi, Potential::free());
    CHECK(rep.l_inf > 1e6 * clean);
    CHECK(rep.worst_index == 11);
}

TEST_CASE("schrodinger residual includes the potential") {
    const auto g = make_grid(1, 20.0, 128);
    std::vector<ComplexField> frames;
    const double dt = 1e-4;
    for (int k = 0; k < 5; ++k) {
        const double t = dt * k;
        frames.push_back(complex_from(g, [&](const Point& p) { return oracle::harmonic_ground(p[0], t, 1.0); }, t));
    }
    const auto r = as_result(frames, dt);
    CHECK(schrodinger_residual(r, Potential::harmonic(1.0)).rel_l2 <= 1e-8);
    CHECK(schrodinger_residual(r, Potential::free()).rel_l2 > 0.1);
}

TEST_CASE("model field residual vanishes on the plane-wave pair") {
    const auto pair = plane_wave_pair(32, 1e-4, 5);
    CHECK(model_field_residual(pair).rel_l2 <= 1e-8);
}

TEST_CASE("with S = 0 the model residual is the schrodinger residual") {
    const auto g = make_grid(1, 40.0, 256);
    const auto frames = evolve_split_step(oracle::sample_free_gaussian(g, 0.0, 1.0), Potential::free(), 1e-3, 20, 1);
    std::vector<RealField> zero;
    for (const auto& f : frames.frames) zero.push_back(RealField(g, f.time));
    const auto model = model_field_residual(make_gauge_triple(frames, zero));
    const auto schr = schrodinger_residual(frames, Potential::free());
    CHECK(model.rel_l2 == doctest::Approx(schr.rel_l2).epsilon(1e-12));
    CHECK(model.l_inf == doctest::Approx(schr.l_inf).epsilon(1e-12));
}

TEST_CASE("model residual of a schrodinger solution vanishes for arbitrary smooth S") {
    const auto g = make_grid(1, 40.0, 256);
    const auto build = [&](double dt, std::size_t steps) {
        const auto frames = evolve_split_step(oracle::sample_free_gaussian(g, 0.0, 1.0), Potential::free(), dt, steps, 1);
        std::vector<RealField> action;
        for (const auto& f : frames.frames) {
            action.push_back(real_from(g, [&](const Point& p) { return 0.5 * std::sin(2 * pi * p[0] / 40.0) * (1 + f.time); }, f.time));
        }
        return make_gauge_triple(frames, action);
    };
    const auto fine = build(1e-3, 200);
    const auto coarse = build(2e-3, 100);
    const auto mf = model_field_residual(fine);
    CHECK(mf.rel_l2 <= 1e-6);
    CHECK(convergence_order(model_field_residual(coarse).rel_l2, mf.rel_l2) >= 1.9);
    const auto gi = gauge_identity_residual(fine.small_psi, fine.action);
    CHECK(gi.rel_l2 <= 1e-6);
    // A moving S leaves an O(dt^2) mismatch between the separately
    // differenced psi and S and the differenced Psi.
    const double d_fine = gauge_transfer_discrepancy(fine, Potential::free()).rel_l2;
    const double d_coarse = gauge_transfer_discrepancy(coarse, Potential::free()).rel_l2;
    CHECK(d_fine <= 1e-6);
    CHECK(convergence_order(d_coarse, d_fine) == doctest::Approx(2.0).epsilon(0.05));

    // The full chain closes to rounding: R(Psi) = exp(iS) M(psi, S) + G(psi, S).
    const auto r = schrodinger_residual_field(fine.big_psi, Potential::free());
    const auto m = model_field_residual_field(fine);
    const auto gi_field = gauge_identity_residual_field(fine.small_psi, fine.action);
    double worst = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < r.values.size(); ++n) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            const Complex phase = std::polar(1.0, fine.action[n].values[j]);
            worst = std::max(worst, std::abs(r.values[n][j] - phase * m.values[n][j] - gi_field.values[n][j]));
            scale = std::max(scale, std::abs(fine.big_psi.frames[n].values[j]));
        }
    }
    CHECK(worst <= 1e-9 * scale);
}

TEST_CASE("gauge identity on random band-limited pairs") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const RandomPair pair(2, seed);
        const auto g = pair.grid(96);
        // Static frames: only spatial derivatives enter.
        std::vector<ComplexField> psi(3, pair.psi_field(g, 0.0));
        std::vector<RealField> action(3, pair.action_field(g, 0.0));
        for (int k = 0; k < 3; ++k) psi[k].time = action[k].time = 0.1 * k;
        CHECK(gauge_identity_residual(psi, action).rel_l2 <= 1e-9);

        // Moving frames add a second-order time-stencil mismatch.
        const auto r1 = gauge_identity_residual(pair.psi_series(g, 2e-3, 5), pair.action_series(g, 2e-3, 5));
        const auto r2 = gauge_identity_residual(pair.psi_series(g, 1e-3, 5), pair.action_series(g, 1e-3, 5));
        CHECK(r2.rel_l2 <= 1e-5);
        CHECK(convergence_order(r1.l_inf, r2.l_inf) == doctest::Approx(2.0).epsilon(0.05));
    }
}

TEST_CASE("gauge identity trivial and plane-wave cases") {
    const RandomPair pair(1, 9);
    const auto g = pair.grid(32);
    const auto psi = pair.psi_series(g, 1e-3, 4);
    std::vector<RealField> zero;
    for (const auto& f : psi) zero.push_back(RealField(g, f.time));
    CHECK(gauge_identity_residual(psi, zero).l_inf <= 1e-14 * 100);
    CHECK(gauge_identity_residual(psi, zero).rel_l2 <= 1e-14);

    const auto pw = plane_wave_pair(32, 1e-3, 4);
    CHECK(gauge_identity_residual(pw.small_psi, pw.action).rel_l2 <= 1e-10);
}

TEST_CASE("continuity residual examples") {
    const auto pw = plane_wave_pair(32, 1e-3, 4);
    CHECK(continuity_residual(pw, densities(pw.small_psi), 1.0).l_inf <= 1e-12);
    CHECK(continuity_residual(pw, densities(pw.small_psi), 1.0).rel_l2 <= 1e-10);

    const auto g = make_grid(1, 40.0, 256);
    const auto gaussian = [&](double dt, std::size_t steps) {
        const auto frames = evolve_split_step(oracle::sample_free_gaussian(g, 0.0, 1.0), Potential::free(), dt, steps, 1);
        std::vector<RealField> zero;
        for (const auto& f : frames.frames) zero.push_back(RealField(g, f.time));
        return make_gauge_triple(frames, zero);
    };
    const auto fine = gaussian(1e-3, 200);
    const auto coarse = gaussian(2e-3, 100);
    const auto rf = continuity_residual(fine, densities(fine.small_psi), 1.0);
    const auto rc = continuity_residual(coarse, densities(coarse.small_psi), 1.0);
    CHECK(rf.rel_l2 <= 1e-6);
    CHECK(convergence_order(rc.rel_l2, rf.rel_l2) == doctest::Approx(2.0).epsilon(0.05));

    std::vector<RealField> uniform;
    for (const auto& f : fine.small_psi) uniform.push_back(RealField(g, std::vector<double>(g.size(), 1.0 / 40.0), f.time));
    std::vector<RealField> ramp;
    for (const auto& f : fine.small_psi) ramp.push_back(real_from(g, [](const Point& p) { return p[0]; }, f.time));
    auto with_s = make_gauge_triple(fine.big_psi, ramp);
    CHECK(continuity_residual(with_s, uniform, 1.0).rel_l2 > 0.1);
}

TEST_CASE("eikonal identity examples") {
    const auto g = make_grid(1, 2 * pi, 32);
    const RealField constant(g, std::vector<double>(g.size(), 4.0), 0.0);
    VectorField b(g);
    for (std::size_t j = 0; j < g.size(); ++j) b.set(j, {std::cos(g.position(j)[0]), 0, 0});
    CHECK(eikonal_identity_residual(constant, b).l_inf == 0.0);

    const auto pw = plane_wave_pair(32, 1e-3, 3);
    const auto bpsi = b_field(pw.small_psi[0], kSpectral);
    CHECK(eikonal_identity_residual(pw.action[0], bpsi).rel_l2 <= 1e-12);

    const auto wiggle = real_from(g, [](const Point& p) { return std::sin(2 * p[0]); });
    CHECK(eikonal_identity_residual(wiggle, b).rel_l2 > 0.1);

    std::vector<VectorField> bs;
    for (const auto& f : pw.small_psi) bs.push_back(b_field(f, kSpectral));
    CHECK(eikonal_identity_residual(pw.action, bs).rel_l2 <= 1e-12);
}

TEST_CASE("stationary action examples") {
    const auto pw = plane_wave_pair(32, 1e-3, 4);
    CHECK(stationary_action_residual(pw.action).l_inf == 0.0);
    CHECK(stationary_action_residual(pw.action).rel_l2 <= 1e-12);

    const auto g = make_grid(1, 10.0, 32);
    std::vector<RealField> growing;
    for (int k = 0; k < 4; ++k) growing.push_back(real_from(g, [&](const Point& p) { return p[0] * 0.1 * k; }, 0.1 * k));
    const auto rep = stationary_action_residual(growing);
    CHECK(rep.l_inf == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(rep.rel_l2 > 0.5);
}

TEST_CASE("mass ratio examples") {
    const auto pw = plane_wave_pair(32, 1e-3, 3);
    const auto b = b_field(pw.small_psi[0], kSpectral);
    const auto v = velocity_field(pw.big_psi.frames[0], kSpectral);
    CHECK(mass_ratio_residual(b, v, 1.0).rel_l2 <= 1e-12);

    const auto g = make_grid(1, 40.0, 128);
    const auto f = oracle::sample_free_gaussian(g, 1.0, 1.0);
    const auto vb = velocity_field(f, kSpectral, NodeMaskPolicy{1e-6}, {1.0, 2.0});
    const auto bb = b_field(f, kSpectral, NodeMaskPolicy{1e-6}, {1.0, 2.0});
    const auto rep = mass_ratio_residual(bb, vb, 2.0);
    CHECK(rep.l_inf <= 1e-12);
    CHECK(rep.unmasked_fraction < 1.0);
    CHECK(rep.unmasked_fraction == doctest::Approx(double(bb.valid_count()) / double(g.size())));
}

TEST_CASE("velocity gauge examples") {
    const auto g = make_grid(2, 2 * pi, 32);
    const RandomPair pair(2, 3);
    const auto big = gauge_forward(pair.psi_field(g, 0.0), pair.action_field(g, 0.0));
    CHECK(velocity_gauge_residual(big, RealField(g)).l_inf == 0.0);

    const auto fine = pair.grid(64);
    const auto big_fine = gauge_forward(pair.psi_field(fine, 0.0), pair.action_field(fine, 0.0));
    CHECK(velocity_gauge_residual(big_fine, pair.action_field(fine, 0.0)).l_inf <= 1e-9);

    const auto pw = plane_wave_pair(32, 1e-3, 3);
    CHECK(velocity_gauge_residual(pw.big_psi.frames[0], pw.action[0]).l_inf <= 1e-12);
}

TEST_CASE("residual reports are deterministic") {
    const RandomPair pair(2, 5);
    const auto g = pair.grid(32);
    const auto a = gauge_identity_residual(pair.psi_series(g, 1e-3, 4), pair.action_series(g, 1e-3, 4));
    const auto b = gauge_identity_residual(pair.psi_series(g, 1e-3, 4), pair.action_series(g, 1e-3, 4));
    CHECK(a.rel_l2 == b.rel_l2);
    CHECK(a.l_inf == b.l_inf);
    CHECK(a.worst_index == b.worst_index);
}

TEST_CASE("transferred schrodinger residual matches the model residual") {
    const auto pw = plane_wave_pair(32, 1e-4, 5);
    CHECK(gauge_transfer_discrepancy(pw, Potential::free()).rel_l2 <= 1e-9);
}

TEST_CASE("source term vanishes when v = b/m at the particle") {
    const std::array<double, 2> ext{2 * pi, 2 * pi};
    const std::array<std::size_t, 2> pts{64, 64};
    const auto g = make_grid(2, ext, pts);
    const auto phi = complex_from(g, [](const Point& p) { return std::polar(1.0 / (2 * pi), p[0] + 2 * p[1]); });
    const ParticleState particle{{0.3, -0.2, 0}, {1.0, 2.0, 0}};
    const auto src = source_term_field(phi, particle, 4 * g.spacing(0));
    CHECK(src.reference_scale > 0.0);
    CHECK(src.l1_mass <= 1e-10 * src.reference_scale);
}

TEST_CASE("source term with v orthogonal to b is localised near the particle") {
    const std::array<double, 2> ext{2 * pi, 2 * pi};
    const std::array<std::size_t, 2> pts{128, 128};
    const auto g = make_grid(2, ext, pts);
    const auto phi = complex_from(g, [](const Point& p) { return std::polar(1.0 / (2 * pi), p[0]); });
    const ParticleState particle{{0.1, 0.2, 0}, {0, 1.0, 0}};
    const double eps = 6 * g.spacing(0);
    const auto src = source_term_field(phi, particle, eps);
    CHECK(src.l1_mass > 0.1 * src.reference_scale);
    // The grad-sigma part of the divergence carries a |d| exp(-d^2/2eps^2)
    // profile, whose mass inside 3 eps is about 97%.
    CHECK(l1_fraction_within(src.field, particle.position, 3 * eps) >= 0.96);
    CHECK(l1_fraction_within(src.field, particle.position, 5 * eps) >= 0.999);
}

TEST_CASE("source support shrinks with epsilon and its signed integral converges") {
    const std::array<double, 2> ext{2 * pi, 2 * pi};
    const std::array<std::size_t, 2> pts{256, 256};
    const auto g = make_grid(2, ext, pts);
    const double amp = 1.0 / (2 * pi);
    const auto phi = complex_from(g, [&](const Point& p) { return std::polar(amp, p[0]); });
    const ParticleState particle{{0.0, 0.0, 0}, {0, 1.0, 0}};
    std::vector<double> radius;
    std::vector<Complex> integral;
    for (double eps : {0.4, 0.2, 0.1}) {
        const auto src = source_term_field(phi, particle, eps);
        double lo = 0.0, hi = 5 * eps;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (l1_fraction_within(src.field, particle.position, mid) < 0.9 ? lo : hi) = mid;
        }
        radius.push_back(hi);
        Complex s{};
        for (const auto& v : src.field.values) s += v * g.cell_volume();
        integral.push_back(s);
    }
    CHECK(radius[1] / radius[0] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(radius[2] / radius[1] == doctest::Approx(0.5).epsilon(0.05));
    // The divergence integrates to zero. With phi = A exp(ix), b = x and v = y,
    // w = sigma (y - x) / A^2, so the two remaining terms sum to
    // -sigma phi / 2A^2, whose integral is -exp(-eps^2/2) / 2A.
    const std::array<double, 3> eps{0.4, 0.2, 0.1};
    for (std::size_t i = 0; i < 3; ++i) {
        const Complex expect = -std::exp(-0.5 * eps[i] * eps[i]) / (2 * amp);
        CHECK(std::abs(integral[i] - expect) <= 1e-6 * std::abs(expect));
    }
    const Complex limit = -1.0 / (2 * amp);
    CHECK(std::abs(integral[2] - limit) < std::abs(integral[1] - limit));
    CHECK(std::abs(integral[1] - limit) < std::abs(integral[0] - limit));
}

TEST_CASE("source term refuses nodes near the particle and unresolved widths") {
    const auto g = make_grid(2, 2 * pi, 64);
    const auto phi = complex_from(g, [](const Point& p) { return Complex(std::sin(p[0]), 0.0); });
    const ParticleState near{{0.05, 0.0, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(source_term_field(phi, near, 4 * g.spacing(0)), NodeError);
    const auto wave = complex_from(g, [](const Point& p) { return std::polar(1.0, p[0]); });
    CHECK_THROWS_AS(source_term_field(wave, near, g.spacing(0)), ValidationError);
}
