#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles/closed_forms.hpp"
#include "pilotwave/bohm.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/operators.hpp"
#include "pilotwave/stats.hpp"
#include "support.hpp"

using namespace pilotwave;
using namespace testing_support;
using std::numbers::pi;

namespace {

constexpr auto kSpectral = DerivativeScheme::spectral;

PropagationResult free_gaussian_frames(double sigma0, double L, std::size_t n, double dt, std::size_t steps,
                                       std::size_t stride) {
    const auto g = make_grid(1, L, n);
    return evolve_split_step(oracle::sample_free_gaussian(g, 0.0, sigma0), Potential::free(), dt, steps, stride);
}

// Repeats one field at several times; the guidance only reads the frames.
PropagationResult static_frames(const ComplexField& f, double dt, std::size_t count) {
    PropagationResult r;
    r.dt = dt;
    for (std::size_t k = 0; k < count; ++k) {
        r.frames.push_back(f);
        r.frames.back().time = dt * double(k);
    }
    return r;
}

}  // namespace

TEST_CASE("b vanishes for real fields") {
    const auto g = make_grid(2, 6.0, 32);
    const auto f = real_from(g, [](const Point& p) { return std::exp(-p[0] * p[0]) * (1.0 + 0.3 * std::cos(p[1])); });
    const ComplexField cf(g, std::vector<Complex>(f.values.begin(), f.values.end()), 0.0);
    const auto b = b_field(cf, kSpectral);
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (!b.valid(j)) continue;
        CHECK(norm(b.at(j)) == 0.0);
    }
}

TEST_CASE("b of a plane wave is hbar k") {
    const auto g = make_grid(1, 2 * pi, 32);
    const auto f = complex_from(g, [](const Point& p) { return std::polar(1.0, p[0]); });
    for (auto scheme : {kSpectral, DerivativeScheme::central2}) {
        const auto b = b_field(f, scheme);
        for (std::size_t j = 0; j < g.size(); ++j) {
            // The FD derivative of exp(ix) is i sin(h)/h exp(ix).
            const double expect = scheme == kSpectral ? 1.0 : std::sin(g.spacing(0)) / g.spacing(0);
            CHECK(b.components[0][j] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    const auto b2 = b_field(f, kSpectral, {}, {2.0, 1.0});
    CHECK(b2.components[0][3] == doctest::Approx(2.0));
}

TEST_CASE("b and v of the free Gaussian match the analytic phase gradient") {
    const auto g = make_grid(1, 40.0, 256);
    for (double m : {1.0, 2.0}) {
        const Units u{1.0, m};
        ComplexField f(g, 1.0);
        for (std::size_t j = 0; j < g.size(); ++j) f.values[j] = oracle::free_gaussian(g.position(j)[0], 1.0, 1.0, 1.0, m);
        const auto b = b_field(f, kSpectral, {}, u);
        const auto v = velocity_field(f, kSpectral, {}, u);
        double err_b = 0.0, err_v = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double x = g.position(j)[0];
            if (std::abs(x) > 5.0) continue;
            REQUIRE(b.valid(j));
            const double va = oracle::free_gaussian_velocity(x, 1.0, 1.0, 1.0, m);
            err_b = std::max(err_b, std::abs(b.components[0][j] - m * va));
            err_v = std::max(err_v, std::abs(v.components[0][j] - va));
        }
        CHECK(err_b <= 1e-9);
        CHECK(err_v <= 1e-9);
    }
}

TEST_CASE("velocity examples") {
    const auto g = make_grid(1, 2 * pi, 32);
    const auto wave = complex_from(g, [](const Point& p) { return std::polar(1.0, p[0]); });
    const auto v = velocity_field(wave, kSpectral);
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(v.components[0][j] == doctest::Approx(1.0).epsilon(1e-12));

    const auto gh = make_grid(1, 20.0, 128);
    const auto ground = complex_from(gh, [](const Point& p) { return oracle::harmonic_ground(p[0], 0.7, 1.0); });
    const auto v0 = velocity_field(ground, kSpectral);
    // Far tails amplify rounding in the numerator, so look where |f| is not tiny.
    for (std::size_t j = 0; j < gh.size(); ++j) {
        if (std::abs(gh.position(j)[0]) <= 3.0) CHECK(std::abs(v0.components[0][j]) <= 1e-12);
    }
}

TEST_CASE("node mask removes low-density points and degenerate fields are rejected") {
    const auto g = make_grid(1, 40.0, 128);
    const auto f = oracle::sample_free_gaussian(g, 0.0, 1.0);
    const auto b = b_field(f, kSpectral, NodeMaskPolicy{1e-6});
    CHECK_FALSE(b.valid(0));
    CHECK(b.valid(64));
    CHECK(b.valid_count() < g.size());
    CHECK_THROWS_AS(b_field(ComplexField(g), kSpectral), DegenerateFieldError);
    CHECK_THROWS_AS(b_field(f, kSpectral, NodeMaskPolicy{0.0}), ValidationError);
    CHECK_THROWS_AS(b_field(f, kSpectral, NodeMaskPolicy{1.0}), ValidationError);
}

TEST_CASE("b is gauge covariant: b(f exp(i theta/hbar)) = b(f) + grad theta") {
    std::mt19937_64 rng(17);
    const std::array<double, 2> ext{6.0, 5.0};
    const std::array<std::size_t, 2> pts{48, 48};
    const auto g = make_grid(2, ext, pts);
    for (int trial = 0; trial < 5; ++trial) {
        const RandomModes amp(g, rng, 6, 2, 0.2);
        const RandomModes theta(g, rng, 5, 2, 0.5);
        const auto f = complex_from(g, [&](const Point& p) { return 1.0 + amp(p); });
        const auto th = real_from(g, [&](const Point& p) { return theta(p).real(); });
        ComplexField rotated = f;
        for (std::size_t j = 0; j < g.size(); ++j) rotated.values[j] *= std::polar(1.0, th.values[j]);
        const auto b0 = b_field(f, kSpectral);
        const auto b1 = b_field(rotated, kSpectral);
        const auto grad = gradient(th, kSpectral);
        double err = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!b0.valid(j) || !b1.valid(j)) continue;
            for (int a = 0; a < 2; ++a) {
                err = std::max(err, std::abs(b1.components[a][j] - b0.components[a][j] - grad.components[a][j]));
            }
        }
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("plane-wave trajectories translate uniformly and wrap") {
    const double L = 2 * pi;
    const auto g = make_grid(1, L, 32);
    const auto psi0 = complex_from(g, [&](const Point& p) { return oracle::plane_wave(p[0], 0.0, 1.0, L); });
    const auto frames = evolve_split_step(psi0, Potential::free(), 0.05, 200, 10);
    const auto traj = integrate_trajectory(frames, {3.0, 0, 0}, kSpectral);
    CHECK_FALSE(traj.node_encountered);
    REQUIRE(traj.samples.size() == frames.frames.size());
    for (const auto& s : traj.samples) {
        const double expect = g.wrap({3.0 + s.t, 0, 0})[0];
        CHECK(std::abs(g.displacement(s.position, {expect, 0, 0})[0]) <= 1e-10);
        CHECK(s.velocity[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.position[0] >= g.origin(0));
        CHECK(s.position[0] < g.origin(0) + L);
    }
}

TEST_CASE("free Gaussian trajectory follows the scaling solution") {
    const auto frames = free_gaussian_frames(1.0, 40.0, 256, 1e-3, 1000, 10);
    for (double x0 : {1.0, -0.4, 2.5}) {
        const auto traj = integrate_trajectory(frames, {x0, 0, 0}, kSpectral);
        const double expect = x0 * oracle::free_gaussian_width(1.0, 1.0);
        CHECK(std::abs(traj.back().position[0] - expect) <= 1e-4 * std::abs(expect));
        CHECK(traj.back().t == doctest::Approx(1.0));
    }
}

TEST_CASE("stationary real state leaves particles in place") {
    const auto g = make_grid(1, 20.0, 128);
    const auto ground = complex_from(g, [](const Point& p) { return oracle::harmonic_ground(p[0], 0.0, 1.0); });
    const auto traj = integrate_trajectory(static_frames(ground, 0.1, 11), {0.7, 0, 0}, kSpectral);
    REQUIRE(traj.samples.size() == 11);
    for (const auto& s : traj.samples) CHECK(std::abs(s.position[0] - 0.7) <= 1e-12);
}

TEST_CASE("trajectory start is validated") {
    const auto frames = free_gaussian_frames(1.0, 40.0, 128, 1e-2, 10, 5);
    CHECK_THROWS_AS(integrate_trajectory(frames, {25.0, 0, 0}, kSpectral), ValidationError);
    CHECK_THROWS_AS(integrate_trajectory(frames, {19.0, 0, 0}, kSpectral), NodeError);
}

TEST_CASE("a trajectory running into a node stops with the flag set") {
    const auto g = make_grid(1, 2 * pi, 64);
    // Unit velocity everywhere except a node at x = pi (the box edge).
    const auto f = complex_from(g, [](const Point& p) { return std::polar(0.5 * (1.0 + std::cos(p[0])), p[0]); });
    const auto frames = static_frames(f, 0.25, 20);
    const auto traj = integrate_trajectory(frames, {0.0, 0, 0}, kSpectral, NodeMaskPolicy{1e-3});
    CHECK(traj.node_encountered);
    CHECK(traj.samples.size() < 20);
    CHECK(traj.back().position[0] < pi);
}

TEST_CASE("1D trajectories never cross") {
    const auto frames = free_gaussian_frames(0.7, 30.0, 256, 2e-3, 500, 10);
    const auto starts = sample_born(frames.frames.front(), 200, 5);
    const GuidanceField guidance(frames, kSpectral);
    const auto ens = integrate_ensemble(guidance, starts, 5);
    std::vector<std::size_t> order(starts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return starts[a][0] < starts[b][0]; });
    for (std::size_t k = 0; k < frames.frames.size(); ++k) {
        for (std::size_t i = 1; i < order.size(); ++i) {
            const auto& lo = ens.trajectories[order[i - 1]].samples[k].position[0];
            const auto& hi = ens.trajectories[order[i]].samples[k].position[0];
            CHECK(lo <= hi);
        }
    }
}

TEST_CASE("Born sampling of a uniform density passes the KS bound") {
    const auto g = make_grid(1, 2 * pi, 64);
    const auto f = complex_from(g, [](const Point&) { return Complex(1.0 / std::sqrt(2 * pi), 0); });
    const std::size_t n = 10000;
    const auto samples = sample_born(f, n, 2024);
    std::vector<double> xs;
    for (const auto& p : samples) xs.push_back(p[0]);
    const double ks = ks_distance(xs, [](double x) { return (x + pi) / (2 * pi); });
    CHECK(ks <= ks_critical_99(n));
}

TEST_CASE("Born sampling of a Gaussian has the right mean") {
    const auto g = make_grid(1, 40.0, 256);
    const std::size_t n = 10000;
    const auto samples = sample_born(oracle::sample_free_gaussian(g, 0.0, 1.0), n, 99);
    double mean = 0.0;
    for (const auto& p : samples) mean += p[0];
    mean /= double(n);
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(double(n)));
}

TEST_CASE("Born sampling in 2D reproduces the marginal") {
    const auto g = make_grid(2, 12.0, 64);
    const std::size_t n = 10000;
    const auto samples = sample_born(oracle::sample_free_gaussian(g, 0.0, 1.0), n, 7);
    std::vector<double> xs;
    for (const auto& p : samples) xs.push_back(p[1]);
    const double ks = ks_distance(xs, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
    CHECK(ks <= ks_critical_99(n));
}

TEST_CASE("Born sampling is deterministic and validated") {
    const auto g = make_grid(2, 12.0, 32);
    const auto f = oracle::sample_free_gaussian(g, 0.0, 1.0);
    CHECK(sample_born(f, 50, 3) == sample_born(f, 50, 3));
    CHECK(sample_born(f, 50, 3) != sample_born(f, 50, 4));
    CHECK_THROWS_AS(sample_born(f, 0, 3), ValidationError);
    CHECK_THROWS_AS(sample_born(ComplexField(g), 10, 3), DegenerateFieldError);

    const auto big = make_grid(2, 12.0, 128);
    ComplexField spike(big);
    spike.values[big.size() / 2 + 64] = 1.0;
    CHECK_THROWS_AS(sample_born(spike, 10, 1), PathologicalDensityError);
}

TEST_CASE("equivariance: plane wave stays uniform") {
    const double L = 2 * pi;
    const auto g = make_grid(1, L, 32);
    const auto psi0 = complex_from(g, [&](const Point& p) { return oracle::plane_wave(p[0], 0.0, 1.0, L); });
    const auto frames = evolve_split_step(psi0, Potential::free(), 0.05, 40, 10);
    const std::size_t n = 10000;
    const auto starts = sample_born(frames.frames.front(), n, 1);
    const auto ens = integrate_ensemble(GuidanceField(frames, kSpectral), starts, 1);
    const auto stat = equivariance_statistic(frames, ens, 2.0);
    CHECK(stat.kind == EquivarianceResult::Kind::ks_distance);
    CHECK(stat.statistic <= ks_critical_99(n));
    CHECK(stat.survivors == n);
}

TEST_CASE("equivariance: free Gaussian ensemble tracks the density, frozen ensemble does not") {
    const std::size_t n = 10000;
    for (double sigma0 : {1.0, 0.5}) {
        const auto frames = free_gaussian_frames(sigma0, 40.0, 256, 1e-3, 1000, 20);
        const auto starts = sample_born(frames.frames.front(), n, 42);
        const GuidanceField guidance(frames, kSpectral);
        const auto live = equivariance_statistic(frames, integrate_ensemble(guidance, starts, 42), 1.0);
        CHECK(live.statistic <= 0.02);
        const auto frozen = equivariance_statistic(frames, integrate_ensemble(guidance, starts, 42, {}, true), 1.0);
        if (sigma0 == 0.5) CHECK(frozen.statistic > 0.05);
        CHECK(frozen.statistic > live.statistic);
    }
}

TEST_CASE("equivariance in 2D reports a chi-square p-value") {
    const auto g = make_grid(2, 16.0, 64);
    const auto frames = evolve_split_step(oracle::sample_free_gaussian(g, 0.0, 0.8), Potential::free(), 1e-2, 100, 10);
    const auto starts = sample_born(frames.frames.front(), 4000, 8);
    const GuidanceField guidance(frames, kSpectral);
    const auto live = equivariance_statistic(frames, integrate_ensemble(guidance, starts, 8), 1.0);
    CHECK(live.kind == EquivarianceResult::Kind::chi_square_p_value);
    CHECK(live.statistic >= 0.01);
    const auto frozen = equivariance_statistic(frames, integrate_ensemble(guidance, starts, 8, {}, true), 1.0);
    CHECK(frozen.statistic < 1e-6);
}

TEST_CASE("ensemble records its seed and shares the sample times") {
    const auto frames = free_gaussian_frames(1.0, 40.0, 128, 1e-2, 20, 5);
    const auto starts = sample_born(frames.frames.front(), 16, 77);
    const auto ens = integrate_ensemble(GuidanceField(frames, kSpectral), starts, 77);
    CHECK(ens.rng_seed == 77);
    for (const auto& tr : ens.trajectories) {
        REQUIRE(tr.samples.size() == frames.frames.size());
        for (std::size_t k = 0; k < tr.samples.size(); ++k) CHECK(tr.samples[k].t == frames.frames[k].time);
    }
}

TEST_CASE("equivariance refuses ensembles with too many aborted trajectories") {
    const auto g = make_grid(1, 2 * pi, 64);
    const auto f = complex_from(g, [](const Point& p) { return std::polar(0.5 * (1.0 + std::cos(p[0])), p[0]); });
    const auto frames = static_frames(f, 0.25, 20);
    const GuidanceField guidance(frames, kSpectral, NodeMaskPolicy{1e-3});
    std::vector<Point> starts;
    for (int i = 0; i < 100; ++i) starts.push_back({-1.0 + 0.02 * i, 0, 0});
    const auto ens = integrate_ensemble(guidance, starts, 0);
    CHECK_THROWS_AS(equivariance_statistic(frames, ens, frames.frames.back().time), NodeError);
    CHECK_THROWS_AS(frame_index(frames, 0.3), ValidationError);
    CHECK(frame_index(frames, 0.5) == 2);
}
