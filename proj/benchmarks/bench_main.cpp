#include <benchmark/benchmark.h>

#include <cmath>
#include <complex>

#include "pilotwave/bohm.hpp"
#include "pilotwave/operators.hpp"
#include "pilotwave/schrodinger.hpp"

using namespace pilotwave;

namespace {

ComplexField gaussian(int dim, std::size_t n) {
    const auto g = make_grid(dim, 20.0, n);
    ComplexField f(g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Point p = g.position(j);
        f.values[j] = std::polar(std::exp(-0.5 * dot(p, p)), 0.7 * p[0]);
    }
    const double scale = 1.0 / std::sqrt(norm_squared_integral(f));
    for (auto& v : f.values) v *= scale;
    return f;
}

void BM_SpectralGradient(benchmark::State& state) {
    const auto f = gaussian(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(gradient(f, DerivativeScheme::spectral));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_SpectralGradient)->Args({1, 256})->Args({1, 4096})->Args({2, 128})->Args({2, 256})->Args({3, 32});

void BM_SplitStep(benchmark::State& state) {
    const auto f = gaussian(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    const auto v = Potential::harmonic(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(evolve_split_step(f, v, 1e-3, 10, 10));
    state.SetItemsProcessed(state.iterations() * 10 * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_SplitStep)->Args({1, 256})->Args({2, 128})->Args({3, 32});

void BM_BField(benchmark::State& state) {
    const auto f = gaussian(2, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(b_field(f, DerivativeScheme::spectral));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_BField)->Arg(64)->Arg(128)->Arg(256);

void BM_Ensemble(benchmark::State& state) {
    const auto frames = evolve_split_step(gaussian(1, 256), Potential::free(), 1e-2, 100, 10);
    const GuidanceField guidance(frames, DerivativeScheme::spectral);
    const auto starts = sample_born(frames.frames.front(), static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(integrate_ensemble(guidance, starts, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ensemble)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
