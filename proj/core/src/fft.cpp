#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace pilotwave::detail {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_complex* as_fftw(std::span<Complex> data) { return reinterpret_cast<fftw_complex*>(data.data()); }

}  // namespace

FftPlan::FftPlan(const GridSpec& grid) : size_(grid.size()) {
    int n[kMaxDim];
    for (int a = 0; a < grid.dim(); ++a) n[a] = static_cast<int>(grid.points(a));
    std::vector<Complex> scratch(size_);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft(grid.dim(), n, buf, buf, FFTW_FORWARD, flags);
    inverse_ = fftw_plan_dft(grid.dim(), n, buf, buf, FFTW_BACKWARD, flags);
}

FftPlan::~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_));
}

void FftPlan::forward(std::span<Complex> data) const {
    fftw_execute_dft(static_cast<fftw_plan>(forward_), as_fftw(data), as_fftw(data));
}

void FftPlan::inverse(std::span<Complex> data) const {
    fftw_execute_dft(static_cast<fftw_plan>(inverse_), as_fftw(data), as_fftw(data));
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& z : data) z *= scale;
}

std::shared_ptr<const FftPlan> fft_plan(const GridSpec& grid) {
    using Key = std::tuple<int, std::size_t, std::size_t, std::size_t>;
    static std::mutex cache_mutex;
    static std::map<Key, std::shared_ptr<const FftPlan>> cache;
    const Key key{grid.dim(), grid.points(0), grid.points(1), grid.points(2)};
    std::lock_guard lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto plan = std::make_shared<const FftPlan>(grid);
    cache.emplace(key, plan);
    return plan;
}

std::vector<double> wavenumbers(const GridSpec& grid, int axis) {
    const std::size_t n = grid.points(axis);
    const double dk = 2.0 * std::numbers::pi / grid.extent(axis);
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto signed_i = static_cast<double>(i) - (i > n / 2 ? static_cast<double>(n) : 0.0);
        k[i] = dk * signed_i;
    }
    return k;
}

}  // namespace pilotwave::detail
