#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pilotwave/grid.hpp"

namespace pilotwave::detail {

/// In-place multi-dimensional complex DFT on a grid's sample layout.
/// Plans are shared between callers; executing them is thread-safe.
class FftPlan {
public:
    explicit FftPlan(const GridSpec& grid);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    void forward(std::span<Complex> data) const;
    /// Inverse transform including the 1/N normalisation.
    void inverse(std::span<Complex> data) const;

private:
    void* forward_ = nullptr;
    void* inverse_ = nullptr;
    std::size_t size_;
};

std::shared_ptr<const FftPlan> fft_plan(const GridSpec& grid);

/// Angular wavenumbers for each sample index along one axis, in FFT order.
/// The Nyquist entry is reported with a positive sign.
std::vector<double> wavenumbers(const GridSpec& grid, int axis);

/// Index along an axis of the Nyquist mode, which odd derivatives zero out.
inline std::size_t nyquist_index(const GridSpec& grid, int axis) { return grid.points(axis) / 2; }

}  // namespace pilotwave::detail
