#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "pilotwave/grid.hpp"

namespace pilotwave {

/// Cumulative distribution of a 1D periodic grid density, taken as piecewise
/// linear between samples (the cumulative trapezoid). Normalises internally.
class DensityCdf1D {
public:
    explicit DensityCdf1D(const RealField& density);

    /// P(X <= x) for x in [origin, origin + extent).
    double operator()(double x) const;
    /// Position whose cumulative probability is u in [0, 1).
    double inverse(double u) const;

private:
    double origin_;
    double spacing_;
    std::vector<double> density_;  // normalised, one entry per sample plus wrap
    std::vector<double> cumulative_;
};

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and a continuous CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Critical value for the one-sample KS distance at 99% confidence.
inline double ks_critical_99(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Upper-tail probability of the chi-square statistic of observed counts
/// against expected counts. Bins whose expectation is below `min_expected`
/// are pooled into one bin first.
double chi_square_p_value(std::span<const double> observed, std::span<const double> expected,
                          double min_expected = 5.0);

/// Uniform doubles in [0, 1) from a 64-bit engine, identical on every platform.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pilotwave
