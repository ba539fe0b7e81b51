#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "pilotwave/grid.hpp"

namespace oracle {

using pilotwave::Complex;
using pilotwave::GridSpec;

// Free Gaussian with density standard deviation sigma0, centred at 0.
inline Complex free_gaussian(double x, double t, double sigma0, double hbar = 1.0, double m = 1.0) {
    const Complex s(1.0, hbar * t / (2.0 * m * sigma0 * sigma0));
    return std::pow(2.0 * std::numbers::pi * sigma0 * sigma0, -0.25) / std::sqrt(s) *
           std::exp(-x * x / (4.0 * sigma0 * sigma0 * s));
}

inline double free_gaussian_width(double t, double sigma0, double hbar = 1.0, double m = 1.0) {
    const double r = hbar * t / (2.0 * m * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + r * r);
}

inline double free_gaussian_velocity(double x, double t, double sigma0, double hbar = 1.0, double m = 1.0) {
    return x * hbar * hbar * t / (4.0 * m * m * std::pow(sigma0, 4) + hbar * hbar * t * t);
}

// Periodic image sum of the free Gaussian on a box of length L.
inline Complex free_gaussian_periodic(double x, double t, double sigma0, double L, int images = 3) {
    Complex s{};
    for (int k = -images; k <= images; ++k) s += free_gaussian(x + k * L, t, sigma0);
    return s;
}

// Product of 1D free Gaussians, one per active axis.
inline Complex free_gaussian_nd(const pilotwave::Point& p, int dim, double t, double sigma0) {
    Complex v(1.0, 0.0);
    for (int a = 0; a < dim; ++a) v *= free_gaussian(p[a], t, sigma0);
    return v;
}

inline pilotwave::ComplexField sample_free_gaussian(const GridSpec& g, double t, double sigma0) {
    pilotwave::ComplexField f(g, t);
    for (std::size_t j = 0; j < g.size(); ++j) f.values[j] = free_gaussian_nd(g.position(j), g.dim(), t, sigma0);
    return f;
}

// Harmonic oscillator ground state, energy hbar omega / 2.
inline Complex harmonic_ground(double x, double t, double omega, double hbar = 1.0, double m = 1.0) {
    const double a = m * omega / hbar;
    return std::pow(a / std::numbers::pi, 0.25) * std::exp(-0.5 * a * x * x) * std::polar(1.0, -0.5 * omega * t);
}

// Plane wave exp(i(kx - hbar k^2 t / 2m)) / sqrt(L).
inline Complex plane_wave(double x, double t, double k, double L, double hbar = 1.0, double m = 1.0) {
    return std::polar(1.0 / std::sqrt(L), k * x - hbar * k * k * t / (2.0 * m));
}

}  // namespace oracle
