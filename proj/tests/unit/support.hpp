#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "pilotwave/grid.hpp"

namespace testing_support {

using pilotwave::Complex;
using pilotwave::ComplexField;
using pilotwave::GridSpec;
using pilotwave::RealField;

template <typename F>
ComplexField complex_from(const GridSpec& g, F&& f, double t = 0.0) {
    ComplexField out(g, t);
    for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = f(g.position(j));
    return out;
}

template <typename F>
RealField real_from(const GridSpec& g, F&& f, double t = 0.0) {
    RealField out(g, t);
    for (std::size_t j = 0; j < g.size(); ++j) out.values[j] = f(g.position(j));
    return out;
}

inline double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline double l2(const std::vector<Complex>& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

inline double rel_l2(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += std::norm(a[j] - b[j]);
        den += std::norm(b[j]);
    }
    return std::sqrt(num / den);
}

// A few Fourier modes with random complex amplitudes, all below `kmax`
// (in units of the fundamental) on every axis of a periodic box.
struct RandomModes {
    struct Mode {
        std::array<int, 3> k;
        Complex amplitude;
    };
    std::vector<Mode> modes;
    std::array<double, 3> base{};
    int dim = 1;

    RandomModes(const GridSpec& g, std::mt19937_64& rng, int count, int kmax, double scale) {
        dim = g.dim();
        for (int a = 0; a < dim; ++a) base[a] = 2.0 * M_PI / g.extent(a);
        std::uniform_int_distribution<int> kd(-kmax, kmax);
        std::uniform_real_distribution<double> ad(-1.0, 1.0);
        for (int i = 0; i < count; ++i) {
            Mode m{{0, 0, 0}, Complex(scale * ad(rng), scale * ad(rng))};
            for (int a = 0; a < dim; ++a) m.k[a] = kd(rng);
            modes.push_back(m);
        }
    }

    Complex operator()(const pilotwave::Point& p) const {
        Complex s{};
        for (const auto& m : modes) {
            double phase = 0.0;
            for (int a = 0; a < dim; ++a) phase += m.k[a] * base[a] * p[a];
            s += m.amplitude * std::polar(1.0, phase);
        }
        return s;
    }
};

}  // namespace testing_support
