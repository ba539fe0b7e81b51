#include "pilotwave/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "pilotwave/error.hpp"

namespace pilotwave {

namespace {

std::size_t axis_stride(const GridSpec& g, int axis) {
    std::size_t s = 1;
    for (int a = axis + 1; a < kMaxDim; ++a) s *= g.points(a);
    return s;
}

// Applies `fn(flat, index_along_axis)` for every sample.
template <typename Fn>
void for_each_axis_index(const GridSpec& g, int axis, Fn&& fn) {
    const std::size_t n = g.points(axis);
    const std::size_t stride = axis_stride(g, axis);
    for (std::size_t flat = 0; flat < g.size(); ++flat) fn(flat, (flat / stride) % n);
}

template <typename T>
std::vector<T> central_first(const std::vector<T>& v, const GridSpec& g, int axis) {
    const std::size_t n = g.points(axis);
    const std::size_t stride = axis_stride(g, axis);
    const double inv = 1.0 / (2.0 * g.spacing(axis));
    std::vector<T> out(v.size());
    for_each_axis_index(g, axis, [&](std::size_t flat, std::size_t i) {
        const std::size_t base = flat - i * stride;
        const std::size_t ip = base + ((i + 1) % n) * stride;
        const std::size_t im = base + ((i + n - 1) % n) * stride;
        out[flat] = (v[ip] - v[im]) * inv;
    });
    return out;
}

template <typename T>
std::vector<T> central_second(const std::vector<T>& v, const GridSpec& g) {
    std::vector<T> out(v.size(), T{});
    for (int axis = 0; axis < g.dim(); ++axis) {
        const std::size_t n = g.points(axis);
        const std::size_t stride = axis_stride(g, axis);
        const double h = g.spacing(axis);
        const double inv = 1.0 / (h * h);
        for_each_axis_index(g, axis, [&](std::size_t flat, std::size_t i) {
            const std::size_t base = flat - i * stride;
            const std::size_t ip = base + ((i + 1) % n) * stride;
            const std::size_t im = base + ((i + n - 1) % n) * stride;
            out[flat] += (v[ip] - 2.0 * v[flat] + v[im]) * inv;
        });
    }
    return out;
}

std::vector<Complex> spectrum(std::vector<Complex> v, const GridSpec& g) {
    detail::fft_plan(g)->forward(v);
    return v;
}

std::vector<Complex> spectral_first(const std::vector<Complex>& hat, const GridSpec& g, int axis) {
    const auto k = detail::wavenumbers(g, axis);
    const std::size_t nyq = detail::nyquist_index(g, axis);
    std::vector<Complex> out(hat.size());
    for_each_axis_index(g, axis, [&](std::size_t flat, std::size_t i) {
        out[flat] = (i == nyq) ? Complex{} : Complex(0.0, k[i]) * hat[flat];
    });
    detail::fft_plan(g)->inverse(out);
    return out;
}

std::vector<Complex> spectral_laplacian(std::vector<Complex> hat, const GridSpec& g) {
    std::vector<double> k2(hat.size(), 0.0);
    for (int axis = 0; axis < g.dim(); ++axis) {
        const auto k = detail::wavenumbers(g, axis);
        for_each_axis_index(g, axis, [&](std::size_t flat, std::size_t i) { k2[flat] += k[i] * k[i]; });
    }
    for (std::size_t j = 0; j < hat.size(); ++j) hat[j] *= -k2[j];
    detail::fft_plan(g)->inverse(hat);
    return hat;
}

std::vector<Complex> to_complex(const std::vector<double>& v) { return {v.begin(), v.end()}; }

std::vector<double> real_part(const std::vector<Complex>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](const Complex& z) { return z.real(); });
    return out;
}

}  // namespace

ComplexGradient gradient(const ComplexField& f, DerivativeScheme scheme) {
    const auto& g = f.grid;
    ComplexGradient out;
    out.reserve(g.dim());
    if (scheme == DerivativeScheme::central2) {
        for (int a = 0; a < g.dim(); ++a) out.emplace_back(g, central_first(f.values, g, a), f.time);
        return out;
    }
    const auto hat = spectrum(f.values, g);
    for (int a = 0; a < g.dim(); ++a) out.emplace_back(g, spectral_first(hat, g, a), f.time);
    return out;
}

VectorField gradient(const RealField& f, DerivativeScheme scheme) {
    const auto& g = f.grid;
    VectorField out(g, f.time);
    if (scheme == DerivativeScheme::central2) {
        for (int a = 0; a < g.dim(); ++a) out.components[a] = central_first(f.values, g, a);
        return out;
    }
    const auto hat = spectrum(to_complex(f.values), g);
    for (int a = 0; a < g.dim(); ++a) out.components[a] = real_part(spectral_first(hat, g, a));
    return out;
}

ComplexField laplacian(const ComplexField& f, DerivativeScheme scheme) {
    if (scheme == DerivativeScheme::central2) return {f.grid, central_second(f.values, f.grid), f.time};
    return {f.grid, spectral_laplacian(spectrum(f.values, f.grid), f.grid), f.time};
}

RealField laplacian(const RealField& f, DerivativeScheme scheme) {
    if (scheme == DerivativeScheme::central2) return {f.grid, central_second(f.values, f.grid), f.time};
    return {f.grid, real_part(spectral_laplacian(spectrum(to_complex(f.values), f.grid), f.grid)), f.time};
}

ComplexField divergence(std::span<const ComplexField> components, DerivativeScheme scheme) {
    if (components.empty()) throw ValidationError("divergence: no components");
    const auto& g = components[0].grid;
    if (components.size() != static_cast<std::size_t>(g.dim())) {
        throw ValidationError("divergence: need one component per axis");
    }
    ComplexField out(g, components[0].time);
    for (int a = 0; a < g.dim(); ++a) {
        require_same_grid(g, components[a].grid, "divergence");
        const auto d = scheme == DerivativeScheme::central2 ? central_first(components[a].values, g, a)
                                                            : spectral_first(spectrum(components[a].values, g), g, a);
        for (std::size_t j = 0; j < d.size(); ++j) out.values[j] += d[j];
    }
    return out;
}

MaskedRealField divergence(const VectorField& f, DerivativeScheme scheme) {
    const auto& g = f.grid;
    MaskedRealField out{RealField(g, f.time), f.mask};
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<double> c = f.components[a];
        for (std::size_t j = 0; j < c.size(); ++j) {
            if (!f.mask[j]) c[j] = 0.0;
        }
        const auto d = scheme == DerivativeScheme::central2 ? central_first(c, g, a)
                                                            : real_part(spectral_first(spectrum(to_complex(c), g), g, a));
        for (std::size_t j = 0; j < d.size(); ++j) out.field.values[j] += d[j];
    }
    for (std::size_t j = 0; j < out.mask.size(); ++j) {
        if (!out.mask[j]) out.field.values[j] = 0.0;
    }
    return out;
}

double norm_squared_integral(const ComplexField& f) {
    double sum = 0.0;
    for (const auto& z : f.values) sum += std::norm(z);
    return sum * f.grid.cell_volume();
}

RealField mollified_delta(const Point& center, double epsilon, const GridSpec& grid) {
    if (!(epsilon >= 3.0 * grid.min_spacing() * (1.0 - 1e-12))) {
        throw ValidationError("mollifier width " + std::to_string(epsilon) +
                              " is below the resolution floor of 3 grid spacings");
    }
    RealField out(grid);
    const int dim = grid.dim();
    const double norm = std::pow(2.0 * std::numbers::pi * epsilon * epsilon, -0.5 * dim);
    // Per-axis image sums factorise the periodic Gaussian.
    std::array<std::vector<double>, kMaxDim> axis_weight;
    for (int a = 0; a < dim; ++a) {
        const double L = grid.extent(a);
        const int images = 1 + static_cast<int>(std::ceil(12.0 * epsilon / L));
        axis_weight[a].resize(grid.points(a));
        for (std::size_t i = 0; i < grid.points(a); ++i) {
            double w = 0.0;
            double u = grid.coordinate(a, i) - center[a];
            u -= L * std::round(u / L);
            for (int m = -images; m <= images; ++m) {
                const double s = u + m * L;
                w += std::exp(-0.5 * s * s / (epsilon * epsilon));
            }
            axis_weight[a][i] = w;
        }
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto idx = grid.unravel(j);
        double w = norm;
        for (int a = 0; a < dim; ++a) w *= axis_weight[a][idx[a]];
        out.values[j] = w;
    }
    return out;
}

ComplexField conj(const ComplexField& f) {
    ComplexField out(f.grid, f.time);
    std::transform(f.values.begin(), f.values.end(), out.values.begin(), [](const Complex& z) { return std::conj(z); });
    return out;
}

RealField abs2(const ComplexField& f) {
    RealField out(f.grid, f.time);
    std::transform(f.values.begin(), f.values.end(), out.values.begin(), [](const Complex& z) { return std::norm(z); });
    return out;
}

namespace {

struct Stencil {
    std::array<std::size_t, kMaxDim> lo{};
    std::array<std::size_t, kMaxDim> hi{};
    std::array<double, kMaxDim> frac{};
};

Stencil locate(const GridSpec& g, const Point& p) {
    Stencil s;
    for (int a = 0; a < g.dim(); ++a) {
        const std::size_t n = g.points(a);
        double u = (p[a] - g.origin(a)) / g.spacing(a);
        u -= static_cast<double>(n) * std::floor(u / static_cast<double>(n));
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= n) i = n - 1;
        s.lo[a] = i;
        s.hi[a] = (i + 1) % n;
        s.frac[a] = std::clamp(u - static_cast<double>(i), 0.0, 1.0);
    }
    return s;
}

template <typename Fn>
void for_each_corner(const GridSpec& g, const Stencil& s, Fn&& fn) {
    const int corners = 1 << g.dim();
    for (int c = 0; c < corners; ++c) {
        std::array<std::size_t, kMaxDim> idx{};
        double w = 1.0;
        for (int a = 0; a < g.dim(); ++a) {
            const bool upper = (c >> a) & 1;
            idx[a] = upper ? s.hi[a] : s.lo[a];
            w *= upper ? s.frac[a] : 1.0 - s.frac[a];
        }
        fn(g.ravel(idx), w);
    }
}

}  // namespace

double interpolate_linear(std::span<const double> values, const GridSpec& grid, const Point& p) {
    double sum = 0.0;
    for_each_corner(grid, locate(grid, p), [&](std::size_t j, double w) { sum += w * values[j]; });
    return sum;
}

std::optional<Point> interpolate_linear(const VectorField& f, const Point& p) {
    Point out{};
    bool ok = true;
    for_each_corner(f.grid, locate(f.grid, p), [&](std::size_t j, double w) {
        if (!f.mask[j]) {
            ok = false;
            return;
        }
        for (int a = 0; a < f.grid.dim(); ++a) out[a] += w * f.components[a][j];
    });
    if (!ok) return std::nullopt;
    return out;
}

SpectralInterpolant::SpectralInterpolant(const ComplexField& f) : grid_(f.grid), coefficients_(f.values) {
    detail::fft_plan(grid_)->forward(coefficients_);
    const double inv_n = 1.0 / static_cast<double>(grid_.size());
    for (auto& c : coefficients_) c *= inv_n;
    for (int a = 0; a < grid_.dim(); ++a) k_[a] = detail::wavenumbers(grid_, a);
}

Complex SpectralInterpolant::operator()(const Point& p) const {
    std::array<std::vector<Complex>, kMaxDim> phase;
    for (int a = 0; a < kMaxDim; ++a) {
        if (a >= grid_.dim()) {
            phase[a].assign(1, Complex(1.0, 0.0));
            continue;
        }
        const double u = p[a] - grid_.origin(a);
        const std::size_t nyq = detail::nyquist_index(grid_, a);
        phase[a].resize(grid_.points(a));
        for (std::size_t i = 0; i < grid_.points(a); ++i) {
            phase[a][i] = i == nyq ? Complex(std::cos(k_[a][i] * u), 0.0) : std::polar(1.0, k_[a][i] * u);
        }
    }
    Complex sum{};
    std::size_t j = 0;
    for (std::size_t i0 = 0; i0 < phase[0].size(); ++i0) {
        for (std::size_t i1 = 0; i1 < phase[1].size(); ++i1) {
            const Complex p01 = phase[0][i0] * phase[1][i1];
            for (std::size_t i2 = 0; i2 < phase[2].size(); ++i2) sum += coefficients_[j++] * p01 * phase[2][i2];
        }
    }
    return sum;
}

}  // namespace pilotwave
