#include "pilotwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pilotwave/error.hpp"

namespace pilotwave {

GridSpec::GridSpec(int dim, const std::array<double, kMaxDim>& extent,
                   const std::array<std::size_t, kMaxDim>& points,
                   const std::array<double, kMaxDim>& origin)
    : dim_(dim), extent_(extent), points_(points), origin_(origin), size_(1) {
    if (dim < 1 || dim > kMaxDim) {
        throw ValidationError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
    for (int a = 0; a < kMaxDim; ++a) {
        if (a >= dim) {
            extent_[a] = 1.0;
            points_[a] = 1;
            origin_[a] = 0.0;
            continue;
        }
        if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a])) {
            throw ValidationError("extent must be positive on axis " + std::to_string(a));
        }
        if (points_[a] < 8 || points_[a] % 2 != 0) {
            throw ValidationError("points must be even >= 8 on axis " + std::to_string(a) + ", got " +
                                  std::to_string(points_[a]));
        }
        if (!std::isfinite(origin_[a])) {
            throw ValidationError("origin must be finite");
        }
        size_ *= points_[a];
    }
}

double GridSpec::cell_volume() const noexcept {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
}

double GridSpec::volume() const noexcept {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= extent_[a];
    return v;
}

double GridSpec::min_spacing() const noexcept {
    double h = spacing(0);
    for (int a = 1; a < dim_; ++a) h = std::min(h, spacing(a));
    return h;
}

Point GridSpec::position(std::size_t flat) const {
    const auto idx = unravel(flat);
    Point p{};
    for (int a = 0; a < dim_; ++a) p[a] = coordinate(a, idx[a]);
    return p;
}

std::array<std::size_t, kMaxDim> GridSpec::unravel(std::size_t flat) const {
    std::array<std::size_t, kMaxDim> idx{};
    for (int a = kMaxDim - 1; a >= 0; --a) {
        idx[a] = flat % points_[a];
        flat /= points_[a];
    }
    return idx;
}

std::size_t GridSpec::ravel(const std::array<std::size_t, kMaxDim>& index) const {
    return (index[0] * points_[1] + index[1]) * points_[2] + index[2];
}

Point GridSpec::wrap(const Point& p) const {
    Point out{};
    for (int a = 0; a < dim_; ++a) {
        double u = std::fmod(p[a] - origin_[a], extent_[a]);
        if (u < 0.0) u += extent_[a];
        if (u >= extent_[a]) u = 0.0;
        out[a] = origin_[a] + u;
    }
    return out;
}

Point GridSpec::displacement(const Point& a, const Point& b) const {
    Point d{};
    for (int ax = 0; ax < dim_; ++ax) {
        double u = a[ax] - b[ax];
        u -= extent_[ax] * std::round(u / extent_[ax]);
        d[ax] = u;
    }
    return d;
}

GridSpec make_grid(int dim, std::span<const double> extents, std::span<const std::size_t> points) {
    if (dim < 1 || dim > kMaxDim) {
        throw ValidationError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
    auto pick = [dim](auto span, int axis, const char* name) {
        if (span.size() == 1) return span[0];
        if (span.size() != static_cast<std::size_t>(dim)) {
            throw ValidationError(std::string(name) + " needs 1 or " + std::to_string(dim) + " entries");
        }
        return span[axis];
    };
    std::array<double, kMaxDim> ext{1.0, 1.0, 1.0};
    std::array<std::size_t, kMaxDim> pts{1, 1, 1};
    std::array<double, kMaxDim> origin{};
    for (int a = 0; a < dim; ++a) {
        ext[a] = pick(extents, a, "extents");
        pts[a] = pick(points, a, "points");
        origin[a] = -0.5 * ext[a];
    }
    return GridSpec(dim, ext, pts, origin);
}

GridSpec make_grid(int dim, double extent, std::size_t points) {
    return make_grid(dim, std::span<const double>(&extent, 1), std::span<const std::size_t>(&points, 1));
}

template <typename T>
ScalarField<T>::ScalarField(const GridSpec& g, std::vector<T> v, double t)
    : grid(g), values(std::move(v)), time(t) {
    if (values.size() != grid.size()) {
        throw ValidationError("field has " + std::to_string(values.size()) + " values for a grid of " +
                              std::to_string(grid.size()) + " points");
    }
}

template struct ScalarField<Complex>;
template struct ScalarField<double>;

VectorField::VectorField(const GridSpec& g, double t) : grid(g), mask(g.size(), 1), time(t) {
    for (int a = 0; a < g.dim(); ++a) components[a].assign(g.size(), 0.0);
}

std::size_t VectorField::valid_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Point VectorField::at(std::size_t i) const {
    Point p{};
    for (int a = 0; a < grid.dim(); ++a) p[a] = components[a][i];
    return p;
}

void VectorField::set(std::size_t i, const Point& value) {
    for (int a = 0; a < grid.dim(); ++a) components[a][i] = value[a];
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw ValidationError(std::string(what) + ": inputs are on different grids");
}

void require_finite(const ComplexField& f, const char* what) {
    for (const auto& z : f.values) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw ValidationError(std::string(what) + ": field contains non-finite values");
        }
    }
}

void require_finite(const RealField& f, const char* what) {
    for (double x : f.values) {
        if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": field contains non-finite values");
    }
}

double dot(const Point& a, const Point& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Point& a) noexcept { return std::sqrt(dot(a, a)); }

}  // namespace pilotwave
