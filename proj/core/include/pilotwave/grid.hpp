#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pilotwave {

inline constexpr int kMaxDim = 3;

using Complex = std::complex<double>;

/// Position or small vector in up to three dimensions. Axes beyond the grid
/// dimension are kept at zero.
using Point = std::array<double, kMaxDim>;

/// Physical constants in natural units.
struct Units {
    double hbar = 1.0;
    double mass = 1.0;
};

enum class DerivativeScheme { spectral, central2 };

/// Uniform periodic box in one to three dimensions.
///
/// Sample i along an axis sits at origin + i * spacing, so the box covers
/// [origin, origin + extent). The default origin centres the box on zero.
/// Storage is row-major: the last axis varies fastest.
class GridSpec {
public:
    GridSpec(int dim, const std::array<double, kMaxDim>& extent,
             const std::array<std::size_t, kMaxDim>& points,
             const std::array<double, kMaxDim>& origin);

    int dim() const noexcept { return dim_; }
    double extent(int axis) const { return extent_[axis]; }
    std::size_t points(int axis) const { return points_[axis]; }
    double spacing(int axis) const { return extent_[axis] / static_cast<double>(points_[axis]); }
    double origin(int axis) const { return origin_[axis]; }

    /// Total number of samples.
    std::size_t size() const noexcept { return size_; }
    double cell_volume() const noexcept;
    double volume() const noexcept;
    double min_spacing() const noexcept;

    double coordinate(int axis, std::size_t i) const {
        return origin_[axis] + static_cast<double>(i) * spacing(axis);
    }
    Point position(std::size_t flat) const;

    std::array<std::size_t, kMaxDim> unravel(std::size_t flat) const;
    std::size_t ravel(const std::array<std::size_t, kMaxDim>& index) const;

    /// Wraps a position into the box.
    Point wrap(const Point& p) const;
    /// Minimum-image displacement a - b.
    Point displacement(const Point& a, const Point& b) const;

    bool operator==(const GridSpec& other) const = default;

private:
    int dim_;
    std::array<double, kMaxDim> extent_;
    std::array<std::size_t, kMaxDim> points_;
    std::array<double, kMaxDim> origin_;
    std::size_t size_;
};

/// Builds a validated grid centred on the origin. `points` holds either one
/// count shared by every axis or one per axis.
GridSpec make_grid(int dim, std::span<const double> extents, std::span<const std::size_t> points);
GridSpec make_grid(int dim, double extent, std::size_t points);

template <typename T>
struct ScalarField {
    GridSpec grid;
    std::vector<T> values;
    double time = 0.0;

    explicit ScalarField(const GridSpec& g, double t = 0.0) : grid(g), values(g.size()), time(t) {}
    ScalarField(const GridSpec& g, std::vector<T> v, double t);

    std::size_t size() const noexcept { return values.size(); }
    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
};

using ComplexField = ScalarField<Complex>;
using RealField = ScalarField<double>;

/// Real vector samples with a per-point validity mask. Masked points carry
/// zero components and are excluded from every norm.
struct VectorField {
    GridSpec grid;
    std::array<std::vector<double>, kMaxDim> components;
    std::vector<std::uint8_t> mask;
    double time = 0.0;

    explicit VectorField(const GridSpec& g, double t = 0.0);

    std::size_t size() const noexcept { return grid.size(); }
    bool valid(std::size_t i) const { return mask[i] != 0; }
    std::size_t valid_count() const;
    Point at(std::size_t i) const;
    void set(std::size_t i, const Point& value);
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);
void require_finite(const ComplexField& f, const char* what);
void require_finite(const RealField& f, const char* what);

double dot(const Point& a, const Point& b) noexcept;
double norm(const Point& a) noexcept;

}  // namespace pilotwave
