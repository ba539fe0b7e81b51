#include "pilotwave/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "pilotwave/error.hpp"

namespace pilotwave {

DensityCdf1D::DensityCdf1D(const RealField& density)
    : origin_(density.grid.origin(0)), spacing_(density.grid.spacing(0)) {
    if (density.grid.dim() != 1) throw ValidationError("DensityCdf1D needs a 1D density");
    const std::size_t n = density.size();
    density_.assign(density.values.begin(), density.values.end());
    density_.push_back(density.values.front());
    for (double d : density_) {
        if (!(d >= 0.0)) throw ValidationError("density must be nonnegative");
    }
    cumulative_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        cumulative_[i + 1] = cumulative_[i] + 0.5 * spacing_ * (density_[i] + density_[i + 1]);
    }
    const double total = cumulative_.back();
    if (!(total > 0.0)) throw DegenerateFieldError("density integrates to zero");
    for (auto& d : density_) d /= total;
    for (auto& c : cumulative_) c /= total;
}

double DensityCdf1D::operator()(double x) const {
    const std::size_t n = density_.size() - 1;
    const double u = (x - origin_) / spacing_;
    if (u <= 0.0) return 0.0;
    if (u >= static_cast<double>(n)) return 1.0;
    const auto i = std::min(static_cast<std::size_t>(u), n - 1);
    const double s = (u - static_cast<double>(i)) * spacing_;
    const double slope = (density_[i + 1] - density_[i]) / spacing_;
    return cumulative_[i] + density_[i] * s + 0.5 * slope * s * s;
}

double DensityCdf1D::inverse(double u) const {
    const std::size_t n = density_.size() - 1;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    // Skip zero-mass cells so the quadratic below is well posed.
    while (i + 1 < n && cumulative_[i + 1] <= cumulative_[i]) ++i;
    i = std::min(i, n - 1);
    const double r = std::max(0.0, u - cumulative_[i]);
    const double a = (density_[i + 1] - density_[i]) / spacing_;
    const double disc = std::max(0.0, density_[i] * density_[i] + 2.0 * a * r);
    const double den = density_[i] + std::sqrt(disc);
    double s = den > 0.0 ? 2.0 * r / den : 0.0;
    s = std::clamp(s, 0.0, spacing_);
    return origin_ + static_cast<double>(i) * spacing_ + s;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ValidationError("ks_distance needs at least one sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

double chi_square_p_value(std::span<const double> observed, std::span<const double> expected,
                          double min_expected) {
    if (observed.size() != expected.size()) throw ValidationError("chi-square: bin count mismatch");
    double stat = 0.0;
    std::size_t bins = 0;
    double pooled_obs = 0.0;
    double pooled_exp = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < min_expected) {
            pooled_obs += observed[i];
            pooled_exp += expected[i];
            continue;
        }
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++bins;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++bins;
    }
    if (bins < 2) throw ValidationError("chi-square needs at least two usable bins");
    const boost::math::chi_squared dist(static_cast<double>(bins - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace pilotwave
