#pragma once

// Values on a rectangular tensor grid, row-major with the last axis fastest.
// Interpolation clamps to the grid box, i.e. data are extended by their
// boundary values.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "kimura/errors.hpp"

namespace kimura {

enum class Interpolation { linear, pchip };

/// Strictly increasing 1-D axis helpers.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw DomainError("linspace: need at least two points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

template <class T = double>
struct GridFunction {
  std::vector<std::vector<double>> axes;
  std::vector<T> values;
  Interpolation interpolation = Interpolation::pchip;
  std::map<std::string, std::string> metadata;  // truncation and provenance of the numbers

  GridFunction() = default;
  explicit GridFunction(std::vector<std::vector<double>> ax, Interpolation mode = Interpolation::pchip)
      : axes(std::move(ax)), interpolation(mode) {
    validate_axes();
    values.assign(size(), T{});
  }

  void validate_axes() const {
    if (axes.empty()) throw DimensionError("GridFunction: no axes");
    for (const auto& a : axes) {
      if (a.empty()) throw DimensionError("GridFunction: empty axis");
      for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] > a[i - 1])) throw DomainError("GridFunction: axis coordinates must be strictly increasing");
    }
  }

  std::size_t dim() const { return axes.size(); }
  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes) s *= a.size();
    return s;
  }

  /// Multi-index of flat index k.
  std::vector<std::size_t> unflatten(std::size_t k) const {
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
      idx[d] = k % axes[d].size();
      k /= axes[d].size();
    }
    return idx;
  }

  std::size_t flatten(const std::vector<std::size_t>& idx) const {
    std::size_t k = 0;
    for (std::size_t d = 0; d < axes.size(); ++d) k = k * axes[d].size() + idx[d];
    return k;
  }

  std::vector<double> point(std::size_t k) const {
    auto idx = unflatten(k);
    std::vector<double> p(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d) p[d] = axes[d][idx[d]];
    return p;
  }

  /// Samples f at every grid point.
  template <class F>
  void fill(F&& f) {
    values.resize(size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = static_cast<T>(f(point(k)));
  }

  T operator()(const std::vector<double>& p) const { return interpolate(p); }

  T interpolate(const std::vector<double>& p) const {
    if (p.size() != axes.size()) throw DimensionError("GridFunction::interpolate: point dimension mismatch");
    return interp_rec(p, 0, 0);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, static_cast<double>(std::abs(v)));
    return m;
  }

 private:
  // Value of the sub-tensor whose leading d axes are fixed (flat offset base).
  T interp_rec(const std::vector<double>& p, std::size_t d, std::size_t base) const {
    const auto& a = axes[d];
    const std::size_t n = a.size();
    auto sub = [&](std::size_t i) {
      const std::size_t off = base * n + i;
      if (d + 1 == axes.size()) return values[off];
      return interp_rec(p, d + 1, off);
    };
    if (n == 1) return sub(0);
    const double x = std::clamp(p[d], a.front(), a.back());
    std::size_t i = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1) - 1;  // a[i] <= x <= a[i+1]
    const double h = a[i + 1] - a[i];
    const double s = (x - a[i]) / h;
    const T f0 = sub(i), f1 = sub(i + 1);
    if (interpolation == Interpolation::linear || n == 2) return f0 + (f1 - f0) * s;
    // PCHIP: Fritsch-Butland derivatives from the neighbouring secants.
    auto secant = [&](std::size_t j, const T& fa, const T& fb) { return (fb - fa) / (a[j + 1] - a[j]); };
    const T d0 = secant(i, f0, f1);
    T m0, m1;
    if (i > 0) {
      const T fm = sub(i - 1);
      m0 = pchip_slope(secant(i - 1, fm, f0), d0, a[i] - a[i - 1], h);
    } else {
      const T f2 = sub(i + 2);
      m0 = pchip_end(d0, secant(i + 1, f1, f2), h, a[i + 2] - a[i + 1]);
    }
    if (i + 2 < n) {
      const T f2 = sub(i + 2);
      m1 = pchip_slope(d0, secant(i + 1, f1, f2), h, a[i + 2] - a[i + 1]);
    } else {
      const T fm = sub(i - 1);
      m1 = pchip_end(d0, secant(i - 1, fm, f0), h, a[i] - a[i - 1]);
    }
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return f0 * h00 + m0 * (h10 * h) + f1 * h01 + m1 * (h11 * h);
  }

  static T pchip_slope(const T& d1, const T& d2, double h1, double h2) {
    if constexpr (std::is_floating_point_v<T>) {
      if (d1 * d2 <= 0) return T{};
      const double w1 = 2 * h2 + h1, w2 = h2 + 2 * h1;
      return (w1 + w2) / (w1 / d1 + w2 / d2);
    } else {
      return (d1 * h2 + d2 * h1) / (h1 + h2);  // complex data: plain three-point slope
    }
  }

  static T pchip_end(const T& d1, const T& d2, double h1, double h2) {
    T m = ((2 * h1 + h2) * d1 - h1 * d2) / (h1 + h2);
    if constexpr (std::is_floating_point_v<T>) {
      if (m * d1 <= 0) return T{};
      if (d1 * d2 <= 0 && std::abs(m) > std::abs(3 * d1)) return 3 * d1;
    }
    return m;
  }
};

/// Real part of a complex grid function.
inline GridFunction<double> real_part(const GridFunction<std::complex<double>>& g) {
  GridFunction<double> r;
  r.axes = g.axes;
  r.interpolation = g.interpolation;
  r.metadata = g.metadata;
  r.values.resize(g.values.size());
  for (std::size_t i = 0; i < g.values.size(); ++i) r.values[i] = g.values[i].real();
  return r;
}

}  // namespace kimura
