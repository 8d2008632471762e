#pragma once

// WF geometry on R_+^n x R^m and grid Holder norms.
//
// rho(p, q) = sum_j |sqrt x_j - sqrt x'_j| + sum_k |y_k - y'_k|. The metric
// ds^2 = dx^2/x is 2 rho in one dimension; the factor is dropped throughout.
// Grid seminorms are suprema over grid pairs only, hence lower bounds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/parallel.hpp"

namespace kimura {

struct WfPoint {
  std::vector<double> x;  // degenerate coordinates, all >= 0
  std::vector<double> y;  // Euclidean coordinates

  void validate() const {
    for (double v : x)
      if (!(v >= 0.0)) throw DomainError("WfPoint: degenerate coordinates must be nonnegative");
  }
};

inline double wf_distance(const WfPoint& p, const WfPoint& q) {
  if (p.x.size() != q.x.size() || p.y.size() != q.y.size()) throw DimensionError("wf_distance: dimension mismatch");
  p.validate();
  q.validate();
  double d = 0.0;
  for (std::size_t j = 0; j < p.x.size(); ++j) d += std::abs(std::sqrt(p.x[j]) - std::sqrt(q.x[j]));
  for (std::size_t k = 0; k < p.y.size(); ++k) d += std::abs(p.y[k] - q.y[k]);
  return d;
}

/// rho + sqrt|t - t'|.
inline double wf_parabolic_distance(const WfPoint& p, double t, const WfPoint& q, double s) {
  return wf_distance(p, q) + std::sqrt(std::abs(t - s));
}

/// The enlarged interval [alpha, beta] around [x1, x2]: each end moved out by
/// half the WF length of [x1, x2] (alpha clamped at 0).
inline std::pair<double, double> wf_ball_interval(double x1, double x2) {
  if (!(x1 >= 0.0 && x2 > x1)) throw DomainError("wf_ball_interval: need 0 <= x1 < x2");
  const double s1 = std::sqrt(x1), s2 = std::sqrt(x2);
  const double sa = std::max(0.5 * (3.0 * s1 - s2), 0.0), sb = 0.5 * (3.0 * s2 - s1);
  return {sa * sa, sb * sb};
}

/// Midpoint of [x1, x2] for rho: the image of the Euclidean midpoint under sqrt.
inline double wf_midpoint(double x1, double x2) {
  if (!(x1 >= 0.0 && x2 >= 0.0)) throw DomainError("wf_midpoint: points must be nonnegative");
  const double s = std::sqrt(x1) + std::sqrt(x2);
  return 0.25 * s * s;
}

enum class HolderMode { spatial, parabolic };

struct HolderComponent {
  std::string name;
  double sup_norm = 0.0;
  double seminorm = 0.0;
};

struct HolderReport {
  double gamma = 0.0;
  double sup_norm = 0.0;
  double seminorm = 0.0;              // over grid pairs at distance <= 1
  std::size_t pairs = 0;              // pairs entering the seminorm
  bool grid_restricted = true;        // always: a lower bound of the continuum value
  std::vector<HolderComponent> components;  // (2+gamma) norm: f, d f, x d^2 f
  bool vanishing_ok = true;           // x d^2 f -> 0 at x = 0
  double vanishing_value = 0.0;       // extrapolated x d^2 f at 0

  double norm() const {
    if (components.empty()) return sup_norm + seminorm;
    double s = 0.0;
    for (const auto& c : components) s += c.sup_norm + c.seminorm;
    return s;
  }
};

struct HolderOptions {
  HolderMode mode = HolderMode::spatial;
  /// Number of leading axes that are degenerate (x) coordinates; the rest are
  /// Euclidean. Negative means all spatial axes. In parabolic mode the last
  /// axis is time.
  int degenerate_axes = -1;
  double max_distance = 1.0;
  unsigned workers = 0;
};

/// sup |f(p) - f(q)| / rho(p, q)^gamma over grid pairs with 0 < rho <= 1.
inline HolderReport holder_seminorm(const GridFunction<double>& f, double gamma, const HolderOptions& opt = {}) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("holder_seminorm: gamma must lie in (0, 1]");
  f.validate_axes();
  if (f.values.size() != f.size()) throw DimensionError("holder_seminorm: value count mismatch");
  const std::size_t d = f.dim();
  const bool parabolic = opt.mode == HolderMode::parabolic;
  if (parabolic && d < 2) throw DimensionError("holder_seminorm: parabolic mode needs a time axis");
  const std::size_t spatial = parabolic ? d - 1 : d;
  const std::size_t nx = opt.degenerate_axes < 0 ? spatial : static_cast<std::size_t>(opt.degenerate_axes);
  if (nx > spatial) throw DimensionError("holder_seminorm: more degenerate axes than spatial axes");
  for (std::size_t a = 0; a < nx; ++a)
    if (f.axes[a].front() < 0.0) throw DomainError("holder_seminorm: degenerate axes must be nonnegative");

  // Per-axis transformed coordinates: sqrt for x axes; the metric is then l1.
  const std::size_t N = f.values.size();
  std::vector<double> coords(N * d);
  for (std::size_t k = 0; k < N; ++k) {
    const auto idx = f.unflatten(k);
    for (std::size_t a = 0; a < d; ++a) {
      const double v = f.axes[a][idx[a]];
      coords[k * d + a] = a < nx ? std::sqrt(v) : v;
    }
  }
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t a = 0; a < spatial; ++a) s += std::abs(coords[i * d + a] - coords[j * d + a]);
    if (parabolic) s += std::sqrt(std::abs(coords[i * d + d - 1] - coords[j * d + d - 1]));
    return s;
  };

  std::vector<double> row_max(N, 0.0);
  std::vector<std::size_t> row_pairs(N, 0);
  parallel_for(
      N,
      [&](std::size_t i) {
        double m = 0.0;
        std::size_t c = 0;
        for (std::size_t j = i + 1; j < N; ++j) {
          const double r = dist(i, j);
          if (!(r > 0.0) || r > opt.max_distance) continue;
          ++c;
          m = std::max(m, std::abs(f.values[i] - f.values[j]) / std::pow(r, gamma));
        }
        row_max[i] = m;
        row_pairs[i] = c;
      },
      opt.workers);
  HolderReport rep;
  rep.gamma = gamma;
  for (std::size_t i = 0; i < N; ++i) {
    rep.seminorm = std::max(rep.seminorm, row_max[i]);
    rep.pairs += row_pairs[i];
    rep.sup_norm = std::max(rep.sup_norm, std::abs(f.values[i]));
  }
  if (rep.pairs == 0) throw DomainError("holder_seminorm: no grid pairs within the distance cutoff");
  return rep;
}

namespace detail {

// Three-point derivative on a nonuniform 1-D grid (one-sided at the ends).
inline std::vector<double> diff1(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size();
  if (n < 3) throw DimensionError("finite differences need at least three nodes");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const double x0 = x[c - 1], x1 = x[c], x2 = x[c + 1], t = x[i];
    // derivative at t of the quadratic through the three nodes
    const double l0 = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
    const double l1 = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
    const double l2 = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
    d[i] = l0 * f[c - 1] + l1 * f[c] + l2 * f[c + 1];
  }
  return d;
}

}  // namespace detail

/// Components f, f', x f'' of a 1-D function in the gamma seminorm.
/// Missing derivatives are formed by finite differences; supplied ones must
/// be finite at every node except possibly x = 0.
inline HolderReport holder_norm_2plus(const GridFunction<double>& f, double gamma,
                                      const GridFunction<double>* df = nullptr,
                                      const GridFunction<double>* d2f = nullptr, const HolderOptions& opt = {}) {
  if (f.dim() != 1) throw DimensionError("holder_norm_2plus: one-dimensional data only");
  const auto& x = f.axes[0];
  if (x.front() < 0.0) throw DomainError("holder_norm_2plus: axis must lie in [0, inf)");
  if (x.size() < 4) throw DimensionError("holder_norm_2plus: need at least four nodes");
  auto check = [&](const GridFunction<double>* g, const char* what) {
    if (!g) return;
    if (g->axes != f.axes || g->values.size() != f.values.size())
      throw DimensionError(std::string("holder_norm_2plus: ") + what + " grid differs from f");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      if (!std::isfinite(g->values[i]))
        throw DomainError(std::string("holder_norm_2plus: missing ") + what + " data at x=" + std::to_string(x[i]));
    }
  };
  check(df, "first-derivative");
  check(d2f, "second-derivative");

  GridFunction<double> g1(f.axes, f.interpolation), g2(f.axes, f.interpolation);
  g1.values = df ? df->values : detail::diff1(x, f.values);
  const std::vector<double> d2 = d2f ? d2f->values : detail::diff1(x, g1.values);
  for (std::size_t i = 0; i < x.size(); ++i) g2.values[i] = x[i] == 0.0 ? 0.0 : x[i] * d2[i];
  // x f'' at 0 from the two smallest positive nodes: a local power law
  // v ~ c x^p with p > 0 decays to 0; otherwise the nearest value stands.
  std::size_t p = 0;
  while (p < x.size() && x[p] == 0.0) ++p;
  if (p + 1 >= x.size()) throw DimensionError("holder_norm_2plus: need two positive nodes");
  const double v0 = g2.values[p], v1 = g2.values[p + 1];
  double ext = v0;
  if (v0 == 0.0 || (v0 * v1 > 0.0 && std::log(v1 / v0) / std::log(x[p + 1] / x[p]) > 0.0)) ext = 0.0;
  if (p > 0) g2.values[0] = ext;

  HolderReport rep = holder_seminorm(f, gamma, opt);
  const HolderReport r1 = holder_seminorm(g1, gamma, opt), r2 = holder_seminorm(g2, gamma, opt);
  rep.components = {{"f", rep.sup_norm, rep.seminorm}, {"d f", r1.sup_norm, r1.seminorm},
                    {"x d2 f", r2.sup_norm, r2.seminorm}};
  rep.vanishing_value = ext;
  rep.vanishing_ok = std::abs(ext) <= 1e-3 * std::max(1.0, r2.sup_norm);
  return rep;
}

}  // namespace kimura
