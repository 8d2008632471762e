#pragma once

// Quadrature building blocks: Gauss-Legendre rules, a globally adaptive
// Gauss-Kronrod (7,15) integrator for scalar, complex and vector-valued
// integrands, and a helper for algebraic endpoint weights y^{beta-1}.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <queue>
#include <sstream>
#include <type_traits>
#include <vector>

#include "kimura/errors.hpp"

namespace kimura {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussRule make_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Cached rule for a compile-time order.
template <int N>
const GaussRule& gauss_legendre() {
  static const GaussRule rule = make_gauss_legendre(N);
  return rule;
}

// ---------------------------------------------------------------------------
// value-type helpers so one adaptive driver serves double, complex and vectors

namespace detail {

inline double qnorm(double v) { return std::abs(v); }
inline double qnorm(std::complex<double> v) { return std::abs(v); }
template <class T>
double qnorm(const std::vector<T>& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, qnorm(e));
  return m;
}

template <class T>
T qzero_like(const T&) {
  return T{};
}
template <class T>
std::vector<T> qzero_like(const std::vector<T>& v) {
  return std::vector<T>(v.size(), T{});
}

inline void qaxpy(double& acc, double w, double v) { acc += w * v; }
inline void qaxpy(std::complex<double>& acc, double w, std::complex<double> v) { acc += w * v; }
template <class T>
void qaxpy(std::vector<T>& acc, double w, const std::vector<T>& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
}

template <class T>
T qdiff(const T& a, const T& b) {
  return a - b;
}
template <class T>
std::vector<T> qdiff(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

struct Kronrod15 {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  // Gauss 7-point weights at xgk[1], xgk[3], xgk[5], xgk[7]
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
};

}  // namespace detail

struct QuadTolerance {
  double abs = 1e-12;
  double rel = 1e-12;
  int max_intervals = 4000;
};

template <class T>
struct QuadResult {
  T value;
  double error = 0.0;
  int evaluations = 0;
  int intervals = 0;
  bool converged = true;
};

namespace detail {

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  using K = Kronrod15;
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fc = f(c);
  T kron = qzero_like(fc), gauss = qzero_like(fc);
  qaxpy(kron, K::wgk[7], fc);
  qaxpy(gauss, K::wg[3], fc);
  for (int j = 0; j < 7; ++j) {
    const double dx = h * K::xgk[j];
    T f1 = f(c - dx);
    T f2 = f(c + dx);
    qaxpy(kron, K::wgk[j], f1);
    qaxpy(kron, K::wgk[j], f2);
    if (j % 2 == 1) {
      qaxpy(gauss, K::wg[j / 2], f1);
      qaxpy(gauss, K::wg[j / 2], f2);
    }
  }
  T value = qzero_like(kron);
  qaxpy(value, h, kron);
  T g = qzero_like(gauss);
  qaxpy(g, h, gauss);
  double err = qnorm(qdiff(value, g));
  return {a, b, std::move(value), err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration over the union of the
/// intervals between consecutive breakpoints. Does not throw; check
/// `converged`.
template <class F>
auto integrate_adaptive(F&& f, const std::vector<double>& breakpoints, QuadTolerance tol = {}) {
  using T = std::decay_t<decltype(f(0.0))>;
  using Seg = detail::Segment<T>;
  std::priority_queue<Seg> queue;
  QuadResult<T> result;
  bool first = true;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    Seg s = detail::gk15<T>(f, breakpoints[i], breakpoints[i + 1]);
    result.evaluations += 15;
    if (first) {
      result.value = detail::qzero_like(s.value);
      first = false;
    }
    queue.push(std::move(s));
  }
  if (first) {
    result.value = T{};
    return result;
  }
  auto total = [&queue, &result]() {
    T v = detail::qzero_like(result.value);
    double e = 0.0;
    auto copy = queue;
    while (!copy.empty()) {
      detail::qaxpy(v, 1.0, copy.top().value);
      e += copy.top().error;
      copy.pop();
    }
    return std::pair<T, double>(std::move(v), e);
  };
  // Running sums avoid re-summing the queue on each iteration.
  auto [value, error] = total();
  while (true) {
    const double target = std::max(tol.abs, tol.rel * detail::qnorm(value));
    if (error <= target) break;
    if (static_cast<int>(queue.size()) >= tol.max_intervals) {
      result.converged = false;
      break;
    }
    Seg worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted in floating point
      result.converged = false;
      queue.push(std::move(worst));
      break;
    }
    Seg left = detail::gk15<T>(f, worst.a, mid);
    Seg right = detail::gk15<T>(f, mid, worst.b);
    result.evaluations += 30;
    detail::qaxpy(value, -1.0, worst.value);
    detail::qaxpy(value, 1.0, left.value);
    detail::qaxpy(value, 1.0, right.value);
    error += left.error + right.error - worst.error;
    queue.push(std::move(left));
    queue.push(std::move(right));
  }
  // Resum once for a clean final value.
  auto [v, e] = total();
  result.value = std::move(v);
  result.error = e;
  result.intervals = static_cast<int>(queue.size());
  return result;
}

template <class F>
auto integrate_adaptive(F&& f, double a, double b, QuadTolerance tol = {}) {
  return integrate_adaptive(std::forward<F>(f), std::vector<double>{a, b}, tol);
}

/// integrate_adaptive, throwing ConvergenceError when the tolerance is missed.
template <class F>
auto integrate_or_throw(F&& f, const std::vector<double>& breakpoints, QuadTolerance tol,
                        const char* context) {
  auto r = integrate_adaptive(std::forward<F>(f), breakpoints, tol);
  if (!r.converged) {
    std::ostringstream msg;
    msg << context << ": adaptive quadrature did not converge (error estimate " << r.error
        << ", intervals " << r.intervals << ", evaluations " << r.evaluations << ")";
    throw ConvergenceError(msg.str());
  }
  return r;
}

/// Integral of y^{beta-1} G(y) over [0, y0] for beta > 0. For beta < 1 the
/// substitution v = (y/y0)^beta removes the endpoint singularity:
///   (y0^beta / beta) * int_0^1 G(y0 v^{1/beta}) dv.
template <class G>
auto integrate_algebraic_endpoint(double beta, double y0, G&& g, QuadTolerance tol = {}) {
  detail::require(beta > 0.0, "integrate_algebraic_endpoint: beta must be positive");
  using T = std::decay_t<decltype(g(0.0))>;
  if (beta < 1.0) {
    const double scale = std::pow(y0, beta) / beta;
    auto again = integrate_adaptive(
        [&](double v) -> T { return g(y0 * std::pow(v, 1.0 / beta)); }, 0.0, 1.0,
        QuadTolerance{tol.abs / scale, tol.rel, tol.max_intervals});
    QuadResult<T> out = again;
    out.value = detail::qzero_like(again.value);
    detail::qaxpy(out.value, scale, again.value);
    out.error = again.error * scale;
    return out;
  }
  return integrate_adaptive(
      [&](double y) -> T {
        T v = g(y);
        T r = detail::qzero_like(v);
        detail::qaxpy(r, std::pow(y, beta - 1.0), v);
        return r;
      },
      0.0, y0, tol);
}

}  // namespace kimura
