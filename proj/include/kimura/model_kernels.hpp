#pragma once

// Heat kernels of the model operators
//
//   L_{b,m} = sum_j [x_j d^2_{x_j} + b_j d_{x_j}] + sum_k d^2_{y_k}   on R_+^n x R^m.
//
// One-dimensional degenerate kernel, b > 0:
//   k^b_t(x,y) = y^{b-1} t^{-b} e^{-(x+y)/t} psi_b(xy/t^2),
// evaluated as exp[(b-1) ln y - b ln t - (sqrt x - sqrt y)^2/t + (ln psi_b(z) - 2 sqrt z)].
// For b = 0 the law from x is e^{-x/t} delta_0 plus the density
//   (x/t^2) e^{-(x+y)/t} psi_2(xy/t^2).
// Complex times t = tau e^{i theta} use principal branches throughout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/log_complex.hpp"
#include "kimura/quadrature.hpp"
#include "kimura/specfun.hpp"

namespace kimura {

using cplx = std::complex<double>;

/// t = tau e^{i theta} in the sector |theta| <= pi/2 - phi.
struct SectorTime {
  double tau = 1.0;
  double theta = 0.0;
  double phi = std::numbers::pi / 2;

  SectorTime() = default;

  /// phi < 0 selects the widest admissible margin, pi/2 - |theta|.
  explicit SectorTime(double tau_, double theta_ = 0.0, double phi_ = -1.0)
      : tau(tau_), theta(theta_), phi(phi_ < 0.0 ? std::numbers::pi / 2 - std::abs(theta_) : phi_) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("SectorTime: tau must be positive and finite");
    if (!std::isfinite(theta)) throw DomainError("SectorTime: theta must be finite");
    if (!(phi > 0.0) || phi > std::numbers::pi / 2 + 1e-15)
      throw SectorError("SectorTime: phi must lie in (0, pi/2]");
    if (std::abs(theta) > std::numbers::pi / 2 - phi + 1e-14)
      throw SectorError("SectorTime: |theta| exceeds pi/2 - phi");
  }

  static SectorTime real(double tau) { return SectorTime(tau); }

  cplx value() const { return std::polar(tau, theta); }
  cplx log() const { return {std::log(tau), theta}; }
  bool is_real() const { return theta == 0.0; }
};

/// L_{b,m}: weights b_j >= 0 on the degenerate coordinates, m Euclidean ones.
struct ModelSpec {
  std::vector<double> b;
  int m = 0;

  std::size_t n() const { return b.size(); }
  std::size_t dim() const { return b.size() + static_cast<std::size_t>(m); }

  void validate() const {
    if (m < 0) throw DomainError("ModelSpec: m must be nonnegative");
    if (b.empty() && m == 0) throw DomainError("ModelSpec: n + m must be at least 1");
    for (double bj : b)
      if (!(bj >= 0.0) || !std::isfinite(bj)) throw DomainError("ModelSpec: weights must be finite and nonnegative");
  }

  double max_b() const {
    double r = 0.0;
    for (double bj : b) r = std::max(r, bj);
    return r;
  }
};

namespace detail {

inline void check_point(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError(what);
}

/// ln of k^b_t(x,y) y^{1-b} for b > 0 (finite at y = 0).
inline cplx log_kernel_regular(double b, const SectorTime& t, double x, double y) {
  const cplx tv = t.value();
  const double d = std::sqrt(x) - std::sqrt(y);
  const cplx z = (x * y) / (tv * tv);
  return -b * t.log() - d * d / tv + log_psi_scaled(b, z);
}

/// ln of the b = 0 density (x/t^2) e^{-(x+y)/t} psi_2(xy/t^2), x > 0.
inline cplx log_density_b0(const SectorTime& t, double x, double y) {
  const cplx tv = t.value();
  const double d = std::sqrt(x) - std::sqrt(y);
  const cplx z = (x * y) / (tv * tv);
  return std::log(x) - 2.0 * t.log() - d * d / tv + log_psi_scaled(2.0, z);
}

/// Shared prefactor P = y^{b-1} t^{-b} e^{-(x+y)/t} combined with e^{2 sqrt z},
/// i.e. ln P + 2 sqrt(z), and the ratio y/t.
inline cplx log_prefactor(double b, const SectorTime& t, double x, double y) {
  const double d = std::sqrt(x) - std::sqrt(y);
  return (b - 1.0) * std::log(y) - b * t.log() - d * d / t.value();
}

/// Sum_i c_i e^{l_i} returned as a LogComplex, factoring out the largest
/// real exponent first.
inline LogComplex log_sum(std::initializer_list<std::pair<cplx, cplx>> terms) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& [c, l] : terms)
    if (c != cplx(0.0, 0.0)) top = std::max(top, l.real());
  if (!std::isfinite(top)) return LogComplex::zero();
  cplx s(0.0, 0.0);
  for (const auto& [c, l] : terms)
    if (c != cplx(0.0, 0.0)) s += c * std::exp(l - top);
  if (s == cplx(0.0, 0.0)) return LogComplex::zero();
  return LogComplex::from_log(std::log(s) + top);
}

}  // namespace detail

/// k^b_t(x,y) for b > 0, y > 0.
inline LogComplex kernel_1d(double b, const SectorTime& t, double x, double y) {
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("kernel_1d: b must be positive (use transition_measure_1d for b = 0)");
  detail::check_point(x, "kernel_1d: x must be finite and nonnegative");
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("kernel_1d: y must be positive (use transition_measure_1d)");
  return LogComplex::from_log((b - 1.0) * std::log(y) + detail::log_kernel_regular(b, t, x, y));
}

/// k^b_t(x,y) y^{1-b}, b > 0, defined for y >= 0.
inline cplx kernel_1d_regular(double b, const SectorTime& t, double x, double y) {
  return std::exp(detail::log_kernel_regular(b, t, x, y));
}

/// Density part of the law from x for any b >= 0 (y > 0). For b = 0 this is
/// the absolutely continuous part only.
inline LogComplex kernel_density(double b, const SectorTime& t, double x, double y) {
  if (b > 0.0) return kernel_1d(b, t, x, y);
  detail::check_point(x, "kernel_density: x must be finite and nonnegative");
  if (!(y > 0.0)) throw DomainError("kernel_density: y must be positive");
  if (x == 0.0) return LogComplex::zero();
  return LogComplex::from_log(detail::log_density_b0(t, x, y));
}

/// Boundary atom weight: e^{-x/t} when b = 0, else 0.
inline cplx atom_weight(double b, const SectorTime& t, double x) {
  if (b > 0.0) return {0.0, 0.0};
  return std::exp(-x / t.value());
}

/// The law k^b_t(x, .) for real t: an atom at 0 (b = 0 only) plus a density.
struct TransitionMeasure1D {
  double b = 0.0;
  SectorTime t;
  double x = 0.0;
  double atom_weight = 0.0;

  double density(double y) const {
    if (!(y > 0.0)) return 0.0;
    return kernel_density(b, t, x, y).real();
  }
  double log_density(double y) const { return kernel_density(b, t, x, y).log_magnitude; }
};

inline TransitionMeasure1D transition_measure_1d(double b, const SectorTime& t, double x) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("transition_measure_1d: b must be nonnegative");
  if (!t.is_real()) throw DomainError("transition_measure_1d: requires real time (theta = 0)");
  detail::check_point(x, "transition_measure_1d: x must be finite and nonnegative");
  TransitionMeasure1D mu;
  mu.b = b;
  mu.t = t;
  mu.x = x;
  mu.atom_weight = b > 0.0 ? 0.0 : std::exp(-x / t.tau);
  return mu;
}

/// Euclidean heat kernel e^{-(y-y')^2/4t} / sqrt(4 pi t).
inline LogComplex kernel_euclidean(const SectorTime& t, double y, double y2) {
  const double d = y - y2;
  return LogComplex::from_log(-d * d / (4.0 * t.value()) - 0.5 * (std::log(4.0 * std::numbers::pi) + t.log()));
}

/// order 1: d_x k^b_t(x,y); order 2: x d_x^2 k^b_t(x,y). Uses
///   d_x k^b = (k^{b+1} - k^b)/t,  d_x^2 k^b = (k^{b+2} - 2 k^{b+1} + k^b)/t^2.
inline LogComplex kernel_dx(double b, const SectorTime& t, double x, double y, int order) {
  if (!(b > 0.0)) throw DomainError("kernel_dx: b must be positive");
  if (order != 1 && order != 2) throw DomainError("kernel_dx: order must be 1 or 2");
  detail::check_point(x, "kernel_dx: x must be finite and nonnegative");
  if (!(y > 0.0)) throw DomainError("kernel_dx: y must be positive");
  const cplx tv = t.value();
  const cplx z = (x * y) / (tv * tv);
  const cplx lp = detail::log_prefactor(b, t, x, y);
  const cplx lyt = std::log(y / tv);
  const cplx l0 = log_psi_scaled(b, z), l1 = log_psi_scaled(b + 1.0, z);
  if (order == 1) {
    // (1/t) P [ (y/t) psi_{b+1} - psi_b ]
    return detail::log_sum({{1.0, lyt + l1}, {-1.0, l0}}).scaled(lp - t.log());
  }
  if (x == 0.0) return LogComplex::zero();
  const cplx l2 = log_psi_scaled(b + 2.0, z);
  // (x/t^2) P [ (y/t)^2 psi_{b+2} - 2 (y/t) psi_{b+1} + psi_b ]
  return detail::log_sum({{1.0, 2.0 * lyt + l2}, {-2.0, lyt + l1}, {1.0, l0}})
      .scaled(lp + std::log(x) - 2.0 * t.log());
}

/// (d_y y - b) k^b_t(x,y) = P [ z psi_{b+1}(z) - (y/t) psi_b(z) ].
inline LogComplex adjoint_flux(double b, const SectorTime& t, double x, double y) {
  if (!(b > 0.0)) throw DomainError("adjoint_flux: b must be positive");
  detail::check_point(x, "adjoint_flux: x must be finite and nonnegative");
  if (!(y > 0.0)) throw DomainError("adjoint_flux: y must be positive");
  const cplx tv = t.value();
  const cplx z = (x * y) / (tv * tv);
  const cplx lp = detail::log_prefactor(b, t, x, y);
  const cplx l0 = log_psi_scaled(b, z);
  const cplx lyt = std::log(y / tv);
  if (x == 0.0) return detail::log_sum({{-1.0, lyt + l0}}).scaled(lp);
  const cplx l1 = log_psi_scaled(b + 1.0, z);
  return detail::log_sum({{1.0, std::log(z) + l1}, {-1.0, lyt + l0}}).scaled(lp);
}

// ---------------------------------------------------------------------------
// Integration against the 1-D kernels.

struct KernelQuadOptions {
  QuadTolerance tol{1e-13, 1e-12, 4000};
  /// ln of the neglected Gaussian tail: the window in u = sqrt(y/tau) is
  /// u_x +- sqrt(tail_log / cos theta) (plus a polynomial allowance).
  double tail_log = 60.0;
  double y_max = std::numeric_limits<double>::infinity();
  std::vector<double> extra_breaks;  // in y
};

namespace detail {

inline double kernel_window_half_width(double b, double cos_theta, double tail_log) {
  return std::sqrt(tail_log / cos_theta) + std::sqrt(2.0 * b + 2.0);
}

}  // namespace detail

/// atom(x) G(0) + int_0^{y_max} density(y) G(y) dy, for b >= 0 and sector t.
/// G maps y to double or complex; the result is complex.
template <class G>
QuadResult<cplx> integrate_kernel(double b, const SectorTime& t, double x, G&& g, const KernelQuadOptions& opt = {}) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("integrate_kernel: b must be nonnegative");
  detail::check_point(x, "integrate_kernel: x must be finite and nonnegative");
  const double tau = t.tau, c = std::cos(t.theta);
  const double ux = std::sqrt(x / tau);
  const double S = detail::kernel_window_half_width(b, c, opt.tail_log);
  double hi = ux + S;
  if (std::isfinite(opt.y_max)) hi = std::min(hi, std::sqrt(std::max(opt.y_max, 0.0) / tau));
  const double lo = std::max(0.0, ux - S);

  QuadResult<cplx> out{cplx(0.0, 0.0)};
  if (b == 0.0) {
    const cplx a = atom_weight(0.0, t, x);
    out.value += a * cplx(g(0.0));
    if (x == 0.0) return out;
  }
  if (!(hi > lo)) return out;

  const double u0 = std::min(1.0, hi);
  double start = lo;
  if (lo == 0.0) {
    start = u0;
    if (b > 0.0) {
      auto r = integrate_algebraic_endpoint(
          b, tau * u0 * u0, [&](double y) -> cplx { return kernel_1d_regular(b, t, x, y) * cplx(g(y)); }, opt.tol);
      out.value += r.value;
      out.error += r.error;
      out.evaluations += r.evaluations;
      out.intervals += r.intervals;
      out.converged = out.converged && r.converged;
    } else {
      auto r = integrate_adaptive(
          [&](double u) -> cplx {
            if (u == 0.0) return {0.0, 0.0};
            const double y = tau * u * u;
            return std::exp(detail::log_density_b0(t, x, y)) * cplx(g(y)) * (2.0 * tau * u);
          },
          0.0, u0, opt.tol);
      out.value += r.value;
      out.error += r.error;
      out.evaluations += r.evaluations;
      out.intervals += r.intervals;
      out.converged = out.converged && r.converged;
    }
  }
  if (hi > start) {
    std::vector<double> br{start, hi};
    if (ux > start && ux < hi) br.push_back(ux);
    for (double yb : opt.extra_breaks) {
      const double ub = std::sqrt(std::max(yb, 0.0) / tau);
      if (ub > start && ub < hi) br.push_back(ub);
    }
    const double step = 2.0 / std::sqrt(c);
    for (double u = start + step; u < hi; u += step) br.push_back(u);
    std::sort(br.begin(), br.end());
    auto r = integrate_adaptive(
        [&](double u) -> cplx {
          const double y = tau * u * u;
          const cplx lk = b > 0.0 ? (b - 1.0) * std::log(y) + detail::log_kernel_regular(b, t, x, y)
                                  : detail::log_density_b0(t, x, y);
          return std::exp(lk) * cplx(g(y)) * (2.0 * tau * u);
        },
        br, opt.tol);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.intervals += r.intervals;
    out.converged = out.converged && r.converged;
  }
  return out;
}

/// Total mass atom + int density (complex for complex t).
inline QuadResult<cplx> kernel_mass(double b, const SectorTime& t, double x, const KernelQuadOptions& opt = {}) {
  return integrate_kernel(b, t, x, [](double) { return 1.0; }, opt);
}

/// |atom| + int |density|: the sector-boundedness functional.
inline QuadResult<cplx> kernel_abs_mass(double b, const SectorTime& t, double x, const KernelQuadOptions& opt = {}) {
  SectorTime tt = t;
  QuadResult<cplx> r{cplx(0.0, 0.0)};
  if (b == 0.0) r.value += std::abs(atom_weight(0.0, t, x));
  auto dens = [&](double y) -> double {
    if (!(y > 0.0)) return 0.0;
    return kernel_density(b, tt, x, y).magnitude();
  };
  // Integrate |k| in u = sqrt(y/tau); |k| decays like e^{-cos(theta)(u-u_x)^2}.
  const double c = std::cos(t.theta);
  const double ux = std::sqrt(x / t.tau);
  const double S = detail::kernel_window_half_width(b, c, opt.tail_log);
  const double hi = ux + S, lo = std::max(0.0, ux - S);
  if (b > 0.0 && lo == 0.0) {
    const double u0 = std::min(1.0, hi);
    auto a = integrate_algebraic_endpoint(
        b, t.tau * u0 * u0, [&](double y) { return std::abs(kernel_1d_regular(b, tt, x, y)); }, opt.tol);
    std::vector<double> br{u0, hi};
    if (ux > u0) br.push_back(ux);
    std::sort(br.begin(), br.end());
    auto rest = integrate_adaptive([&](double u) { return dens(t.tau * u * u) * 2.0 * t.tau * u; }, br, opt.tol);
    r.value += a.value + rest.value;
    r.error = a.error + rest.error;
    r.converged = a.converged && rest.converged;
  } else {
    std::vector<double> br{lo, hi};
    if (ux > lo && ux < hi) br.push_back(ux);
    std::sort(br.begin(), br.end());
    auto rest = integrate_adaptive([&](double u) { return dens(t.tau * u * u) * 2.0 * t.tau * u; }, br, opt.tol);
    r.value += rest.value;
    r.error = rest.error;
    r.converged = rest.converged;
  }
  return r;
}

/// P(Y <= y) under the real-time law from x.
inline double transition_cdf(double b, double t, double x, double y, QuadTolerance tol = {1e-13, 1e-12, 4000}) {
  if (y < 0.0) return 0.0;
  KernelQuadOptions opt;
  opt.tol = tol;
  opt.y_max = y;
  auto r = integrate_kernel(b, SectorTime::real(t), x, [](double) { return 1.0; }, opt);
  return std::clamp(r.value.real(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Fixed rules: node/weight pairs reproducing integration against k^b_t(x, .).

struct KernelRule {
  std::vector<double> nodes;
  std::vector<cplx> weights;
  double mass_error = 0.0;  // |sum w - 1|
  double panel_width = 0.0;
  double upper = 0.0;       // largest node, in y
};

struct KernelRuleOptions {
  double panel_width = 0.5;    // in u = sqrt(y/tau), scaled by cos theta
  double tail_log = 60.0;
  double mass_tol = 1e-11;
  int max_refinements = 4;
  int graded_levels = 12;      // geometric panels toward y = 0, ratio 4
  /// Length scale of the integrated data in y: panels never span more than
  /// this in y. Infinite when the data vary on the kernel's own scale.
  double data_scale = std::numeric_limits<double>::infinity();
  /// Where the data may be nonzero; data_scale subdivision is confined to it.
  double support_lo = 0.0;
  double support_hi = std::numeric_limits<double>::infinity();
};

namespace detail {

inline KernelRule build_kernel_rule(double b, const SectorTime& t, double x, double h, const KernelRuleOptions& opt) {
  const auto& gl = gauss_legendre<10>();
  const double tau = t.tau, c = std::cos(t.theta);
  const double ux = std::sqrt(x / tau);
  const double S = kernel_window_half_width(b, c, opt.tail_log);
  const double hi = ux + S, lo = std::max(0.0, ux - S);
  KernelRule rule;
  rule.panel_width = h;
  cplx zero_weight(0.0, 0.0);
  bool zero_node = false;
  if (b == 0.0) {
    zero_weight += atom_weight(0.0, t, x);
    zero_node = true;
  }
  const bool subtract = b > 0.0 && b < 1.0;
  auto add_panel = [&](double a, double bb) {
    const double mid = 0.5 * (a + bb), half = 0.5 * (bb - a);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double u = mid + half * gl.nodes[i];
      const double wq = half * gl.weights[i];
      const double y = tau * u * u;
      if (b == 0.0) {
        if (x == 0.0) continue;
        rule.nodes.push_back(y);
        rule.weights.push_back(wq * 2.0 * tau * u * std::exp(log_density_b0(t, x, y)));
      } else {
        // 2 tau u y^{b-1} = 2 tau^b u^{2b-1}
        const double jac = 2.0 * std::exp(b * std::log(tau) + (2.0 * b - 1.0) * std::log(u));
        const cplx g = kernel_1d_regular(b, t, x, y);
        rule.nodes.push_back(y);
        rule.weights.push_back(wq * jac * g);
      }
    }
  };
  // Subdivide [ua, ub]: breaks at the ends of the data support and, on the
  // overlap with it, pieces no longer than data_scale in y.
  auto split = [&](double ua, double ub, std::vector<std::pair<double, double>>& out) {
    const double ya = std::max(tau * ua * ua, opt.support_lo), yb = std::min(tau * ub * ub, opt.support_hi);
    if (!std::isfinite(opt.data_scale) || !(yb > ya)) {
      out.emplace_back(ua, ub);
      return;
    }
    std::vector<double> cuts{ua};
    const int pieces = std::max(1, static_cast<int>(std::ceil((yb - ya) / opt.data_scale)));
    for (int k = 0; k <= pieces; ++k) {
      const double u = std::sqrt((ya + (yb - ya) * k / pieces) / tau);
      if (u > cuts.back() && u < ub) cuts.push_back(u);
    }
    cuts.push_back(ub);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) out.emplace_back(cuts[k], cuts[k + 1]);
  };
  double start = lo;
  if (lo == 0.0) {
    const double u0 = std::min(1.0, hi);
    std::vector<double> edges{u0};
    for (int k = 1; k <= opt.graded_levels; ++k) edges.push_back(u0 * std::pow(0.25, k));
    edges.push_back(0.0);
    std::reverse(edges.begin(), edges.end());
    std::vector<std::pair<double, double>> panels;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) split(edges[k], edges[k + 1], panels);
    for (const auto& [a, bb] : panels) add_panel(a, bb);
    if (subtract) {
      // Exact moment of y^{b-1} on [0, tau u0^2] moved onto a node at y = 0,
      // so the panels integrate y^{b-1}(G(y) - G(0)).
      const cplx g0 = kernel_1d_regular(b, t, x, 0.0);
      double quad_moment = 0.0;
      for (const auto& [a, bb] : panels) {
        const double mid = 0.5 * (a + bb), half = 0.5 * (bb - a);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
          const double u = mid + half * gl.nodes[i];
          quad_moment += half * gl.weights[i] * 2.0 * std::exp(b * std::log(tau) + (2.0 * b - 1.0) * std::log(u));
        }
      }
      const double exact_moment = std::exp(b * std::log(tau) + 2.0 * b * std::log(u0)) / b;
      zero_weight += g0 * (exact_moment - quad_moment);
      zero_node = true;
    }
    start = u0;
  }
  if (hi > start) {
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - start) / h)));
    const double w = (hi - start) / panels;
    std::vector<std::pair<double, double>> pieces;
    for (int k = 0; k < panels; ++k) split(start + k * w, start + (k + 1) * w, pieces);
    for (const auto& [a, bb] : pieces) add_panel(a, bb);
  }
  if (zero_node) {
    rule.nodes.insert(rule.nodes.begin(), 0.0);
    rule.weights.insert(rule.weights.begin(), zero_weight);
  }
  cplx mass(0.0, 0.0);
  for (const auto& w : rule.weights) mass += w;
  rule.mass_error = std::abs(mass - 1.0);
  rule.upper = tau * hi * hi;
  return rule;
}

}  // namespace detail

/// Node/weight rule for v(x) = int k^b_t(x,y) f(y) dy (atom included). The
/// panel width is halved until the rule reproduces unit mass to mass_tol.
inline KernelRule make_kernel_rule(double b, const SectorTime& t, double x, const KernelRuleOptions& opt = {}) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("make_kernel_rule: b must be nonnegative");
  detail::check_point(x, "make_kernel_rule: x must be finite and nonnegative");
  double h = opt.panel_width * std::cos(t.theta);
  KernelRule rule;
  for (int level = 0; level <= opt.max_refinements; ++level, h *= 0.5) {
    rule = detail::build_kernel_rule(b, t, x, h, opt);
    if (rule.mass_error <= opt.mass_tol) return rule;
  }
  std::ostringstream msg;
  msg << "make_kernel_rule: unit mass not reproduced (b=" << b << ", tau=" << t.tau << ", theta=" << t.theta
      << ", x=" << x << ", mass error " << rule.mass_error << " at panel width " << rule.panel_width << ")";
  throw ConvergenceError(msg.str());
}

/// Rule for int k^e_t(y,y') f(y') dy'.
inline KernelRule make_euclidean_rule(const SectorTime& t, double y, const KernelRuleOptions& opt = {}) {
  const auto& gl = gauss_legendre<10>();
  const double c = std::cos(t.theta);
  const double S = std::sqrt(opt.tail_log / c);
  double h = opt.panel_width * c;
  KernelRule rule;
  for (int level = 0; level <= opt.max_refinements; ++level, h *= 0.5) {
    rule = KernelRule{};
    rule.panel_width = h;
    const int panels = std::max(2, static_cast<int>(std::ceil(2.0 * S / h)));
    const double w = 2.0 * S / panels;
    const double scale = 2.0 * std::sqrt(t.tau);
    const cplx norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * t.value());
    const cplx rot = std::polar(1.0, -t.theta);
    cplx mass(0.0, 0.0);
    for (int k = 0; k < panels; ++k) {
      const double mid = -S + (k + 0.5) * w;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double s = mid + 0.5 * w * gl.nodes[i];
        const cplx wt = 0.5 * w * gl.weights[i] * scale * norm * std::exp(-s * s * rot);
        rule.nodes.push_back(y + scale * s);
        rule.weights.push_back(wt);
        mass += wt;
      }
    }
    rule.mass_error = std::abs(mass - 1.0);
    rule.upper = y + scale * S;
    if (rule.mass_error <= opt.mass_tol) return rule;
  }
  throw ConvergenceError("make_euclidean_rule: unit mass not reproduced");
}

// ---------------------------------------------------------------------------
// Product kernels with boundary strata.

/// One stratum of the product law: the coordinates in `absorbed` (all with
/// b_j = 0) sit at 0 with total weight `weight`; the remaining coordinates
/// carry the product of 1-D densities.
struct Stratum {
  std::vector<int> absorbed;  // 0-based indices into spec.b
  cplx weight{1.0, 0.0};      // prod_{j in absorbed} e^{-x_j/t}
  std::vector<int> free;      // degenerate coordinates with a density
};

struct StratumMeasure {
  ModelSpec spec;
  SectorTime t;
  std::vector<double> x, y;
  std::vector<Stratum> strata;

  /// Density of the stratum at free coordinates xf (ordered as s.free) and
  /// Euclidean coordinates yf, excluding the stratum weight.
  LogComplex density(const Stratum& s, const std::vector<double>& xf, const std::vector<double>& yf) const {
    if (xf.size() != s.free.size() || yf.size() != y.size()) throw DimensionError("StratumMeasure::density: dimension mismatch");
    LogComplex r = LogComplex::from_value(1.0);
    for (std::size_t i = 0; i < xf.size(); ++i) {
      const int j = s.free[i];
      r = r * kernel_density(spec.b[j], t, x[j], xf[i]);
    }
    for (std::size_t k = 0; k < yf.size(); ++k) r = r * kernel_euclidean(t, y[k], yf[k]);
    return r;
  }
};

/// Decomposes the product kernel of L_{b,m} from (X, Y) into strata indexed by
/// subsets of absorbable coordinates. Strata with zero weight or identically
/// zero density are omitted.
inline StratumMeasure kernel_product(const ModelSpec& spec, const SectorTime& t, const std::vector<double>& X,
                                     const std::vector<double>& Y) {
  spec.validate();
  if (X.size() != spec.n() || Y.size() != static_cast<std::size_t>(spec.m))
    throw DimensionError("kernel_product: point dimensions do not match the model");
  for (double xj : X) detail::check_point(xj, "kernel_product: x must be finite and nonnegative");
  StratumMeasure mu{spec, t, X, Y, {}};
  std::vector<int> zero_b;
  for (std::size_t j = 0; j < spec.n(); ++j)
    if (spec.b[j] == 0.0) zero_b.push_back(static_cast<int>(j));
  const std::size_t count = std::size_t{1} << zero_b.size();
  for (std::size_t mask = 0; mask < count; ++mask) {
    Stratum s;
    bool empty_density = false;
    for (std::size_t k = 0; k < zero_b.size(); ++k) {
      const int j = zero_b[k];
      if (mask & (std::size_t{1} << k)) {
        s.absorbed.push_back(j);
        s.weight *= std::exp(-X[j] / t.value());
      } else if (X[j] == 0.0) {
        empty_density = true;
      }
    }
    if (empty_density || s.weight == cplx(0.0, 0.0)) continue;
    for (std::size_t j = 0; j < spec.n(); ++j)
      if (std::find(s.absorbed.begin(), s.absorbed.end(), static_cast<int>(j)) == s.absorbed.end())
        s.free.push_back(static_cast<int>(j));
    mu.strata.push_back(std::move(s));
  }
  return mu;
}

}  // namespace kimura
