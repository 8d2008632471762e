#pragma once

// Verification harness: identities checked to quadrature tolerance, estimate
// inequalities checked empirically as finite, refinement-stable constants.
//
// An estimate case is sup over a parameter grid of estimand/normalizer. The
// 1-D model kernels satisfy c k_{ct}(cx, cy) = k_t(x, y), so for every
// homogeneous estimate the ratio depends on lambda = x/|t| and arg t only.
// Grids are therefore laid out in lambda at a fixed |t|; refinement doubles the
// density and widens the lambda range by a decade at each end.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "json.hpp"
#include "kimura/errors.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"
#include "kimura/quadrature.hpp"
#include "kimura/specfun.hpp"
#include "kimura/wf_geometry.hpp"

namespace kimura {

// ---------------------------------------------------------------------------
// Integration engine for estimands.

namespace detail {

struct EstimandQuad {
  QuadTolerance tol{1e-300, 1e-7, 2000};
  double tail_log = 45.0;
};

/// int over the union of `pieces` (y-intervals, hi may be inf) of
/// y^{beta-1} g(y) dy, where g is bounded near y = 0. `centres` are the points
/// the integrand concentrates around; the Gaussian window in u = sqrt(y/tau)
/// extends tail_log/cos(theta) beyond them.
template <class G>
double integrate_y(G&& g, double beta, const std::vector<std::pair<double, double>>& pieces,
                   const std::vector<double>& centres, double tau, double cos_theta, const EstimandQuad& q,
                   bool* converged = nullptr) {
  require(beta > 0.0, "integrate_y: beta must be positive");
  double umin = INFINITY, umax = 0.0;
  for (double c : centres) {
    const double u = std::sqrt(std::max(c, 0.0) / tau);
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  const double S = kernel_window_half_width(2.0, cos_theta, q.tail_log) + 1.0;
  const double wlo = tau * std::pow(std::max(0.0, umin - S), 2), whi = tau * std::pow(umax + S, 2);
  double total = 0.0;
  bool ok = true;
  for (auto [a, b] : pieces) {
    a = std::max(a, wlo);
    b = std::min(b, whi);
    if (!(b > a)) continue;
    double start = a;
    if (a == 0.0) {
      const double y0 = std::min(b, tau);
      auto r = integrate_algebraic_endpoint(beta, y0, [&](double y) { return g(y); }, q.tol);
      total += r.value;
      ok = ok && r.converged;
      start = y0;
    }
    if (!(b > start)) continue;
    const double ua = std::sqrt(start / tau), ub = std::sqrt(b / tau);
    std::vector<double> br{ua, ub};
    for (double c : centres) {
      const double u = std::sqrt(std::max(c, 0.0) / tau);
      if (u > ua && u < ub) br.push_back(u);
    }
    // Unit-width panels in u; counted so that huge u (tiny tau) cannot stall.
    const double step = 1.0 / std::sqrt(cos_theta);
    const int panels = static_cast<int>(std::min(400.0, std::ceil((ub - ua) / step)));
    for (int k = 1; k < panels; ++k) br.push_back(ua + (ub - ua) * k / panels);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    auto r = integrate_adaptive(
        [&](double u) {
          const double y = tau * u * u;
          return std::pow(y, beta - 1.0) * g(y) * 2.0 * tau * u;
        },
        br, q.tol);
    total += r.value;
    ok = ok && r.converged;
  }
  if (converged) *converged = *converged && ok;
  return total;
}

/// int_lo^hi h(s) ds with h(s) ~ s^{beta-1} as s -> 0 when lo = 0.
template <class H>
double integrate_s(H&& h, double lo, double hi, double beta, const QuadTolerance& tol, bool* converged = nullptr) {
  if (!(hi > lo)) return 0.0;
  bool ok = true;
  double v = 0.0;
  if (lo == 0.0) {
    auto r = integrate_algebraic_endpoint(beta, hi, [&](double s) { return s > 0.0 ? std::pow(s, 1.0 - beta) * h(s) : 0.0; },
                                          tol);
    v = r.value;
    ok = r.converged;
  } else {
    std::vector<double> br{lo};
    for (double s = 2.0 * lo; s < hi; s *= 2.0) br.push_back(s);
    br.push_back(hi);
    auto r = integrate_adaptive(h, br, tol);
    v = r.value;
    ok = r.converged;
  }
  if (converged) *converged = *converged && ok;
  return v;
}

/// y^{1-b} times k^b, d_x k^b, x d_x^2 k^b and L_b k^b at (x, y). Finite at y = 0.
struct RegularKernel {
  double b;
  SectorTime t;

  cplx k(double x, double y) const { return kernel_1d_regular(b, t, x, y); }
  cplx dx(double x, double y) const {
    return (y * kernel_1d_regular(b + 1.0, t, x, y) - kernel_1d_regular(b, t, x, y)) / t.value();
  }
  cplx xdxx(double x, double y) const {
    if (x == 0.0) return {0.0, 0.0};
    const cplx tv = t.value();
    return x *
           (y * y * kernel_1d_regular(b + 2.0, t, x, y) - 2.0 * y * kernel_1d_regular(b + 1.0, t, x, y) +
            kernel_1d_regular(b, t, x, y)) /
           (tv * tv);
  }
  /// d_x^j k^b for j = 0, 1, 2.
  cplx dxj(double x, double y, int j) const {
    const cplx tv = t.value();
    if (j == 0) return k(x, y);
    if (j == 1) return dx(x, y);
    return (y * y * kernel_1d_regular(b + 2.0, t, x, y) - 2.0 * y * kernel_1d_regular(b + 1.0, t, x, y) +
            kernel_1d_regular(b, t, x, y)) /
           (tv * tv);
  }
  cplx gen(double x, double y) const { return xdxx(x, y) + b * dx(x, y); }
};

inline SectorTime ray_time(double s, double theta) { return SectorTime(s, theta, std::numbers::pi / 2 - std::abs(theta)); }

/// int_0^{|t|} s^p F(x/s) ds along the ray of t, for p > -1. With m = ln(x/s)
/// this is x^{p+1} int_{ln lambda}^inf e^{-(p+1) m} F(e^m) dm. F(mu) is the
/// inner integral at x = mu, |s| = 1, tabulated per arg t on a log grid and
/// interpolated cubically in ln F; beyond the table F is held at its last value.
class HomogeneousTimeIntegral {
 public:
  using Inner = std::function<double(double mu, double theta, bool* ok)>;

  HomogeneousTimeIntegral(double p, Inner inner, double mu_lo = 1e-6, double mu_hi = 1e8, int per_decade = 8)
      : p_(p), inner_(std::move(inner)) {
    require(p > -1.0, "HomogeneousTimeIntegral: need p > -1");
    const int n = static_cast<int>(std::lround(std::log10(mu_hi / mu_lo) * per_decade));
    for (int k = 0; k <= n; ++k) m_.push_back(std::log(mu_lo) + std::log(10.0) * k / per_decade);
  }

  double operator()(double x, const SectorTime& t, bool* ok) {
    const auto& lf = table(t.theta, ok);
    const double q = p_ + 1.0;
    const double m0 = std::log(x / t.tau);
    if (m0 < m_.front()) throw DomainError("HomogeneousTimeIntegral: x/|t| below the tabulated range");
    const auto& gl = gauss_legendre<8>();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < m_.size(); ++k) {
      const double a = std::max(m_[k], m0), b = m_[k + 1];
      if (!(b > a)) continue;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double m = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        sum += 0.5 * (b - a) * gl.weights[i] * std::exp(interp(lf, k, m) - q * m);
      }
    }
    const double mh = std::max(m_.back(), m0);
    sum += std::exp(lf.back() - q * mh) / q;  // F frozen at its last tabulated value
    return std::pow(x, q) * sum;
  }

 private:
  const std::vector<double>& table(double theta, bool* ok) {
    for (const auto& [th, v] : cache_)
      if (th == theta) return v;
    std::vector<double> lf(m_.size());
    for (std::size_t k = 0; k < m_.size(); ++k) {
      const double F = inner_(std::exp(m_[k]), theta, ok);
      lf[k] = std::log(std::max(F, 1e-300));
    }
    cache_.emplace_back(theta, std::move(lf));
    return cache_.back().second;
  }

  // Catmull-Rom cubic on the uniform grid m_ in cell k.
  double interp(const std::vector<double>& v, std::size_t k, double m) const {
    const double h = m_[1] - m_[0], s = (m - m_[k]) / h;
    const double f0 = k > 0 ? v[k - 1] : 2 * v[k] - v[k + 1];
    const double f3 = k + 2 < v.size() ? v[k + 2] : 2 * v[k + 1] - v[k];
    const double f1 = v[k], f2 = v[k + 1];
    return f1 + 0.5 * s * (f2 - f0 + s * (2 * f0 - 5 * f1 + 4 * f2 - f3 + s * (3 * (f1 - f2) + f3 - f0)));
  }

  double p_;
  Inner inner_;
  std::vector<double> m_;
  std::vector<std::pair<double, std::vector<double>>> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimate registry.

/// Grid of (x, |t|) points. With `scale_free` the x values are lambda |t|.
struct EstimateGrid {
  double lambda_lo = 1e-4, lambda_hi = 1e4;
  int per_decade = 3;
  std::vector<double> taus{1.0};
  std::vector<double> taus_refined{1.0};
  bool scale_free = true;
  double x_lo = 0.0, x_hi = 0.0;  // used when !scale_free
  bool include_zero = false;      // prepend x = 0 (fixed-x grids only)

  /// Level 1 is the base grid; level 2 doubles the density and widens each end
  /// by a decade.
  std::vector<double> xs(int level, double tau) const {
    const double widen = level >= 2 ? 10.0 : 1.0;
    const int dens = density(level);
    const double base_lo = scale_free ? lambda_lo : x_lo, base_hi = scale_free ? lambda_hi : x_hi;
    const bool single = base_lo == base_hi;
    const double lo = single ? base_lo : base_lo / widen, hi = single ? base_hi : base_hi * widen;
    const int n = single ? 0 : static_cast<int>(std::lround(std::log10(hi / lo) * dens));
    std::vector<double> out;
    if (include_zero && !scale_free) out.push_back(0.0);
    for (int i = 0; i <= n; ++i) {
      const double v = lo * std::pow(10.0, static_cast<double>(i) / dens);
      out.push_back(scale_free ? v * tau : v);
    }
    return out;
  }

  const std::vector<double>& tau_list(int level) const { return level >= 2 ? taus_refined : taus; }
  int density(int level) const { return level >= 2 ? 2 * per_decade : per_decade; }

  std::vector<std::pair<double, double>> points(int level) const {
    std::vector<std::pair<double, double>> out;
    for (double tau : tau_list(level))
      for (double x : xs(level, tau)) out.emplace_back(x, tau);
    return out;
  }
};

/// Least-squares fit of log(estimand * |t|^power) = a - rate / |t| on small |t|.
struct DecaySpec {
  double x = 1.0;
  std::vector<double> taus;
  double power = 0.0;   // normalizing |t|^power
  double target = 0.0;  // stated rate, e.g. cos(theta) eta^2 / 2
  double theta = 0.0;
};

struct EstimateCase {
  std::string lemma;
  double b = 0.0, gamma = 0.0, phi = std::numbers::pi / 2;
  std::vector<double> thetas{0.0};
  EstimateGrid grid;
  std::function<double(double x, const SectorTime& t, bool* converged)> estimand;
  std::function<double(double x, const SectorTime& t)> normalizer;
  std::optional<DecaySpec> decay;
};

struct EstimateReport {
  std::string lemma;
  double b = 0.0, gamma = 0.0, phi = 0.0;
  double constant = 0.0;         // sup on the refined grid
  double constant_coarse = 0.0;  // sup on the base grid
  double ratio = 0.0;            // constant / constant_coarse
  std::size_t points = 0;
  double worst_x = 0.0, worst_tau = 0.0, worst_theta = 0.0;
  bool quadrature_ok = true;
  std::optional<double> decay_rate, decay_target;
  bool diverging = false;  // ratio >= 1.5
  bool pass = false;
  std::string message;
};

struct EstimateOptions {
  double max_ratio = 1.05;
  double divergence_ratio = 1.5;
  double decay_fraction = 0.8;
};

namespace detail {

struct SupResult {
  double value = 0.0;
  double x = 0.0, tau = 0.0, theta = 0.0;
  std::size_t points = 0;
  bool ok = true;
  bool finite = true;
};

/// Sup of estimand/normalizer over the level's grid. Local grid maxima within
/// `polish_fraction` of the grid sup are then refined by coordinate-wise
/// Brent maximization in log x and log |t|, each bracketed by the neighbouring
/// grid points, so that the sup of a bounded ratio does not depend on where
/// the grid happens to fall. Grid edges are never polished past: growth
/// toward an edge is what the widened refinement level detects.
inline SupResult sup_ratio(const EstimateCase& c, int level, double polish_fraction = 0.5) {
  SupResult r;
  auto eval = [&](double x, double tau, double th) {
    const SectorTime t = ray_time(tau, th);
    const double nrm = c.normalizer(x, t);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw InvariantError("check_estimate: normalizer must be positive on the grid");
    bool ok = true;
    const double e = c.estimand(x, t, &ok);
    r.ok = r.ok && ok;
    ++r.points;
    const double q = e / nrm;
    if (!std::isfinite(q)) {
      r.finite = false;
      r.value = INFINITY;
    }
    if (!r.finite || q > r.value) {
      r.value = r.finite ? q : INFINITY;
      r.x = x;
      r.tau = tau;
      r.theta = th;
    }
    return q;
  };
  struct Peak {
    double x, x_lo, x_hi, tau, tau_lo, tau_hi, theta, value;
  };
  std::vector<Peak> peaks;
  const auto& taus = c.grid.tau_list(level);
  for (double th : c.thetas) {
    std::vector<std::vector<double>> xs(taus.size()), q(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
      xs[i] = c.grid.xs(level, taus[i]);
      for (double x : xs[i]) {
        q[i].push_back(eval(x, taus[i], th));
        if (!r.finite) return r;
      }
    }
    for (std::size_t i = 0; i < taus.size(); ++i)
      for (std::size_t j = 0; j < xs[i].size(); ++j) {
        const double v = q[i][j];
        const bool xin = j > 0 && j + 1 < xs[i].size() && xs[i][j - 1] > 0.0;
        if (j > 0 && q[i][j - 1] > v) continue;
        if (j + 1 < xs[i].size() && q[i][j + 1] > v) continue;
        // Fixed-x grids share x values across |t|; scale-free grids have one |t|.
        const bool tin = !c.grid.scale_free && i > 0 && i + 1 < taus.size();
        if (!c.grid.scale_free) {
          if (i > 0 && q[i - 1][j] > v) continue;
          if (i + 1 < taus.size() && q[i + 1][j] > v) continue;
        }
        if (!xin && !tin) continue;
        Peak p{xs[i][j], xin ? xs[i][j - 1] : 0.0, xin ? xs[i][j + 1] : 0.0, taus[i], tin ? taus[i - 1] : 0.0,
               tin ? taus[i + 1] : 0.0, th, v};
        peaks.push_back(p);
      }
  }
  for (auto p : peaks) {
    if (p.value < polish_fraction * r.value) continue;
    for (int round = 0; round < 2; ++round) {
      if (p.x_lo > 0.0) {
        std::uintmax_t iters = 40;
        auto neg = [&](double lx) { return -eval(std::exp(lx), p.tau, p.theta); };
        p.x = std::exp(boost::math::tools::brent_find_minima(neg, std::log(p.x_lo), std::log(p.x_hi), 16, iters).first);
        if (!r.finite) return r;
      }
      if (p.tau_lo > 0.0) {
        std::uintmax_t iters = 40;
        auto neg = [&](double lt) { return -eval(p.x, std::exp(lt), p.theta); };
        p.tau = std::exp(boost::math::tools::brent_find_minima(neg, std::log(p.tau_lo), std::log(p.tau_hi), 16, iters).first);
        if (!r.finite) return r;
      }
      if (p.x_lo <= 0.0 || p.tau_lo <= 0.0) break;
    }
  }
  return r;
}

}  // namespace detail

/// Empirical constant of one registry case and its stability under refinement.
inline EstimateReport check_estimate(const EstimateCase& c, const EstimateOptions& opt = {}) {
  if (!c.estimand || !c.normalizer) throw DomainError("check_estimate: case has no estimand");
  EstimateReport rep;
  rep.lemma = c.lemma;
  rep.b = c.b;
  rep.gamma = c.gamma;
  rep.phi = c.phi;
  try {
    const auto coarse = detail::sup_ratio(c, 1);
    const auto fine = coarse.finite ? detail::sup_ratio(c, 2) : coarse;
    rep.constant_coarse = coarse.value;
    rep.constant = std::max(fine.value, coarse.value);
    rep.points = coarse.points + fine.points;
    rep.quadrature_ok = coarse.ok && fine.ok;
    const auto& w = fine.value >= coarse.value ? fine : coarse;
    rep.worst_x = w.x;
    rep.worst_tau = w.tau;
    rep.worst_theta = w.theta;
    rep.ratio = rep.constant_coarse > 0.0 ? rep.constant / rep.constant_coarse : (rep.constant > 0.0 ? INFINITY : 1.0);
    rep.diverging = !(rep.ratio < opt.divergence_ratio);
    rep.pass = std::isfinite(rep.constant) && rep.ratio <= opt.max_ratio;
    if (!std::isfinite(rep.constant)) rep.message = "non-finite estimand";
    else if (rep.diverging) rep.message = "constant grows under refinement";
    else if (!rep.pass) rep.message = "refinement ratio above threshold";

    if (c.decay) {
      const auto& d = *c.decay;
      std::vector<double> X, Y;
      for (double tau : d.taus) {
        bool ok = true;
        const double e = c.estimand(d.x, detail::ray_time(tau, d.theta), &ok);
        if (e > 0.0 && std::isfinite(e)) {
          X.push_back(1.0 / tau);
          Y.push_back(std::log(e) + d.power * std::log(tau));
        }
      }
      if (X.size() < 3) throw ConvergenceError("check_estimate: decay fit needs three positive samples");
      double mx = 0.0, my = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) {
        mx += X[i];
        my += Y[i];
      }
      mx /= X.size();
      my /= Y.size();
      double sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
      }
      rep.decay_rate = -sxy / sxx;
      rep.decay_target = d.target;
      if (*rep.decay_rate < opt.decay_fraction * d.target) {
        rep.pass = false;
        rep.message = "off-diagonal decay slower than stated";
      }
    }
  } catch (const std::exception& e) {
    rep.pass = false;
    rep.message = e.what();
  }
  return rep;
}

/// Runs cases in a worker pool; results keep the input order.
inline std::vector<EstimateReport> run_estimates(const std::vector<EstimateCase>& cases, const EstimateOptions& opt = {},
                                                 unsigned workers = 0) {
  std::vector<EstimateReport> out(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) { out[i] = check_estimate(cases[i], opt); }, workers);
  return out;
}

struct RegistryOptions {
  std::vector<double> b{1e-3, 0.1, 0.5, 1.0, 2.5};
  std::vector<double> gamma{0.25, 0.5, 0.75};
  std::vector<double> phi{std::numbers::pi / 6, std::numbers::pi / 3};
  /// Empty: every lemma.
  std::vector<std::string> only;
};

namespace detail {

using Pieces = std::vector<std::pair<double, double>>;

inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const int n = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> v;
  for (int i = 0; i <= n; ++i) v.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return v;
}
inline const Pieces& half_line() {
  static const Pieces p{{0.0, INFINITY}};
  return p;
}

inline double sqd(double a, double b) { return std::abs(std::sqrt(a) - std::sqrt(b)); }

/// J^c = [0, alpha) u (beta, inf) for the pair x1 < x2.
inline Pieces off_interval(double x1, double x2) {
  const auto [a, b] = wf_ball_interval(x1, x2);
  Pieces p;
  if (a > 0.0) p.emplace_back(0.0, a);
  p.emplace_back(b, INFINITY);
  return p;
}

// Thin wrapper: cos(theta) and tau from the sector time.
template <class G>
double iy(G&& g, double beta, const Pieces& pieces, const std::vector<double>& centres, const SectorTime& t,
          bool* ok, const EstimandQuad& q = {}) {
  return integrate_y(g, beta, pieces, centres, t.tau, std::cos(t.theta), q, ok);
}

}  // namespace detail

/// Registered estimate cases. Keys name the estimated quantity; each carries
/// its stated normalizer verbatim.
inline std::vector<EstimateCase> estimate_registry(const RegistryOptions& ro = {}) {
  using namespace detail;
  std::vector<EstimateCase> out;
  auto wanted = [&](const std::string& key) {
    return ro.only.empty() || std::find(ro.only.begin(), ro.only.end(), key) != ro.only.end();
  };
  auto sector_thetas = [](double phi) { return std::vector<double>{0.0, std::numbers::pi / 2 - phi}; };

  // Sector estimates with one spatial point: sup over (b, gamma, phi).
  auto sector = [&](const std::string& key, const std::vector<double>& gammas, auto make) {
    if (!wanted(key)) return;
    for (double b : ro.b)
      for (double g : gammas)
        for (double phi : ro.phi) {
          EstimateCase c;
          c.lemma = key;
          c.b = b;
          c.gamma = g;
          c.phi = phi;
          c.thetas = sector_thetas(phi);
          make(c);
          out.push_back(std::move(c));
        }
  };
  const std::vector<double> no_gamma{0.0};

  // int |k| <= C_phi
  sector("abs_mass", no_gamma, [](EstimateCase& c) {
    const double b = c.b;
    c.estimand = [b](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x, y)); }, b, half_line(), {x}, t, ok);
    };
    c.normalizer = [](double, const SectorTime&) { return 1.0; };
  });

  // int |k(x,y) - k(0,y)| y^{gamma/2} <= C x^{gamma/2}
  sector("origin_shift_weighted", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x, y) - K.k(0.0, y)) * std::pow(y, g / 2); }, b, half_line(),
                {0.0, x}, t, ok);
    };
    c.normalizer = [g](double x, const SectorTime&) { return std::pow(x, g / 2); };
  });

  // int |k(x,y) - k(0,y)| <= C lambda/(1+lambda)
  sector("origin_shift", no_gamma, [](EstimateCase& c) {
    const double b = c.b;
    c.estimand = [b](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x, y) - K.k(0.0, y)); }, b, half_line(), {0.0, x}, t, ok);
    };
    c.normalizer = [](double x, const SectorTime& t) {
      const double l = x / t.tau;
      return l / (1.0 + l);
    };
  });

  // c x2 < x1 < x2: int |k(x2,y) - k(x1,y)| <= C r/(1+r), r = (sqrt x2 - sqrt x1)/sqrt|t|
  sector("pair_shift", no_gamma, [](EstimateCase& c) {
    const double b = c.b;
    c.estimand = [b](double x2, const SectorTime& t, bool* ok) {
      const double x1 = 0.5 * x2;
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x2, y) - K.k(x1, y)); }, b, half_line(), {x1, x2}, t, ok);
    };
    c.normalizer = [](double x2, const SectorTime& t) {
      const double r = sqd(x2, 0.5 * x2) / std::sqrt(t.tau);
      return r / (1.0 + r);
    };
  });

  // int |k| |sqrt x - sqrt y|^gamma <= C |t|^{gamma/2}
  sector("holder_moment", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x, y)) * std::pow(sqd(x, y), g); }, b, half_line(), {x}, t, ok);
    };
    c.normalizer = [g](double, const SectorTime& t) { return std::pow(t.tau, g / 2); };
  });

  // x1/x2 > 1/9: int_{J^c} |k(x2,y) - k(x1,y)| |sqrt y - sqrt x1|^gamma <= C |sqrt x2 - sqrt x1|^gamma
  sector("pair_shift_off_interval", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x2, const SectorTime& t, bool* ok) {
      const double x1 = 0.5 * x2;
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.k(x2, y) - K.k(x1, y)) * std::pow(sqd(y, x1), g); }, b,
                off_interval(x1, x2), {x1, x2}, t, ok);
    };
    c.normalizer = [g](double x2, const SectorTime&) { return std::pow(sqd(x2, 0.5 * x2), g); };
  });

  // int |d_x k| |sqrt y - sqrt x|^gamma <= C |t|^{gamma/2 - 1} / (1 + sqrt lambda); gamma = 0 included
  {
    std::vector<double> gs{0.0};
    gs.insert(gs.end(), ro.gamma.begin(), ro.gamma.end());
    sector("dx_holder_moment", gs, [](EstimateCase& c) {
      const double b = c.b, g = c.gamma;
      c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
        RegularKernel K{b, t};
        return iy([&](double y) { return std::abs(K.dx(x, y)) * std::pow(sqd(y, x), g); }, b, half_line(), {x}, t,
                  ok);
      };
      c.normalizer = [g](double x, const SectorTime& t) {
        return std::pow(t.tau, g / 2 - 1.0) / (1.0 + std::sqrt(x / t.tau));
      };
    });
  }

  // c x2 < x1 < x2: int |sqrt x1 d k(x1,y) - sqrt x2 d k(x2,y)| |sqrt x1 - sqrt y|^gamma
  //   <= C |t|^{(gamma-1)/2} r/(1+r)
  sector("scaled_dx_pair", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x2, const SectorTime& t, bool* ok) {
      const double x1 = 0.5 * x2;
      RegularKernel K{b, t};
      return iy(
          [&](double y) {
            return std::abs(std::sqrt(x1) * K.dx(x1, y) - std::sqrt(x2) * K.dx(x2, y)) * std::pow(sqd(x1, y), g);
          },
          b, half_line(), {x1, x2}, t, ok);
    };
    c.normalizer = [g](double x2, const SectorTime& t) {
      const double r = sqd(x2, 0.5 * x2) / std::sqrt(t.tau);
      return std::pow(t.tau, (g - 1.0) / 2) * r / (1.0 + r);
    };
  });

  // int |x d_x^2 k| |sqrt x - sqrt y|^gamma <= C lambda |t|^{gamma/2-1} / (1 + lambda)
  sector("xdxx_holder_moment", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      return iy([&](double y) { return std::abs(K.xdxx(x, y)) * std::pow(sqd(x, y), g); }, b, half_line(), {x}, t,
                ok);
    };
    c.normalizer = [g](double x, const SectorTime& t) {
      const double l = x / t.tau;
      return l * std::pow(t.tau, g / 2 - 1.0) / (1.0 + l);
    };
  });

  // int |d_x^j k| <= C/|t|^j and int |x^{j/2} d_x^j k| <= C/|t|^{j/2}, j = 1, 2
  for (int j : {1, 2}) {
    for (bool scaled : {false, true}) {
      const std::string key = std::string(scaled ? "scaled_dx_power_mass_" : "dx_power_mass_") + std::to_string(j);
      sector(key, no_gamma, [j, scaled](EstimateCase& c) {
        const double b = c.b;
        c.estimand = [b, j, scaled](double x, const SectorTime& t, bool* ok) {
          RegularKernel K{b, t};
          const double w = scaled ? std::pow(x, 0.5 * j) : 1.0;
          return iy([&](double y) { return w * std::abs(K.dxj(x, y, j)); }, b, half_line(), {x}, t, ok);
        };
        c.normalizer = [j, scaled](double, const SectorTime& t) { return std::pow(t.tau, -(scaled ? 0.5 * j : j)); };
      });
    }
  }

  // b > nu - gamma/2 > 0: int (x/y)^nu |k| y^{gamma/2} <= C x^{gamma/2}; nu = gamma/2 + b/2
  sector("ratio_weight_moment", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma, nu = g / 2 + b / 2;
    c.estimand = [b, g, nu](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b, t};
      const double beta = b - nu + g / 2;
      return iy([&](double y) { return std::pow(x, nu) * std::abs(K.k(x, y)); }, beta, half_line(), {x}, t, ok);
    };
    c.normalizer = [g](double x, const SectorTime&) { return std::pow(x, g / 2); };
  });

  // int |k^{b+1}| |sqrt y - sqrt x| y^{(gamma-1)/2} <= C |t|^{gamma/2}
  sector("raised_weight_moment", ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel K{b + 1.0, t};
      return iy([&](double y) { return std::abs(K.k(x, y)) * sqd(y, x); }, b + (g + 1.0) / 2, half_line(), {x}, t,
                ok);
    };
    c.normalizer = [g](double, const SectorTime& t) { return std::pow(t.tau, g / 2); };
  });

  // Endpoint fluxes: int_0^|t| |(d_y y - b) k_{s e^{i theta}}(x2, alpha) - (same at beta)| ds <= C,
  // x2/3 < x1 < x2.
  sector("flux_endpoint_difference", no_gamma, [](EstimateCase& c) {
    const double b = c.b;
    c.estimand = [b](double x2, const SectorTime& t, bool* ok) {
      const double x1 = 0.5 * x2;
      const auto [al, be] = wf_ball_interval(x1, x2);
      auto h = [&, al = al, be = be](double s) {
        const SectorTime ts = ray_time(s, t.theta);
        return std::abs(adjoint_flux(b, ts, x2, al).value() - adjoint_flux(b, ts, x2, be).value());
      };
      return integrate_s(h, 0.0, t.tau, 1.0, {1e-300, 1e-7, 2000}, ok);
    };
    c.normalizer = [](double, const SectorTime&) { return 1.0; };
  });

  // Double integrals over s in (0, |t|) on the ray of t. The inner integrals
  // are homogeneous, I(x, s) = s^p F(x/s), so F is tabulated once per arg t.
  auto sector2 = [&](const std::string& key, auto make) {
    if (!wanted(key)) return;
    for (double b : ro.b)
      for (double g : ro.gamma)
        for (double phi : ro.phi) {
          EstimateCase c;
          c.lemma = key;
          c.b = b;
          c.gamma = g;
          c.phi = phi;
          c.thetas = sector_thetas(phi);
          make(c);
          out.push_back(std::move(c));
        }
  };
  const EstimandQuad inner{{1e-300, 1e-6, 2000}, 40.0};
  const QuadTolerance outer{1e-300, 1e-5, 400};

  // int_0^|t| int |x d_x^2 k_s| |sqrt y - sqrt x|^gamma <= C min(x, |t|)^{gamma/2}
  sector2("xdxx_time_integrated", [&](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    auto table = std::make_shared<HomogeneousTimeIntegral>(g / 2 - 1.0, [b, g, inner](double mu, double th, bool* ok) {
      RegularKernel K{b, ray_time(1.0, th)};
      return iy([&](double y) { return std::abs(K.xdxx(mu, y)) * std::pow(sqd(y, mu), g); }, b, half_line(), {mu},
                K.t, ok, inner);
    });
    c.estimand = [table](double x, const SectorTime& t, bool* ok) { return (*table)(x, t, ok); };
    c.normalizer = [g](double x, const SectorTime& t) { return std::pow(std::min(x, t.tau), g / 2); };
  });

  // x2/3 < x1 < x2: I_i = int_0^|t| int_alpha^beta |L_b k_s(x_i, y)| |sqrt y - sqrt x_i|^gamma <= C |sqrt x2 - sqrt x1|^gamma
  for (int which : {1, 2}) {
    sector2(which == 2 ? "generator_on_interval_far" : "generator_on_interval_near", [&, which](EstimateCase& c) {
      const double b = c.b, g = c.gamma;
      auto table = std::make_shared<HomogeneousTimeIntegral>(
          g / 2 - 1.0, [b, g, inner, which](double x2, double th, bool* ok) {
            const double x1 = 0.5 * x2, xi = which == 2 ? x2 : x1;
            const auto [al, be] = wf_ball_interval(x1, x2);
            RegularKernel K{b, ray_time(1.0, th)};
            return iy([&](double y) { return std::abs(K.gen(xi, y)) * std::pow(sqd(y, xi), g); }, b, {{al, be}}, {xi},
                      K.t, ok, inner);
          });
      c.estimand = [table](double x2, const SectorTime& t, bool* ok) { return (*table)(x2, t, ok); };
      c.normalizer = [g](double x2, const SectorTime&) { return std::pow(sqd(x2, 0.5 * x2), g); };
    });
  }

  // int_0^|t| int_{J^c} |L_b k_s(x2,y) - L_b k_s(x1,y)| |sqrt y - sqrt x1|^gamma <= C |sqrt x2 - sqrt x1|^gamma
  sector2("generator_pair_off_interval", [&](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    auto table = std::make_shared<HomogeneousTimeIntegral>(g / 2 - 1.0, [b, g, inner](double x2, double th, bool* ok) {
      const double x1 = 0.5 * x2;
      RegularKernel K{b, ray_time(1.0, th)};
      return iy([&](double y) { return std::abs(K.gen(x2, y) - K.gen(x1, y)) * std::pow(sqd(y, x1), g); }, b,
                off_interval(x1, x2), {x1, x2}, K.t, ok, inner);
    });
    c.estimand = [table](double x2, const SectorTime& t, bool* ok) { return (*table)(x2, t, ok); };
    c.normalizer = [g](double x2, const SectorTime&) { return std::pow(sqd(x2, 0.5 * x2), g); };
  });

  // Real-time differences: t1 = |t|, t2 = t1 + d with d = t1/4, or s and s + d with s = |t|.
  auto real_case = [&](const std::string& key, const std::vector<double>& bs, const std::vector<double>& gammas,
                       auto make) {
    if (!wanted(key)) return;
    for (double b : bs)
      for (double g : gammas) {
        EstimateCase c;
        c.lemma = key;
        c.b = b;
        c.gamma = g;
        c.phi = std::numbers::pi / 2;
        c.thetas = {0.0};
        make(c);
        out.push_back(std::move(c));
      }
  };
  std::vector<double> b_ge1;
  for (double b : ro.b)
    if (b >= 1.0) b_ge1.push_back(b);

  // c < s/t < 1: int |k_t - k_s| |sqrt x - sqrt y|^gamma <= C |t - s|^{gamma/2}; s = t/2
  real_case("time_shift_holder", ro.b, ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel Kt{b, t}, Ks{b, SectorTime::real(0.5 * t.tau)};
      return iy([&](double y) { return std::abs(Kt.k(x, y) - Ks.k(x, y)) * std::pow(sqd(x, y), g); }, b, half_line(),
                {x}, Ks.t, ok);
    };
    c.normalizer = [g](double, const SectorTime& t) { return std::pow(0.5 * t.tau, g / 2); };
  });

  // s < t: int |k_t - k_s| <= C (t/s - 1)/(1 + t/s - 1), sampled at t/s in {1.25, 4}
  for (double q : {1.25, 4.0}) {
    const std::string key = q < 2.0 ? "time_shift_near" : "time_shift_far";
    real_case(key, ro.b, {0.0}, [q](EstimateCase& c) {
      const double b = c.b;
      c.estimand = [b, q](double x, const SectorTime& t, bool* ok) {
        RegularKernel Kt{b, t}, Ks{b, SectorTime::real(t.tau / q)};
        return iy([&](double y) { return std::abs(Kt.k(x, y) - Ks.k(x, y)); }, b, half_line(), {x}, Ks.t, ok);
      };
      c.normalizer = [q](double, const SectorTime&) { return (q - 1.0) / q; };
    });
  }

  // int |k_t - k_s| |sqrt x - sqrt z| z^{(gamma-1)/2} <= C |t - s|^{gamma/2}, b >= 1, s = t/2
  real_case("time_shift_sqrt_weight", b_ge1, ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& t, bool* ok) {
      RegularKernel Kt{b, t}, Ks{b, SectorTime::real(0.5 * t.tau)};
      return iy([&](double z) { return std::abs(Kt.k(x, z) - Ks.k(x, z)) * sqd(x, z); }, b + (g - 1.0) / 2,
                half_line(), {x}, Ks.t, ok);
    };
    c.normalizer = [g](double, const SectorTime& t) { return std::pow(0.5 * t.tau, g / 2); };
  });

  // s > d: int |d_x k_{d+s} - d_x k_s| |sqrt x - sqrt y|^gamma <= C d s^{gamma/2-1} / ((d+s)(1+sqrt(x/s))), d = s/4
  {
    std::vector<double> gs{0.0};
    gs.insert(gs.end(), ro.gamma.begin(), ro.gamma.end());
    real_case("dx_time_shift", ro.b, gs, [](EstimateCase& c) {
      const double b = c.b, g = c.gamma;
      c.estimand = [b, g](double x, const SectorTime& s, bool* ok) {
        RegularKernel Ka{b, SectorTime::real(1.25 * s.tau)}, Ks{b, s};
        return iy([&](double y) { return std::abs(Ka.dx(x, y) - Ks.dx(x, y)) * std::pow(sqd(x, y), g); }, b,
                  half_line(), {x}, s, ok);
      };
      c.normalizer = [g](double x, const SectorTime& s) {
        const double d = 0.25 * s.tau;
        return d * std::pow(s.tau, g / 2 - 1.0) / ((d + s.tau) * (1.0 + std::sqrt(x / s.tau)));
      };
    });
  }

  // s > d: int |L k_{d+s} - L k_s| |sqrt x - sqrt y|^gamma <= C d s^{gamma/2-2}, d = s/4
  real_case("generator_time_shift", ro.b, ro.gamma, [](EstimateCase& c) {
    const double b = c.b, g = c.gamma;
    c.estimand = [b, g](double x, const SectorTime& s, bool* ok) {
      RegularKernel Ka{b, SectorTime::real(1.25 * s.tau)}, Ks{b, s};
      return iy([&](double y) { return std::abs(Ka.gen(x, y) - Ks.gen(x, y)) * std::pow(sqd(x, y), g); }, b,
                half_line(), {x}, s, ok);
    };
    c.normalizer = [g](double, const SectorTime& s) { return 0.25 * s.tau * std::pow(s.tau, g / 2 - 2.0); };
  });

  // t1 < t2 < 2 t1, d = t2 - t1 = t1/4:
  //   int_d^{t1} int |d_x k_{d+s} - d_x k_s| |sqrt x - sqrt y|^{gamma/2} <= C d^{gamma/2}
  //   int_d^{t1} int |L k_{d+s} - L k_s| |sqrt x - sqrt y|^gamma <= C d^{gamma/2}
  for (bool gen : {false, true}) {
    real_case(gen ? "generator_time_shift_integrated" : "dx_time_shift_integrated", ro.b, ro.gamma,
              [gen, outer, inner](EstimateCase& c) {
                const double b = c.b, g = c.gamma;
                const double wexp = gen ? g : g / 2;
                c.estimand = [b, wexp, gen, outer, inner](double x, const SectorTime& t, bool* ok) {
                  const double d = 0.25 * t.tau;
                  auto h = [&](double s) {
                    RegularKernel Ka{b, SectorTime::real(d + s)}, Ks{b, SectorTime::real(s)};
                    return iy(
                        [&](double y) {
                          const cplx v = gen ? Ka.gen(x, y) - Ks.gen(x, y) : Ka.dx(x, y) - Ks.dx(x, y);
                          return std::abs(v) * std::pow(sqd(x, y), wexp);
                        },
                        b, half_line(), {x}, Ks.t, ok, inner);
                  };
                  return integrate_s(h, d, t.tau, 1.0, outer, ok);
                };
                c.normalizer = [g](double, const SectorTime& t) { return std::pow(0.25 * t.tau, g / 2); };
              });
  }

  // Off-diagonal decay, eta = 1: int_{|sqrt x - sqrt y| >= eta} |d_x^j k| <= C e^{-cos(theta) eta^2/(2|t|)} / |t|^j.
  for (int j : {0, 1}) {
    const std::string key = "off_diagonal_" + std::to_string(j);
    if (!wanted(key)) continue;
    for (double b : ro.b)
      for (double phi : ro.phi) {
        EstimateCase c;
        c.lemma = key;
        c.b = b;
        c.phi = phi;
        c.thetas = sector_thetas(phi);
        c.grid.scale_free = false;
        c.grid.x_lo = 1e-2;
        c.grid.x_hi = 1e2;
        c.grid.include_zero = true;
        c.grid.taus = log_grid(0.05, 5.0, 4);
        c.grid.taus_refined = log_grid(0.05, 5.0, 8);
        c.estimand = [b, j](double x, const SectorTime& t, bool* ok) {
          const double eta = 1.0, sx = std::sqrt(x);
          Pieces P;
          if (sx > eta) P.emplace_back(0.0, (sx - eta) * (sx - eta));
          P.emplace_back((sx + eta) * (sx + eta), INFINITY);
          RegularKernel K{b, t};
          return iy([&](double y) { return std::abs(K.dxj(x, y, j)); }, b, P, {x}, t, ok);
        };
        c.normalizer = [j](double, const SectorTime& t) {
          return std::exp(-std::cos(t.theta) / (2.0 * t.tau)) / std::pow(t.tau, j);
        };
        const double th = std::numbers::pi / 2 - phi;
        c.decay = DecaySpec{1.0, {0.03, 0.04, 0.05, 0.07, 0.1}, static_cast<double>(j), std::cos(th) / 2, th};
        out.push_back(std::move(c));
      }
  }

  // Euclidean analogues: closed-form kernel e^{-(x-y)^2/4t}/sqrt(4 pi t) and its x-derivatives.
  {
    auto ke = [](const SectorTime& t, double d, int j) {
      const cplx tv = t.value();
      const cplx k = std::exp(-d * d / (4.0 * tv)) / std::sqrt(4.0 * std::numbers::pi * tv);
      if (j == 0) return k;
      if (j == 1) return -d / (2.0 * tv) * k;
      return (d * d / (4.0 * tv * tv) - 1.0 / (2.0 * tv)) * k;
    };
    // int over |d| >= eta of |d_x^j k^e|, by symmetry 2 int_eta^inf
    auto tail = [ke](const SectorTime& t, double eta, int j, double g, bool* ok) {
      const double w = std::sqrt(t.tau / std::cos(t.theta));
      std::vector<double> br{eta};
      for (double d = eta + w; d < eta + 14.0 * w; d += w) br.push_back(d);
      br.push_back(std::max(eta, 0.0) + 14.0 * w);
      auto r = integrate_adaptive([&](double d) { return std::abs(ke(t, d, j)) * std::pow(d, g); }, br,
                                  QuadTolerance{1e-300, 1e-9, 2000});
      if (ok) *ok = *ok && r.converged;
      return 2.0 * r.value;
    };
    for (int j : {0, 1}) {
      const std::string key = "euclidean_off_diagonal_" + std::to_string(j);
      if (!wanted(key)) continue;
      for (double phi : ro.phi) {
        EstimateCase c;
        c.lemma = key;
        c.phi = phi;
        c.thetas = sector_thetas(phi);
        c.grid.scale_free = false;
        c.grid.x_lo = 1.0;
        c.grid.x_hi = 1.0;
        c.grid.taus = log_grid(0.05, 5.0, 4);
        c.grid.taus_refined = log_grid(0.05, 5.0, 8);
        c.estimand = [tail, j](double, const SectorTime& t, bool* ok) { return tail(t, 1.0, j, 0.0, ok); };
        c.normalizer = [j](double, const SectorTime& t) {
          return std::exp(-std::cos(t.theta) / (8.0 * t.tau)) / std::pow(t.tau, 0.5 * j);
        };
        const double th = std::numbers::pi / 2 - phi;
        c.decay = DecaySpec{1.0, {0.03, 0.04, 0.05, 0.07, 0.1}, 0.5 * j, std::cos(th) / 8, th};
        out.push_back(std::move(c));
      }
    }
    // int |d_x^j k^e| |x - y|^gamma <= C |t|^{(gamma - j)/2}, j = 0, 1
    for (int j : {0, 1}) {
      const std::string key = "euclidean_holder_moment_" + std::to_string(j);
      if (!wanted(key)) continue;
      for (double g : ro.gamma)
        for (double phi : ro.phi) {
          EstimateCase c;
          c.lemma = key;
          c.gamma = g;
          c.phi = phi;
          c.thetas = sector_thetas(phi);
          c.grid.scale_free = false;
          c.grid.x_lo = 1.0;
          c.grid.x_hi = 1.0;
          c.grid.taus = log_grid(0.01, 10.0, 4);
          c.grid.taus_refined = log_grid(0.01, 10.0, 8);
          c.estimand = [tail, j, g](double, const SectorTime& t, bool* ok) { return tail(t, 0.0, j, g, ok); };
          c.normalizer = [j, g](double, const SectorTime& t) { return std::pow(t.tau, 0.5 * (g - j)); };
          out.push_back(std::move(c));
        }
    }
  }
  return out;
}

/// Distinct keys of the default registry.
inline std::vector<std::string> registry_keys() {
  RegistryOptions ro;
  ro.b = {1.0};
  ro.gamma = {0.5};
  ro.phi = {std::numbers::pi / 3};
  std::vector<std::string> keys;
  for (const auto& c : estimate_registry(ro))
    if (std::find(keys.begin(), keys.end(), c.lemma) == keys.end()) keys.push_back(c.lemma);
  return keys;
}

}  // namespace kimura
