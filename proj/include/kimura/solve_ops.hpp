#pragma once

// Solution operators of the model problems on R_+^n x R^m:
//   Cauchy        v(t) = e^{tL} f            (tensor kernel rules)
//   Duhamel       u(t) = int_0^t e^{(t-s)L} g(s) ds
//   commutation   d_t^q d_x^p e^{tL_b} f = e^{tL_{b+p}} L_{b+p}^q d^p f
//   resolvent     R(mu) f = int_0^inf e^{-mu t} e^{tL} f dt along a ray
//   contour       e^{tL} f = (1/2 pi i) int_Gamma e^{mu t} R(mu) f dmu

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"
#include "kimura/quadrature.hpp"

namespace kimura {

using Axes = std::vector<std::vector<double>>;

struct CauchyOptions {
  KernelRuleOptions rule;
  /// Compare against rules with half the panel width and fail above tol.
  /// Enabled by default for one-dimensional problems only.
  std::optional<bool> estimate_error;
  double tol = 1e-8;
  unsigned workers = 0;
  int max_halvings = 4;
};

/// Sampled solution on a tensor grid in space and a list of times.
struct SpaceTimeGrid {
  Axes axes;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[k] at times[k], flat grid order

  /// Degenerate coordinates must extend to 10 max(t)(1 + max b).
  void validate(const ModelSpec& spec) const {
    if (axes.size() != spec.dim()) throw DimensionError("SpaceTimeGrid: axes do not match the model");
    if (values.size() != times.size()) throw DimensionError("SpaceTimeGrid: one value set per time");
    double tmax = 0.0;
    for (double t : times) tmax = std::max(tmax, t);
    for (std::size_t d = 0; d < axes.size(); ++d) {
      const auto& a = axes[d];
      for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] > a[i - 1])) throw DomainError("SpaceTimeGrid: coordinates must be strictly increasing");
      if (d < spec.n() && a.back() < 10.0 * tmax * (1.0 + spec.max_b()))
        throw DomainError("SpaceTimeGrid: truncation bound below 10 max(t)(1 + max b)");
    }
  }
};

namespace detail {

inline void check_axes(const ModelSpec& spec, const Axes& axes) {
  spec.validate();
  if (axes.size() != spec.dim()) throw DimensionError("solve: grid dimension does not match n + m");
  for (std::size_t d = 0; d < axes.size(); ++d) {
    if (axes[d].empty()) throw DimensionError("solve: empty axis");
    for (std::size_t i = 1; i < axes[d].size(); ++i)
      if (!(axes[d][i] > axes[d][i - 1])) throw DomainError("solve: axis coordinates must be strictly increasing");
    if (d < spec.n() && axes[d].front() < 0.0) throw DomainError("solve: degenerate coordinates must be nonnegative");
  }
}

/// Per-axis kernel rules for every coordinate value of the output grid.
inline std::vector<std::vector<KernelRule>> build_rules(const ModelSpec& spec, const SectorTime& t, const Axes& axes,
                                                        const KernelRuleOptions& ropt, unsigned workers) {
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  std::vector<std::vector<KernelRule>> rules(axes.size());
  for (std::size_t d = 0; d < axes.size(); ++d) {
    rules[d].resize(axes[d].size());
    for (std::size_t i = 0; i < axes[d].size(); ++i) jobs.emplace_back(d, i);
  }
  parallel_for(
      jobs.size(),
      [&](std::size_t k) {
        const auto [d, i] = jobs[k];
        rules[d][i] = d < spec.n() ? make_kernel_rule(spec.b[d], t, axes[d][i], ropt)
                                   : make_euclidean_rule(t, axes[d][i], ropt);
      },
      workers);
  return rules;
}

template <class F>
cplx tensor_sum(F& f, const std::vector<const KernelRule*>& rules, std::vector<double>& p, std::size_t d) {
  const KernelRule& r = *rules[d];
  cplx acc(0.0, 0.0);
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    p[d] = r.nodes[k];
    if (d + 1 == rules.size())
      acc += r.weights[k] * cplx(f(p));
    else
      acc += r.weights[k] * tensor_sum(f, rules, p, d + 1);
  }
  return acc;
}

template <class F>
std::vector<cplx> apply_rules(F& f, const std::vector<std::vector<KernelRule>>& rules, const GridFunction<cplx>& shape,
                              unsigned workers) {
  std::vector<cplx> out(shape.size());
  parallel_for(
      out.size(),
      [&](std::size_t k) {
        auto idx = shape.unflatten(k);
        std::vector<const KernelRule*> rk(idx.size());
        for (std::size_t d = 0; d < idx.size(); ++d) rk[d] = &rules[d][idx[d]];
        std::vector<double> p(idx.size());
        out[k] = tensor_sum(f, rk, p, 0);
      },
      workers);
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace detail

/// v(., t) = e^{tL} f sampled on the tensor grid `axes`. f maps a point
/// (x_1..x_n, y_1..y_m) to a real or complex value and is evaluated on the
/// closed orthant, including at boundary atoms.
template <class F>
GridFunction<cplx> apply_cauchy(const ModelSpec& spec, const SectorTime& t, F&& f, const Axes& axes,
                                const CauchyOptions& opt = {}) {
  detail::check_axes(spec, axes);
  GridFunction<cplx> out(axes);
  auto rules = detail::build_rules(spec, t, axes, opt.rule, opt.workers);
  out.values = detail::apply_rules(f, rules, out, opt.workers);

  double upper = 0.0, mass_err = 0.0;
  std::size_t nodes = 0;
  for (const auto& ax : rules)
    for (const auto& r : ax) {
      upper = std::max(upper, r.upper);
      mass_err = std::max(mass_err, r.mass_error);
      nodes = std::max(nodes, r.nodes.size());
    }
  out.metadata["operator"] = "cauchy";
  out.metadata["t_tau"] = detail::fmt(t.tau);
  out.metadata["t_theta"] = detail::fmt(t.theta);
  out.metadata["truncation_tail_log"] = detail::fmt(opt.rule.tail_log);
  out.metadata["truncation_max_node"] = detail::fmt(upper);
  out.metadata["rule_mass_error"] = detail::fmt(mass_err);
  out.metadata["rule_max_nodes"] = std::to_string(nodes);

  const bool estimate = opt.estimate_error.value_or(spec.dim() == 1);
  if (estimate) {
    KernelRuleOptions fine = opt.rule;
    double err = 0.0;
    std::size_t worst = 0;
    for (int level = 0; level < opt.max_halvings; ++level) {
      fine.panel_width *= 0.5;
      fine.data_scale *= 0.5;
      auto rules2 = detail::build_rules(spec, t, axes, fine, opt.workers);
      auto v2 = detail::apply_rules(f, rules2, out, opt.workers);
      err = 0.0;
      for (std::size_t k = 0; k < v2.size(); ++k) {
        const double e = std::abs(v2[k] - out.values[k]);
        if (e > err) {
          err = e;
          worst = k;
        }
      }
      out.values = std::move(v2);
      if (err <= opt.tol) break;
    }
    out.metadata["quadrature_error_estimate"] = detail::fmt(err);
    out.metadata["rule_panel_width"] = detail::fmt(fine.panel_width);
    if (err > opt.tol) {
      std::ostringstream msg;
      msg << "apply_cauchy: quadrature unresolved (estimated error " << err << " > " << opt.tol << " at grid point "
          << worst << ", tau=" << t.tau << ", theta=" << t.theta << ", panel width " << fine.panel_width << ")";
      throw ConvergenceError(msg.str());
    }
  }
  return out;
}

/// Cauchy solution on the grid of f, using f's interpolant as data.
template <class T>
GridFunction<cplx> apply_cauchy(const ModelSpec& spec, const SectorTime& t, const GridFunction<T>& f,
                                const CauchyOptions& opt = {}) {
  auto data = [&f](const std::vector<double>& p) { return f.interpolate(p); };
  return apply_cauchy(spec, t, data, f.axes, opt);
}

// ---------------------------------------------------------------------------
// Duhamel

struct DuhamelOptions {
  CauchyOptions cauchy{KernelRuleOptions{}, false, 1e-8, 0};
  int gauss_order = 8;
  int graded_levels = 8;  // geometric refinement of the last panel toward s = t
};

namespace detail {

/// Time nodes and weights on [0, t]: uniform Gauss panels, the last one graded
/// geometrically toward s = t where the kernel concentrates.
inline std::vector<std::pair<double, double>> duhamel_nodes(double t, int panels, const DuhamelOptions& opt) {
  const GaussRule gl = make_gauss_legendre(opt.gauss_order);
  std::vector<std::pair<double, double>> nodes;
  auto panel = [&](double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) nodes.emplace_back(mid + half * gl.nodes[i], half * gl.weights[i]);
  };
  const double w = t / panels;
  for (int k = 0; k + 1 < panels; ++k) panel(k * w, (k + 1) * w);
  double a = t - w;
  for (int k = 0; k < opt.graded_levels; ++k) {
    const double b = t - (t - a) * 0.25;
    panel(a, b);
    a = b;
  }
  panel(a, t);
  return nodes;
}

}  // namespace detail

/// u(., t) = int_0^t e^{(t-s)L} g(., s) ds. g(point, s) is real or complex.
template <class G>
GridFunction<cplx> apply_duhamel(const ModelSpec& spec, G&& g, double t, int n_time_panels, const Axes& axes,
                                 const DuhamelOptions& opt = {}) {
  detail::check_axes(spec, axes);
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("apply_duhamel: t must be nonnegative");
  if (n_time_panels < 1) throw DomainError("apply_duhamel: need at least one time panel");
  GridFunction<cplx> out(axes);
  out.metadata["operator"] = "duhamel";
  out.metadata["t"] = detail::fmt(t);
  out.metadata["time_panels"] = std::to_string(n_time_panels);
  if (t == 0.0) return out;
  for (const auto& [s, w] : detail::duhamel_nodes(t, n_time_panels, opt)) {
    auto gs = [&, s = s](const std::vector<double>& p) { return g(p, s); };
    auto v = apply_cauchy(spec, SectorTime::real(t - s), gs, axes, opt.cauchy);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * v.values[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derivative commutation

/// A function known through its derivatives f^{(k)}(y), 0 <= k <= max_order.
struct SmoothData {
  int max_order = 0;
  std::function<double(double y, int order)> eval;
};

/// Coefficients c_{a,d} with L^q h = sum c_{a,d} y^a h^{(d)} for L = y d^2 + c d
/// (degenerate) or L = d^2 (Euclidean).
inline std::map<std::pair<int, int>, double> power_of_model_operator(double c, int q, bool euclidean) {
  std::map<std::pair<int, int>, double> terms{{{0, 0}, 1.0}};
  for (int step = 0; step < q; ++step) {
    std::map<std::pair<int, int>, double> next;
    for (const auto& [key, coef] : terms) {
      const auto [a, d] = key;
      if (euclidean) {
        next[{a, d + 2}] += coef;
        continue;
      }
      const double low = a * (a - 1.0) + c * a;
      if (low != 0.0) next[{a - 1, d}] += coef * low;
      if (2.0 * a + c != 0.0) next[{a, d + 1}] += coef * (2.0 * a + c);
      next[{a + 1, d + 2}] += coef;
    }
    terms = std::move(next);
  }
  return terms;
}

/// d_t^q d_x^p e^{tL} f for a one-dimensional model, computed as
/// e^{tL_{b+p}} (L_{b+p}^q d^p f).
inline GridFunction<cplx> derivative_commute(const ModelSpec& spec, const SectorTime& t, const SmoothData& f, int p,
                                             int q, const std::vector<double>& axis, const CauchyOptions& opt = {}) {
  spec.validate();
  if (spec.dim() != 1) throw DimensionError("derivative_commute: one-dimensional model required");
  if (p < 0 || q < 0) throw DomainError("derivative_commute: p and q must be nonnegative");
  if (!f.eval) throw DomainError("derivative_commute: no data supplied");
  if (p + 2 * q > f.max_order)
    throw DomainError("derivative_commute: data smoothness insufficient for p + 2q derivatives");
  const bool euclid = spec.n() == 0;
  const double shifted = euclid ? 0.0 : spec.b[0] + p;
  const auto terms = power_of_model_operator(shifted, q, euclid);
  auto data = [&](const std::vector<double>& pt) {
    const double y = pt[0];
    double s = 0.0;
    for (const auto& [key, coef] : terms) {
      const auto [a, d] = key;
      const double ya = a == 0 ? 1.0 : std::pow(y, a);
      s += coef * ya * f.eval(y, p + d);
    }
    return s;
  };
  ModelSpec shifted_spec = spec;
  if (!euclid) shifted_spec.b[0] = shifted;
  auto out = apply_cauchy(shifted_spec, t, data, Axes{axis}, opt);
  out.metadata["operator"] = "derivative_commute";
  out.metadata["p"] = std::to_string(p);
  out.metadata["q"] = std::to_string(q);
  return out;
}

// ---------------------------------------------------------------------------
// Resolvent

struct ResolventOptions {
  std::optional<double> theta;                   // ray angle; default -arg(mu)/2
  double theta_clamp = std::numbers::pi / 2 - 0.1;
  double sector_margin = 0.05;                   // phi_0 for user-supplied theta
  double tail_log = 37.0;                        // stop where |e^{-mu t}| < e^{-tail_log}
  double start_fraction = 1e-8;                  // [0, fraction * tau_max] uses e^{tL} f ~ f
  double max_phase_per_panel = 3.0;              // |s| * panel width
  double abs_tol = 1e-10, rel_tol = 1e-9;
  KernelRuleOptions rule;
  unsigned workers = 0;
};

inline double default_ray_angle(cplx mu, double clamp = std::numbers::pi / 2 - 0.1) {
  return std::clamp(-0.5 * std::arg(mu), -clamp, clamp);
}

namespace detail {

inline double checked_ray_angle(cplx mu, const ResolventOptions& opt) {
  if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) throw DomainError("resolvent: mu must be finite");
  if (mu.imag() == 0.0 && mu.real() <= 0.0) throw SectorError("resolvent: mu lies on (-inf, 0]; no admissible ray");
  const double theta = opt.theta ? *opt.theta : default_ray_angle(mu, opt.theta_clamp);
  if (std::abs(theta) > std::numbers::pi / 2 - opt.sector_margin)
    throw SectorError("resolvent: ray angle outside the admissible sector");
  if (!((mu * std::polar(1.0, theta)).real() > 0.0))
    throw DomainError("resolvent: Re(mu e^{i theta}) <= 0, the ray integrand does not decay");
  return theta;
}

}  // namespace detail

/// R(mu) f = int_0^inf e^{-mu tau e^{i theta}} e^{tau e^{i theta} L} f e^{i theta} dtau.
/// The ray is split into geometric panels (further split where e^{-s tau}
/// oscillates); each panel uses Gauss-Legendre of two orders and the
/// difference is the error estimate.
template <class F>
GridFunction<cplx> resolvent_apply(const ModelSpec& spec, cplx mu, F&& f, const Axes& axes,
                                   const ResolventOptions& opt = {}) {
  detail::check_axes(spec, axes);
  const double theta = detail::checked_ray_angle(mu, opt);
  const cplx rot = std::polar(1.0, theta);
  const cplx s = mu * rot;
  const double tau_max = opt.tail_log / s.real();
  const double tau_min = tau_max * opt.start_fraction;
  GridFunction<cplx> shape(axes);

  auto sample = [&](double tau) {
    const SectorTime t(tau, theta);
    auto rules = detail::build_rules(spec, t, axes, opt.rule, opt.workers);
    return detail::apply_rules(f, rules, shape, opt.workers);
  };

  std::vector<double> edges{tau_min};
  for (double a = tau_min; a < tau_max;) {
    const double b = std::min(tau_max, 2.0 * a);
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(s) * (b - a) / opt.max_phase_per_panel)));
    for (int k = 1; k <= pieces; ++k) edges.push_back(a + (b - a) * k / pieces);
    a = b;
  }
  using K = detail::Kronrod15;
  std::vector<cplx> value(shape.size(), cplx(0.0, 0.0)), coarse(shape.size(), cplx(0.0, 0.0));
  // e^{tL} f ~ f on [0, tau_min]
  {
    const cplx w0 = (1.0 - std::exp(-s * tau_min)) / s * rot;
    for (std::size_t k = 0; k < value.size(); ++k) {
      value[k] += w0 * cplx(f(shape.point(k)));
      coarse[k] = value[k];
    }
  }
  // Embedded Gauss 7 / Kronrod 15 pair per panel: 15 semigroup samples.
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double a = edges[j], b = edges[j + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto add = [&](double x, double wk, double wg) {
      const double tau = mid + half * x;
      const cplx e = half * std::exp(-s * tau) * rot;
      const auto v = sample(tau);
      for (std::size_t k = 0; k < value.size(); ++k) {
        value[k] += wk * e * v[k];
        if (wg != 0.0) coarse[k] += wg * e * v[k];
      }
    };
    for (std::size_t i = 0; i < K::xgk.size(); ++i) {
      const double wg = (i % 2 == 1) ? K::wg[i / 2] : 0.0;
      add(K::xgk[i], K::wgk[i], wg);
      if (i + 1 < K::xgk.size()) add(-K::xgk[i], K::wgk[i], wg);
    }
  }
  double err = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < value.size(); ++k) {
    err = std::max(err, std::abs(value[k] - coarse[k]));
    scale = std::max(scale, std::abs(value[k]));
  }
  if (err > opt.abs_tol + opt.rel_tol * scale) {
    std::ostringstream msg;
    msg << "resolvent_apply: ray quadrature unresolved (error estimate " << err << ", mu=" << mu << ", theta=" << theta
        << ")";
    throw ConvergenceError(msg.str());
  }
  shape.values = std::move(value);
  shape.metadata["operator"] = "resolvent";
  shape.metadata["mu_re"] = detail::fmt(mu.real());
  shape.metadata["mu_im"] = detail::fmt(mu.imag());
  shape.metadata["ray_theta"] = detail::fmt(theta);
  shape.metadata["ray_truncation_tau"] = detail::fmt(tau_max);
  shape.metadata["ray_start_tau"] = detail::fmt(tau_min);
  shape.metadata["ray_panels"] = std::to_string(edges.size() - 1);
  shape.metadata["quadrature_error_estimate"] = detail::fmt(err);
  return shape;
}

/// Samples e^{tL} f along one ray t = tau e^{i theta} on geometric panels and
/// then evaluates R(mu) f for any mu with Re(mu e^{i theta}) > 0 through
/// exact weights int e^{-s tau} l_k(tau) dtau of the panel interpolants.
class RayLaplace {
 public:
  struct Options {
    double tau_min = 1e-8;
    double tau_max = 300.0;
    double ratio = 1.5;
    int nodes_per_panel = 16;
    KernelRuleOptions rule;
    unsigned workers = 0;
  };

  template <class F>
  RayLaplace(const ModelSpec& spec, F&& f, const Axes& axes, double theta, const Options& opt = {})
      : theta_(theta), shape_(axes), opt_(opt) {
    detail::check_axes(spec, axes);
    if (std::abs(theta) >= std::numbers::pi / 2) throw SectorError("RayLaplace: |theta| must be below pi/2");
    for (double a = opt.tau_min; a < opt.tau_max; a *= opt.ratio) edges_.push_back(a);
    edges_.push_back(opt.tau_max);
    const int n = opt.nodes_per_panel;
    cheb_.resize(n);
    bary_.resize(n);
    for (int k = 0; k < n; ++k) {
      const double ang = (2.0 * k + 1.0) * std::numbers::pi / (2.0 * n);
      cheb_[k] = std::cos(ang);
      bary_[k] = ((k % 2) ? -1.0 : 1.0) * std::sin(ang);
    }
    // f itself at tau -> 0 covers [0, tau_min].
    f0_.resize(shape_.size());
    for (std::size_t k = 0; k < f0_.size(); ++k) f0_[k] = cplx(f(shape_.point(k)));

    samples_.resize((edges_.size() - 1) * n);
    for (std::size_t j = 0; j + 1 < edges_.size(); ++j) {
      for (int k = 0; k < n; ++k) {
        const double tau = node(j, k);
        const SectorTime t(tau, theta);
        auto rules = detail::build_rules(spec, t, axes, opt.rule, opt.workers);
        samples_[j * n + k] = detail::apply_rules(f, rules, shape_, opt.workers);
      }
    }
  }

  double theta() const { return theta_; }
  const GridFunction<cplx>& shape() const { return shape_; }

  /// R(mu) f on the grid; requires Re(mu e^{i theta}) > 0.
  std::vector<cplx> apply(cplx mu) const {
    const cplx rot = std::polar(1.0, theta_);
    const cplx s = mu * rot;
    if (!(s.real() > 0.0)) throw DomainError("RayLaplace: Re(mu e^{i theta}) <= 0");
    const int n = opt_.nodes_per_panel;
    std::vector<cplx> out(shape_.size(), cplx(0.0, 0.0));
    // [0, tau_min]: e^{tL} f ~ f
    const cplx w0 = (1.0 - std::exp(-s * edges_.front())) / s;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w0 * f0_[k];
    std::vector<cplx> w(n);
    for (std::size_t j = 0; j + 1 < edges_.size(); ++j) {
      const double a = edges_[j], b = edges_[j + 1];
      if (s.real() * a > 745.0) break;
      panel_weights(s, a, b, w);
      for (int k = 0; k < n; ++k) {
        const auto& v = samples_[j * n + k];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * v[i];
      }
    }
    for (auto& e : out) e *= rot;
    return out;
  }

  /// Largest tau covered; the tail beyond it is dropped.
  double tau_max() const { return edges_.back(); }

 private:
  double node(std::size_t j, int k) const {
    const double a = edges_[j], b = edges_[j + 1];
    return 0.5 * (a + b) + 0.5 * (b - a) * cheb_[k];
  }

  // w_k = int_a^b e^{-s tau} l_k(tau) dtau with l_k the Chebyshev Lagrange basis.
  void panel_weights(cplx s, double a, double b, std::vector<cplx>& w) const {
    const int n = opt_.nodes_per_panel;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    const int m = std::clamp(32 + 2 * static_cast<int>(std::abs(s.imag()) * half), 32, 4096);
    const GaussRule& gl = rule_for(m);
    std::fill(w.begin(), w.end(), cplx(0.0, 0.0));
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double xi = gl.nodes[i];
      const cplx e = std::exp(-s * (mid + half * xi)) * (half * gl.weights[i]);
      double denom = 0.0;
      int exact = -1;
      for (int k = 0; k < n; ++k) {
        const double diff = xi - cheb_[k];
        if (diff == 0.0) {
          exact = k;
          break;
        }
        terms[k] = bary_[k] / diff;
        denom += terms[k];
      }
      if (exact >= 0) {
        w[exact] += e;
        continue;
      }
      for (int k = 0; k < n; ++k) w[k] += e * (terms[k] / denom);
    }
  }

  const GaussRule& rule_for(int m) const {
    std::lock_guard lock(cache_mutex_);
    auto it = gl_cache_.find(m);
    if (it == gl_cache_.end()) it = gl_cache_.emplace(m, make_gauss_legendre(m)).first;
    return it->second;
  }

  double theta_;
  GridFunction<cplx> shape_;
  Options opt_;
  std::vector<double> edges_, cheb_, bary_;
  std::vector<cplx> f0_;
  std::vector<std::vector<cplx>> samples_;
  mutable std::map<int, GaussRule> gl_cache_;
  mutable std::mutex cache_mutex_;
};

/// Gamma_{alpha,R}: boundary of {|arg mu| < pi - alpha, |mu| > R}.
struct Contour {
  double alpha = std::numbers::pi / 6;
  double R = 1.0;
  double tail_log = 36.8;  // ray truncation where |e^{mu t}| < e^{-tail_log}

  void validate() const {
    if (!(alpha > 0.0 && alpha < std::numbers::pi)) throw DomainError("Contour: alpha must lie in (0, pi)");
    if (!(R > 0.0)) throw DomainError("Contour: R must be positive");
  }
};

/// Resolvent provider for the contour integral: one cached ray per angle
/// bucket, with theta in {-(pi/2 - margin), 0, pi/2 - margin} chosen by arg mu.
class BucketedResolvent {
 public:
  template <class F>
  BucketedResolvent(const ModelSpec& spec, F f, const Axes& axes, const RayLaplace::Options& opt = {},
                    double bucket_angle = 5.0 * std::numbers::pi / 12)
      : bucket_angle_(bucket_angle) {
    make_ = [spec, f, axes, opt](double theta) { return std::make_unique<RayLaplace>(spec, f, axes, theta, opt); };
  }

  double theta_for(cplx mu) const {
    const double a = std::arg(mu);
    if (a >= std::numbers::pi / 4) return -bucket_angle_;
    if (a <= -std::numbers::pi / 4) return bucket_angle_;
    return 0.0;
  }

  std::vector<cplx> operator()(cplx mu) {
    const double th = theta_for(mu);
    const int key = th > 0 ? 1 : (th < 0 ? -1 : 0);
    std::unique_ptr<RayLaplace>* slot;
    {
      std::lock_guard lock(mutex_);
      slot = &rays_[key];
    }
    if (!*slot) *slot = make_(th);
    return (*slot)->apply(mu);
  }

  /// Break angles of arg mu where the bucket changes.
  static std::vector<double> break_angles() { return {-std::numbers::pi / 4, std::numbers::pi / 4}; }

 private:
  double bucket_angle_;
  std::function<std::unique_ptr<RayLaplace>(double)> make_;
  std::map<int, std::unique_ptr<RayLaplace>> rays_;
  std::mutex mutex_;
};

struct ContourOptions {
  QuadTolerance tol{1e-12, 1e-9, 2000};
  std::vector<double> arc_breaks = BucketedResolvent::break_angles();
};

/// e^{tL} f = (1/2 pi i) int_Gamma e^{mu t} R(mu) f dmu. The lower ray runs
/// inward, the arc counterclockwise through mu = R, the upper ray outward.
/// `resolvent(mu)` returns R(mu) f as a vector of grid values.
template <class Provider>
std::vector<cplx> semigroup_via_contour(Provider&& resolvent, double t, const Contour& contour,
                                        const ContourOptions& opt = {}) {
  contour.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("semigroup_via_contour: t must be positive");
  const double pi = std::numbers::pi;
  const double ang = pi - contour.alpha;
  const double decay = -std::cos(ang);  // Re mu = -r decay on the rays
  if (!(decay > 0.0)) throw DomainError("semigroup_via_contour: rays must enter the left half plane (alpha < pi/2)");
  const double r_max = std::max(contour.R * 2.0, contour.tail_log / (t * decay));

  auto ray = [&](double sign) {
    const cplx dir = std::polar(1.0, sign * ang);
    auto integrand = [&](double r) {
      const cplx mu = r * dir;
      auto v = resolvent(mu);
      const cplx factor = std::exp(mu * t) * dir;
      for (auto& e : v) e *= factor;
      return v;
    };
    std::vector<double> br{contour.R};
    for (double r = 2.0 * contour.R; r < r_max; r *= 2.0) br.push_back(r);
    br.push_back(r_max);
    return integrate_adaptive(integrand, br, opt.tol);
  };
  auto upper = ray(+1.0);
  auto lower = ray(-1.0);  // integrated outward; enters with a minus sign

  auto arc_integrand = [&](double phi) {
    const cplx mu = std::polar(contour.R, phi);
    auto v = resolvent(mu);
    const cplx factor = std::exp(mu * t) * cplx(0.0, 1.0) * mu;
    for (auto& e : v) e *= factor;
    return v;
  };
  std::vector<double> br{-ang};
  for (double a : opt.arc_breaks)
    if (a > -ang && a < ang) br.push_back(a);
  br.push_back(0.0);
  br.push_back(ang);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  auto arc = integrate_adaptive(arc_integrand, br, opt.tol);
  if (!upper.converged || !lower.converged || !arc.converged)
    throw ConvergenceError("semigroup_via_contour: contour quadrature did not converge");

  std::vector<cplx> out(upper.value.size());
  const cplx norm = 1.0 / (2.0 * pi * cplx(0.0, 1.0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = norm * (upper.value[i] - lower.value[i] + arc.value[i]);
  return out;
}

/// Grid-valued convenience wrapper around the bucketed ray resolvent.
template <class F>
GridFunction<cplx> semigroup_via_contour(const ModelSpec& spec, F f, const Axes& axes, double t,
                                         const Contour& contour = {}, const RayLaplace::Options& ray = {},
                                         const ContourOptions& opt = {}) {
  BucketedResolvent res(spec, f, axes, ray);
  GridFunction<cplx> out(axes);
  out.values = semigroup_via_contour(res, t, contour, opt);
  out.metadata["operator"] = "semigroup_contour";
  out.metadata["alpha"] = detail::fmt(contour.alpha);
  out.metadata["R"] = detail::fmt(contour.R);
  out.metadata["ray_tau_max"] = detail::fmt(ray.tau_max);
  return out;
}

}  // namespace kimura
