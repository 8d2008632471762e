#pragma once

// Identity checks (tolerance-absolute), the maximum principle over a standard
// set of solves, Hoelder-norm propagation, and the suite runners that turn all
// of them into JSON records.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/kimura_op.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"
#include "kimura/sampling.hpp"
#include "kimura/solve_ops.hpp"
#include "kimura/specfun.hpp"
#include "kimura/verify.hpp"
#include "kimura/wf_geometry.hpp"
#include "kimura/wf_parametrix.hpp"

namespace kimura {

/// Outcome of an identity check: the largest deviation over the sampled
/// parameters and where it occurred.
struct IdentityReport {
  std::string check;
  double error = 0.0;
  double tolerance = 0.0;
  std::size_t points = 0;
  nlohmann::json worst = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
  bool pass = false;
  std::string message;

  void record(double e, nlohmann::json where) {
    ++points;
    if (!(e <= error) || points == 1) {
      error = e;
      worst = std::move(where);
    }
  }
  void finish() { pass = std::isfinite(error) && error <= tolerance && message.empty(); }
};

namespace detail {

template <class Body>
IdentityReport guarded(std::string name, double tol, Body&& body) {
  IdentityReport rep;
  rep.check = std::move(name);
  rep.tolerance = tol;
  try {
    body(rep);
  } catch (const std::exception& e) {
    rep.message = e.what();
  }
  rep.finish();
  return rep;
}

/// exp(-1/(1 - s^2)) on |s| < 1, s = (x - centre)/half_width.
struct Bump {
  double centre = 1.25, half_width = 0.75;
  double operator()(double x) const {
    const double s = (x - centre) / half_width;
    return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
  }
  double operator()(const std::vector<double>& p) const { return (*this)(p[0]); }
  double lo() const { return centre - half_width; }
  double hi() const { return centre + half_width; }
};

/// Rule options that resolve the bump's length scale inside its support.
inline KernelRuleOptions bump_rule(const Bump& f, KernelRuleOptions r = {}) {
  r.data_scale = f.half_width / 8.0;
  r.support_lo = f.lo();
  r.support_hi = f.hi();
  return r;
}

// Sixth-order central differences on x0 + k h, k = -3..3.
inline constexpr std::array<double, 7> kD1{-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
inline constexpr std::array<double, 7> kD2{1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90};

/// Stencil axis: the centres x0 with their +-3h neighbours, sorted.
inline std::vector<double> stencil_axis(const std::vector<double>& centres, double h, int half = 3) {
  std::vector<double> ax;
  for (double c : centres)
    for (int k = -half; k <= half; ++k) ax.push_back(c + k * h);
  std::sort(ax.begin(), ax.end());
  ax.erase(std::unique(ax.begin(), ax.end(), [h](double a, double b) { return std::abs(a - b) < 1e-3 * h; }),
           ax.end());
  return ax;
}

inline std::size_t nearest(const std::vector<double>& ax, double x) {
  return static_cast<std::size_t>(std::min_element(ax.begin(), ax.end(),
                                                   [x](double a, double b) { return std::abs(a - x) < std::abs(b - x); }) -
                                  ax.begin());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kernel identities

/// max |atom + int density - 1| over the (b, t, x) grid.
inline IdentityReport check_mass(const std::vector<double>& bs, const std::vector<double>& ts,
                                 const std::vector<double>& xs, double tol = 1e-8, unsigned workers = 0) {
  return detail::guarded("mass", tol, [&](IdentityReport& rep) {
    struct P {
      double b, t, x, err;
    };
    std::vector<P> pts;
    for (double b : bs)
      for (double t : ts)
        for (double x : xs) pts.push_back({b, t, x, 0.0});
    parallel_for(
        pts.size(),
        [&](std::size_t i) {
          auto& p = pts[i];
          const auto m = kernel_mass(p.b, SectorTime::real(p.t), p.x);
          p.err = m.converged ? std::abs(m.value - 1.0) : std::numeric_limits<double>::infinity();
        },
        workers);
    for (const auto& p : pts) rep.record(p.err, {{"b", p.b}, {"t", p.t}, {"x", p.x}});
  });
}

/// max |int k_t(x,y) k_s(y,z) dy - k_{t+s}(x,z)| / k_{t+s}(x,z).
inline IdentityReport check_chapman_kolmogorov(const std::vector<double>& bs,
                                               const std::vector<std::pair<double, double>>& ts,
                                               const std::vector<double>& xs, const std::vector<double>& zs,
                                               double tol = 1e-6, unsigned workers = 0) {
  return detail::guarded("chapman_kolmogorov", tol, [&](IdentityReport& rep) {
    struct P {
      double b, t, s, x, z, err;
    };
    std::vector<P> pts;
    for (double b : bs)
      for (const auto& [t, s] : ts)
        for (double x : xs)
          for (double z : zs) pts.push_back({b, t, s, x, z, 0.0});
    parallel_for(
        pts.size(),
        [&](std::size_t i) {
          auto& p = pts[i];
          const SectorTime tt = SectorTime::real(p.t), ss = SectorTime::real(p.s);
          KernelQuadOptions opt;
          opt.extra_breaks = {p.z};
          const auto lhs = integrate_kernel(
              p.b, tt, p.x, [&](double y) { return kernel_1d(p.b, ss, y, p.z).real(); }, opt);
          const double rhs = kernel_1d(p.b, SectorTime::real(p.t + p.s), p.x, p.z).real();
          p.err = lhs.converged ? std::abs(lhs.value.real() - rhs) / rhs : std::numeric_limits<double>::infinity();
        },
        workers);
    for (const auto& p : pts) rep.record(p.err, {{"b", p.b}, {"t", p.t}, {"s", p.s}, {"x", p.x}, {"z", p.z}});
  });
}

/// Relative gap between the series and asymptotic branches of psi_b on the
/// real window [R/2, 2R] around the crossover radius R.
inline IdentityReport check_psi_branches(const std::vector<double>& bs, double tol = 1e-7, int samples = 65,
                                         const PsiRegime& regime = {}) {
  return detail::guarded("psi_branch_agreement", tol, [&](IdentityReport& rep) {
    const double R = regime.crossover_radius;
    for (double b : bs)
      for (int i = 0; i < samples; ++i) {
        const double z = 0.5 * R * std::pow(4.0, static_cast<double>(i) / (samples - 1));
        const LogComplex s = psi_b_series(b, z), a = psi_b_asymptotic(b, z, regime.asymptotic_order);
        const double err = std::abs(std::expm1(a.log_magnitude - s.log_magnitude));
        rep.record(err, {{"b", b}, {"z", z}});
      }
    rep.extra["crossover_radius"] = R;
  });
}

/// L_b x^beta = beta (beta - 1 + b) x^{beta - 1}; at beta = 0 and beta = 1 - b
/// the two terms x beta (beta-1) x^{beta-2} and b beta x^{beta-1} cancel.
/// The residual is evaluated term by term in floating point and measured
/// relative to the size of the larger term.
inline IdentityReport check_indicial(double b, std::vector<double> xs = {}, double tol = 1e-12) {
  return detail::guarded("indicial", tol, [&](IdentityReport& rep) {
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("check_indicial: b must be positive");
    if (xs.empty())
      for (int i = 0; i <= 24; ++i) xs.push_back(std::pow(10.0, -3.0 + 0.25 * i));
    std::vector<double> roots{0.0};
    if (b != 1.0) roots.push_back(1.0 - b);
    for (double beta : roots)
      for (double x : xs) {
        const double second = x * beta * (beta - 1.0) * std::pow(x, beta - 2.0);
        const double first = b * beta * std::pow(x, beta - 1.0);
        const double scale = std::max({std::abs(second), std::abs(first), std::numeric_limits<double>::min()});
        const double res = beta == 0.0 ? std::abs(second + first) : std::abs(second + first) / scale;
        rep.record(res, {{"b", b}, {"root", beta}, {"x", x}});
      }
  });
}

// ---------------------------------------------------------------------------
// Solve-operator identities

/// sup over interior x of |(mu - L_b) R(mu) f - f|, with L_b applied to the
/// computed resolvent by sixth-order central differences.
inline IdentityReport check_resolvent_residual(double b, const std::vector<cplx>& mus, double tol = 1e-5,
                                               double h = 0.01, unsigned workers = 0) {
  return detail::guarded("resolvent_residual", tol, [&](IdentityReport& rep) {
    const detail::Bump f;
    std::vector<double> centres;
    for (int i = 0; i <= 16; ++i) centres.push_back(0.2 + 0.175 * i);
    const auto ax = detail::stencil_axis(centres, h);
    ResolventOptions opt;
    opt.rule = detail::bump_rule(f);
    opt.abs_tol = 1e-10;
    opt.rel_tol = 1e-10;
    opt.workers = workers;
    const ModelSpec spec{{b}, 0};
    for (cplx mu : mus) {
      const auto r = resolvent_apply(spec, mu, f, Axes{ax}, opt);
      for (double c : centres) {
        const std::size_t i0 = detail::nearest(ax, c);
        cplx d1(0.0, 0.0), d2(0.0, 0.0);
        for (int k = -3; k <= 3; ++k) {
          const cplx v = r.values[detail::nearest(ax, c + k * h)];
          d1 += detail::kD1[k + 3] * v;
          d2 += detail::kD2[k + 3] * v;
        }
        const cplx Lr = c * d2 / (h * h) + b * d1 / h;
        const double res = std::abs(mu * r.values[i0] - Lr - f(c));
        rep.record(res, {{"b", b}, {"mu_re", mu.real()}, {"mu_im", mu.imag()}, {"x", c}});
      }
    }
    rep.extra["fd_step"] = h;
  });
}

/// sup |contour semigroup - apply_cauchy| for a Gaussian bump.
inline IdentityReport check_contour_vs_direct(double b, const std::vector<double>& ts, double tol = 1e-4,
                                              unsigned workers = 0) {
  return detail::guarded("contour_vs_direct", tol, [&](IdentityReport& rep) {
    auto f = [](const std::vector<double>& p) { return std::exp(-(p[0] - 1.0) * (p[0] - 1.0) / 0.5); };
    const Axes axes{linspace(0.0, 4.0, 21)};
    const ModelSpec spec{{b}, 0};
    RayLaplace::Options ray;
    ray.workers = workers;
    BucketedResolvent resolvent(spec, f, axes, ray);  // shared by every t
    CauchyOptions copt;
    copt.workers = workers;
    for (double t : ts) {
      const auto c = semigroup_via_contour(resolvent, t, Contour{});
      const auto d = apply_cauchy(spec, SectorTime::real(t), f, axes, copt);
      for (std::size_t k = 0; k < d.values.size(); ++k)
        rep.record(std::abs(c[k] - d.values[k]), {{"b", b}, {"t", t}, {"x", axes[0][k]}});
    }
  });
}

/// A (b, t, x) triple for the sampler law check.
struct SamplerCase {
  double b, t, x;
};

/// sup_y |F_n(y) - F(y)| for the empirical CDF of nonnegative `ys` against
/// `cdf`, evaluated at every distinct sample (an atom may sit at 0). F is the
/// law of the sample as a double: subnormal values carry rounded mass.
inline double ks_distance(std::vector<double> ys, const std::function<double(double)>& cdf, unsigned workers = 0) {
  if (ys.empty()) throw DomainError("ks_distance: no samples");
  std::sort(ys.begin(), ys.end());
  std::vector<double> f(ys.size());
  parallel_for(
      ys.size(), [&](std::size_t i) { f[i] = (i > 0 && ys[i] == ys[i - 1]) ? -1.0 : cdf(ys[i]); }, workers);
  const double n = static_cast<double>(ys.size());
  double d = 0.0;
  for (std::size_t i = 0; i < ys.size();) {
    std::size_t j = i;
    while (j < ys.size() && ys[j] == ys[i]) ++j;
    // F_n jumps from i/n to j/n at ys[i]. F is continuous away from 0, but
    // samples below the normal range are rounded onto subnormals and stack
    // there, so their left limit is F at the preceding double.
    double left = f[i];
    if (ys[i] == 0.0) left = 0.0;
    else if (ys[i] < std::numeric_limits<double>::min()) left = cdf(std::nextafter(ys[i], 0.0));
    d = std::max({d, std::abs(f[i] - static_cast<double>(j) / n), std::abs(left - static_cast<double>(i) / n)});
    i = j;
  }
  return d;
}

/// KS distance of n exact draws against the quadrature CDF for every case,
/// plus the atom frequency against e^{-x/t} (3 standard errors) when b = 0.
inline IdentityReport check_sampler_law(const std::vector<SamplerCase>& cases, std::size_t n = 100000,
                                        std::uint64_t seed = 1, double tol = 0.01, unsigned workers = 0) {
  return detail::guarded("sampler_law", tol, [&](IdentityReport& rep) {
    nlohmann::json atoms = nlohmann::json::array();
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto [b, t, x] = cases[c];
      RngStream rng(seed, c);
      std::vector<double> ys(n);
      std::size_t zeros = 0;
      for (auto& y : ys) {
        y = sample_transition(b, t, x, rng);
        zeros += y == 0.0;
      }
      const double ks = ks_distance(ys, [b = b, t = t, x = x](double y) { return transition_cdf(b, t, x, y); }, workers);
      rep.record(ks, {{"b", b}, {"t", t}, {"x", x}, {"n", n}});
      if (b == 0.0) {
        const double p = std::exp(-x / t), freq = static_cast<double>(zeros) / static_cast<double>(n);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        const double z = se > 0.0 ? (freq - p) / se : (freq == p ? 0.0 : std::numeric_limits<double>::infinity());
        atoms.push_back({{"t", t}, {"x", x}, {"frequency", freq}, {"expected", p}, {"z", z}});
        if (!(std::abs(z) <= 3.0)) rep.message = "atom frequency outside 3 standard errors";
      }
    }
    rep.extra["atoms"] = atoms;
  });
}

struct DuhamelOrderReport {
  double b = 0.0, t = 0.0;
  std::vector<double> steps, residuals, orders;
  double min_order = 0.0;
  double required = 1.8;
  bool pass = false;
  std::string message;
};

/// Residual sup |(d_t - L_b) u - g| of the Duhamel solution at interior points,
/// with centred differences of step h in space and time, for h, h/2, h/4.
/// The exact residual vanishes; what remains is the O(h^2) difference error.
inline DuhamelOrderReport check_duhamel_order(double b, double t = 1.0, double h0 = 0.04, int levels = 3,
                                              double required = 1.8, unsigned workers = 0) {
  DuhamelOrderReport rep;
  rep.b = b;
  rep.t = t;
  rep.required = required;
  try {
    auto g = [](const std::vector<double>& p, double s) { return std::exp(-p[0]) * (1.0 + s); };
    const std::vector<double> centres{0.5, 1.0, 1.5, 2.0};
    const ModelSpec spec{{b}, 0};
    DuhamelOptions opt;
    opt.cauchy.workers = workers;
    for (int l = 0; l < levels; ++l) {
      const double h = h0 / std::pow(2.0, l);
      const auto ax = detail::stencil_axis(centres, h, 1);
      const auto um = apply_duhamel(spec, g, t - h, 4, Axes{ax}, opt);
      const auto u0 = apply_duhamel(spec, g, t, 4, Axes{ax}, opt);
      const auto up = apply_duhamel(spec, g, t + h, 4, Axes{ax}, opt);
      double res = 0.0;
      for (double c : centres) {
        const std::size_t i = detail::nearest(ax, c), il = detail::nearest(ax, c - h), ir = detail::nearest(ax, c + h);
        const double dt = (up.values[i] - um.values[i]).real() / (2.0 * h);
        const double v0 = u0.values[i].real(), vl = u0.values[il].real(), vr = u0.values[ir].real();
        const double Lu = c * (vr - 2.0 * v0 + vl) / (h * h) + b * (vr - vl) / (2.0 * h);
        res = std::max(res, std::abs(dt - Lu - g({c}, t)));
      }
      rep.steps.push_back(h);
      rep.residuals.push_back(res);
    }
    rep.min_order = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l < rep.residuals.size(); ++l) {
      const double p = std::log2(rep.residuals[l - 1] / rep.residuals[l]);
      rep.orders.push_back(p);
      rep.min_order = std::min(rep.min_order, p);
    }
    rep.pass = std::isfinite(rep.min_order) && rep.min_order >= required;
  } catch (const std::exception& e) {
    rep.message = e.what();
    rep.pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Maximum principle

/// A real-time solve reduced to what the maximum principle needs.
struct SolvedProblem {
  enum class Kind { homogeneous, constant, nonpositive_source };
  std::string name;
  Kind kind = Kind::homogeneous;
  double sup_f = 0.0, inf_f = 0.0;
  std::vector<double> values;  // every sampled space-time value
};

struct MaxPrincipleEntry {
  std::string name;
  double sup_f = 0.0, inf_f = 0.0, sup_v = 0.0, inf_v = 0.0;
  double excess = 0.0;  // amount by which the bound is violated, <= 0 when it holds
  bool pass = false;
};

struct MaxPrincipleReport {
  std::vector<MaxPrincipleEntry> entries;
  double tolerance = 1e-8;
  bool pass = false;
  std::string message;
};

/// Homogeneous: inf f - tol <= v <= sup f + tol. Constant data: |v - f| <= tol.
/// Source g <= 0 with zero data: u <= tol.
inline MaxPrincipleReport check_max_principle(const std::vector<SolvedProblem>& problems, double tol = 1e-8) {
  MaxPrincipleReport rep;
  rep.tolerance = tol;
  rep.pass = !problems.empty();
  for (const auto& p : problems) {
    MaxPrincipleEntry e;
    e.name = p.name;
    e.sup_f = p.sup_f;
    e.inf_f = p.inf_f;
    e.sup_v = -std::numeric_limits<double>::infinity();
    e.inf_v = std::numeric_limits<double>::infinity();
    bool finite = !p.values.empty();
    for (double v : p.values) {
      finite = finite && std::isfinite(v);
      e.sup_v = std::max(e.sup_v, v);
      e.inf_v = std::min(e.inf_v, v);
    }
    switch (p.kind) {
      case SolvedProblem::Kind::homogeneous:
        e.excess = std::max(e.sup_v - p.sup_f, p.inf_f - e.inf_v);
        break;
      case SolvedProblem::Kind::constant:
        e.excess = std::max(std::abs(e.sup_v - p.sup_f), std::abs(e.inf_v - p.sup_f));
        break;
      case SolvedProblem::Kind::nonpositive_source:
        e.excess = e.sup_v;
        break;
    }
    e.pass = finite && e.excess <= tol;
    rep.pass = rep.pass && e.pass;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

/// Real-time solves covering the model Cauchy problem (with and without
/// boundary atoms, one and two dimensions), the Duhamel sign check and the
/// parametrix stepper.
inline std::vector<SolvedProblem> standard_solve_suite(unsigned workers = 0) {
  std::vector<SolvedProblem> out;
  const std::vector<double> times{0.05, 0.25, 1.0, 4.0};
  auto sq_axis = [](double hi, int n) {
    auto s = linspace(0.0, std::sqrt(hi), static_cast<std::size_t>(n));
    for (auto& v : s) v *= v;
    return s;
  };
  auto sinbump = [](double x) { return x < std::numbers::pi ? std::sin(x) : 0.0; };
  CauchyOptions copt;
  copt.workers = workers;
  // Panel edges at the kink of the bump keep the refinement estimate spectral.
  copt.rule.data_scale = 1.0;
  copt.rule.support_hi = std::numbers::pi;

  auto cauchy_1d = [&](const std::string& name, double b, auto f, SolvedProblem::Kind kind, double supf,
                       double inff) {
    SolvedProblem p{name, kind, supf, inff, {}};
    const Axes axes{sq_axis(60.0, 61)};
    for (double t : times) {
      auto v = apply_cauchy(ModelSpec{{b}, 0}, SectorTime::real(t), f, axes, copt);
      for (const auto& c : v.values) p.values.push_back(c.real());
    }
    out.push_back(std::move(p));
  };
  for (double b : {0.0, 0.5, 2.0}) {
    std::ostringstream n;
    n << "cauchy_sin_bump_b" << b;
    cauchy_1d(n.str(), b, [&](const std::vector<double>& p) { return sinbump(p[0]); },
              SolvedProblem::Kind::homogeneous, 1.0, 0.0);
  }
  cauchy_1d("cauchy_signed_b0.25", 0.25, [](const std::vector<double>& p) { return std::cos(p[0]) * std::exp(-0.1 * p[0]); },
            SolvedProblem::Kind::homogeneous, 1.0, -std::exp(-0.1 * std::numbers::pi));
  cauchy_1d("cauchy_constant_b0.5", 0.5, [](const std::vector<double>&) { return 1.0; }, SolvedProblem::Kind::constant,
            1.0, 1.0);
  cauchy_1d("cauchy_constant_b0", 0.0, [](const std::vector<double>&) { return 1.0; }, SolvedProblem::Kind::constant,
            1.0, 1.0);
  {
    SolvedProblem p{"cauchy_2d_b0.5_m1", SolvedProblem::Kind::homogeneous, 1.0, 0.0, {}};
    const Axes axes{sq_axis(40.0, 21), linspace(-6.0, 6.0, 25)};
    auto f = [&](const std::vector<double>& q) { return sinbump(q[0]) * std::exp(-q[1] * q[1]); };
    for (double t : {0.25, 1.0}) {
      auto v = apply_cauchy(ModelSpec{{0.5}, 1}, SectorTime::real(t), f, axes, copt);
      for (const auto& c : v.values) p.values.push_back(c.real());
    }
    out.push_back(std::move(p));
  }
  {
    SolvedProblem p{"cauchy_2d_b0_b1", SolvedProblem::Kind::homogeneous, 1.0, 0.0, {}};
    const Axes axes{sq_axis(40.0, 21), sq_axis(40.0, 21)};
    auto f = [&](const std::vector<double>& q) { return sinbump(q[0]) * sinbump(q[1]); };
    for (double t : {0.25, 1.0}) {
      auto v = apply_cauchy(ModelSpec{{0.0, 1.0}, 0}, SectorTime::real(t), f, axes, copt);
      for (const auto& c : v.values) p.values.push_back(c.real());
    }
    out.push_back(std::move(p));
  }
  {
    SolvedProblem p{"duhamel_nonpositive_source_b0.5", SolvedProblem::Kind::nonpositive_source, 0.0, 0.0, {}};
    DuhamelOptions dopt;
    dopt.cauchy.workers = workers;
    auto g = [&](const std::vector<double>& q, double s) { return -sinbump(q[0]) * (1.0 + s); };
    const Axes axes{sq_axis(60.0, 41)};
    for (double t : {0.25, 1.0}) {
      auto u = apply_duhamel(ModelSpec{{0.5}, 0}, g, t, 4, axes, dopt);
      for (const auto& c : u.values) p.values.push_back(c.real());
    }
    out.push_back(std::move(p));
  }
  auto wf = [&](const std::string& name, const KimuraOp1D& op, auto f, double supf, double inff) {
    SolvedProblem p{name, SolvedProblem::Kind::homogeneous, supf, inff, {}};
    WfStepperOptions o;
    o.workers = workers;
    o.nodes = 100;
    for (double t : {0.1, 0.5}) {
      auto v = solve_wf_parametrix(op, f, t, 2e-3, 0.1, o);
      p.values.insert(p.values.end(), v.values.begin(), v.values.end());
    }
    out.push_back(std::move(p));
  };
  wf("wf_neutral_bump", KimuraOp1D::neutral(), [](double x) { return std::sin(std::numbers::pi * x); }, 1.0, 0.0);
  wf("wf_b0.5_b0.5_step", KimuraOp1D::wright_fisher(0.5, 0.5), [](double x) { return x < 0.4 ? 1.0 : 0.0; }, 1.0, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Hoelder propagation

struct HolderPropagationReport {
  double b = 0.0, gamma = 0.0;
  std::string data;
  double norm_f = 0.0;
  double ratio = 0.0;         // sup_t ||v(t)|| / ||f|| on the refined grid
  double ratio_coarse = 0.0;  // same on the base grid
  double refinement = 0.0;    // ratio / ratio_coarse
  std::vector<double> duhamel_T, duhamel_ratio;
  bool linear_growth = true;
  bool pass = false;
  std::string message;
};

struct HolderPropagationOptions {
  std::vector<double> times{0.05, 0.25, 0.5, 1.0};  // sup over t in (0, T], T = 1
  std::vector<double> duhamel_T{0.5, 1.0, 2.0};
  int nodes = 81;            // base grid, uniform in sqrt(x) on [0, x_max]
  double x_max = 36.0;
  double max_refinement = 1.05;
  double slope_slack = 1.05;  // secant slopes in T may not increase beyond this factor
  KernelRuleOptions rule;     // place support_lo/support_hi at kinks of f
  unsigned workers = 0;
};

/// ||e^{tL_b} f||_{WF,0,gamma} / ||f||_{WF,0,gamma} over t in `times`, on a
/// base grid and on a grid of twice the density; the Duhamel solution with
/// source f at T in `duhamel_T` gives the growth in T.
template <class F>
HolderPropagationReport check_holder_propagation(double b, double gamma, F f, std::string data_name,
                                                 const HolderPropagationOptions& opt = {}) {
  HolderPropagationReport rep;
  rep.b = b;
  rep.gamma = gamma;
  rep.data = std::move(data_name);
  try {
    const ModelSpec spec{{b}, 0};
    auto axis = [&](int n) {
      auto s = linspace(0.0, std::sqrt(opt.x_max), static_cast<std::size_t>(n));
      for (auto& v : s) v *= v;
      return s;
    };
    auto fp = [&](const std::vector<double>& p) { return f(p[0]); };
    HolderOptions hopt;
    hopt.workers = opt.workers;
    CauchyOptions copt;
    copt.workers = opt.workers;
    copt.rule = opt.rule;
    auto norm_on = [&](const std::vector<double>& ax, const std::vector<double>& vals) {
      GridFunction<double> g(std::vector<std::vector<double>>{ax});
      g.values = vals;
      return holder_seminorm(g, gamma, hopt).norm();
    };
    auto level = [&](int n, double* nf) {
      const auto ax = axis(n);
      std::vector<double> fv(ax.size());
      for (std::size_t i = 0; i < ax.size(); ++i) fv[i] = f(ax[i]);
      *nf = norm_on(ax, fv);
      double worst = 0.0;
      for (double t : opt.times) {
        auto v = apply_cauchy(spec, SectorTime::real(t), fp, Axes{ax}, copt);
        std::vector<double> re(v.values.size());
        for (std::size_t i = 0; i < re.size(); ++i) re[i] = v.values[i].real();
        worst = std::max(worst, norm_on(ax, re));
      }
      return worst / *nf;
    };
    double nf_coarse = 0.0;
    rep.ratio_coarse = level(opt.nodes, &nf_coarse);
    rep.ratio = level(2 * opt.nodes - 1, &rep.norm_f);
    rep.refinement = rep.ratio / rep.ratio_coarse;

    DuhamelOptions dopt;
    dopt.cauchy.workers = opt.workers;
    dopt.cauchy.rule = opt.rule;
    const auto ax = axis(opt.nodes);
    auto g = [&](const std::vector<double>& p, double) { return f(p[0]); };
    for (double T : opt.duhamel_T) {
      auto u = apply_duhamel(spec, g, T, 4, Axes{ax}, dopt);
      std::vector<double> re(u.values.size());
      for (std::size_t i = 0; i < re.size(); ++i) re[i] = u.values[i].real();
      rep.duhamel_T.push_back(T);
      rep.duhamel_ratio.push_back(norm_on(ax, re) / nf_coarse);
    }
    // At most linear: secant slopes of ratio(T) must not increase.
    for (std::size_t i = 2; i < rep.duhamel_T.size(); ++i) {
      const double s0 = (rep.duhamel_ratio[i - 1] - rep.duhamel_ratio[i - 2]) / (rep.duhamel_T[i - 1] - rep.duhamel_T[i - 2]);
      const double s1 = (rep.duhamel_ratio[i] - rep.duhamel_ratio[i - 1]) / (rep.duhamel_T[i] - rep.duhamel_T[i - 1]);
      if (s1 > opt.slope_slack * std::max(s0, 0.0) + 1e-12) rep.linear_growth = false;
    }
    rep.pass = std::isfinite(rep.ratio) && std::abs(rep.refinement - 1.0) <= opt.max_refinement - 1.0 &&
               rep.linear_growth;
  } catch (const std::exception& e) {
    rep.message = e.what();
    rep.pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Records

inline nlohmann::json to_json(const IdentityReport& r) {
  nlohmann::json j{{"kind", "identity"}, {"id", r.check},       {"error", r.error}, {"tolerance", r.tolerance},
                   {"points", r.points}, {"worst", r.worst},     {"pass", r.pass}};
  if (!r.extra.empty()) j["extra"] = r.extra;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

inline nlohmann::json to_json(const EstimateReport& r) {
  nlohmann::json j{{"kind", "estimate"},
                   {"id", r.lemma},
                   {"params", {{"b", r.b}, {"gamma", r.gamma}, {"phi", r.phi}}},
                   {"constant", r.constant},
                   {"constant_coarse", r.constant_coarse},
                   {"ratio", r.ratio},
                   {"points", r.points},
                   {"worst", {{"x", r.worst_x}, {"tau", r.worst_tau}, {"theta", r.worst_theta}}},
                   {"quadrature_ok", r.quadrature_ok},
                   {"diverging", r.diverging},
                   {"pass", r.pass}};
  if (r.decay_rate) j["decay_rate"] = *r.decay_rate;
  if (r.decay_target) j["decay_target"] = *r.decay_target;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

inline nlohmann::json to_json(const DuhamelOrderReport& r) {
  nlohmann::json j{{"kind", "identity"},  {"id", "duhamel_residual_order"}, {"params", {{"b", r.b}, {"t", r.t}}},
                   {"steps", r.steps},    {"residuals", r.residuals},        {"orders", r.orders},
                   {"min_order", r.min_order}, {"required", r.required},     {"pass", r.pass}};
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

inline std::vector<nlohmann::json> to_json(const MaxPrincipleReport& r) {
  std::vector<nlohmann::json> out;
  for (const auto& e : r.entries)
    out.push_back({{"kind", "max_principle"},
                   {"id", e.name},
                   {"sup_f", e.sup_f},
                   {"inf_f", e.inf_f},
                   {"sup_v", e.sup_v},
                   {"inf_v", e.inf_v},
                   {"excess", e.excess},
                   {"tolerance", r.tolerance},
                   {"pass", e.pass}});
  return out;
}

inline nlohmann::json to_json(const HolderPropagationReport& r) {
  nlohmann::json j{{"kind", "holder_propagation"},
                   {"id", "holder_propagation_" + r.data},
                   {"params", {{"b", r.b}, {"gamma", r.gamma}}},
                   {"norm_f", r.norm_f},
                   {"ratio", r.ratio},
                   {"ratio_coarse", r.ratio_coarse},
                   {"refinement", r.refinement},
                   {"duhamel_T", r.duhamel_T},
                   {"duhamel_ratio", r.duhamel_ratio},
                   {"linear_growth", r.linear_growth},
                   {"pass", r.pass}};
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

/// %.17g: round-trips every double.
inline std::string fmt17(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

/// One JSON document per line; nlohmann prints doubles in shortest
/// round-trip form.
inline void write_jsonl(std::ostream& os, const std::vector<nlohmann::json>& records) {
  for (const auto& r : records) os << r.dump() << '\n';
}

/// Summary table: kind,id,params,value,threshold,ratio,pass.
inline void write_summary_csv(std::ostream& os, const std::vector<nlohmann::json>& records) {
  os << "kind,id,params,value,threshold,ratio,pass\n";
  auto num = [](const nlohmann::json& j, const char* k) -> std::string {
    return j.contains(k) && j[k].is_number() ? fmt17(j[k].get<double>()) : std::string();
  };
  for (const auto& r : records) {
    std::string params;
    if (r.contains("params"))
      for (const auto& [k, v] : r["params"].items()) {
        if (!params.empty()) params += ';';
        params += k + "=" + (v.is_number() ? fmt17(v.get<double>()) : v.dump());
      }
    const std::string kind = r.value("kind", "");
    std::string value, threshold, ratio;
    if (kind == "estimate") {
      value = num(r, "constant");
      ratio = num(r, "ratio");
    } else if (kind == "max_principle") {
      value = num(r, "excess");
      threshold = num(r, "tolerance");
    } else if (kind == "holder_propagation") {
      value = num(r, "ratio");
      ratio = num(r, "refinement");
    } else if (r.contains("min_order")) {
      value = num(r, "min_order");
      threshold = num(r, "required");
    } else {
      value = num(r, "error");
      threshold = num(r, "tolerance");
    }
    os << kind << ',' << r.value("id", "") << ',' << params << ',' << value << ',' << threshold << ',' << ratio << ','
       << (r.value("pass", false) ? "true" : "false") << '\n';
  }
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
  RegistryOptions registry;
  EstimateOptions estimate;
  unsigned workers = 0;
};

inline std::vector<nlohmann::json> run_identities_suite(unsigned workers = 0) {
  std::vector<nlohmann::json> out;
  out.push_back(to_json(check_mass({0.0, 1e-3, 0.1, 0.5, 1.0, 2.5}, {0.01, 0.1, 1.0, 10.0}, {0.0, 0.01, 1.0, 10.0},
                                   1e-8, workers)));
  out.push_back(to_json(check_chapman_kolmogorov({0.3, 1.0}, {{0.1, 0.2}, {0.5, 0.5}}, {0.1, 0.5, 1.0, 2.0, 4.0},
                                                 {0.1, 0.5, 1.0, 2.0, 4.0}, 1e-6, workers)));
  out.push_back(to_json(check_psi_branches({0.1, 0.5, 1.0, 2.5})));
  for (double b : {0.3, 0.5, 2.0}) out.push_back(to_json(check_indicial(b)));
  out.push_back(to_json(check_resolvent_residual(0.5, {1.0, cplx(1.0, 1.0), std::polar(5.0, 2.0 * std::numbers::pi / 3)},
                                                 1e-5, 0.01, workers)));
  out.push_back(to_json(check_contour_vs_direct(0.5, {0.5, 2.0}, 1e-4, workers)));
  out.push_back(to_json(check_duhamel_order(0.5, 1.0, 0.04, 3, 1.8, workers)));
  return out;
}

inline std::vector<nlohmann::json> run_estimates_suite(const SuiteOptions& opt = {}) {
  std::vector<nlohmann::json> out;
  for (const auto& r : run_estimates(estimate_registry(opt.registry), opt.estimate, opt.workers))
    out.push_back(to_json(r));
  return out;
}

inline std::vector<nlohmann::json> run_maxprinciple_suite(unsigned workers = 0) {
  return to_json(check_max_principle(standard_solve_suite(workers)));
}

inline std::vector<nlohmann::json> run_holder_suite(unsigned workers = 0) {
  std::vector<nlohmann::json> out;
  HolderPropagationOptions opt;
  opt.workers = workers;
  HolderPropagationOptions kinked = opt;
  kinked.rule.data_scale = 0.25;
  kinked.rule.support_hi = 1.0;
  for (double b : {0.0, 0.25, 1.0}) {
    out.push_back(to_json(check_holder_propagation(
        b, 0.5, [](double x) { return std::min(std::sqrt(x), 1.0); }, "min_sqrt_1", kinked)));
    out.push_back(to_json(check_holder_propagation(b, 0.5, [](double) { return 1.0; }, "constant", opt)));
  }
  return out;
}

inline bool all_pass(const std::vector<nlohmann::json>& records) {
  return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.value("pass", false); });
}

}  // namespace kimura
