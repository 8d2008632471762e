#pragma once

// Exact sampling of the model processes and Monte Carlo for 1-D Kimura
// diffusions.
//
// The b-model transition law is the Poisson mixture of gammas
//   J ~ Poisson(x/t),  Y = t * Gamma(J + b),
// with Y = 0 when J + b = 0. A stream is a (seed, stream id) pair fed through
// std::seed_seq into mt19937_64; equal pairs give equal draws on every
// platform because the variate algorithms below avoid std distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/kimura_op.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"

namespace kimura {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6b696du};
    eng_.seed(seq);
  }

  /// Uniform on the open interval (0, 1): 53 random bits, offset by half an ulp.
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal, Marsaglia polar method.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    return u * m;
  }

  /// Gamma(shape, 1) for shape > 0. Marsaglia-Tsang squeeze for shape >= 1;
  /// below 1 the boost G(shape) = G(shape + 1) U^{1/shape}, done in logs and
  /// floored at the smallest subnormal so that a positive shape never yields 0.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw DomainError("RngStream::gamma: shape must be positive");
    if (shape < 1.0) {
      const double lg = std::log(gamma(shape + 1.0)) + std::log(uniform()) / shape;
      return std::max(std::exp(lg), std::numeric_limits<double>::denorm_min());
    }
    const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z, v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Poisson(mean): inversion below mean 10, Hormann's PTRS rejection above.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("RngStream::poisson: mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) {
      const double u = uniform();
      double p = std::exp(-mean), cdf = p;
      std::uint64_t k = 0;
      while (u > cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
        if (p < 1e-300 && k > mean) break;  // u within rounding of 1
      }
      return k;
    }
    const double slam = std::sqrt(mean), loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam, a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4), vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5, v = uniform();
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -mean + k * loglam - std::lgamma(k + 1.0))
        return static_cast<std::uint64_t>(k);
    }
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

/// One exact draw from k^b_t(x, .) (atom at 0 included when b = 0).
inline double sample_transition(double b, double t, double x, RngStream& rng) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("sample_transition: b must be finite and >= 0");
  if (!(t > 0.0)) throw DomainError("sample_transition: t must be positive");
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("sample_transition: x must be finite and >= 0");
  const double shape = static_cast<double>(rng.poisson(x / t)) + b;
  if (shape == 0.0) return 0.0;
  // Floor after scaling: t times the smallest subnormal may round to 0.
  return std::max(t * rng.gamma(shape), std::numeric_limits<double>::denorm_min());
}

/// Path of the model process in R_+^n x R^m at the given increasing times
/// (the first may be 0, which returns x0). Coordinates are independent.
inline std::vector<std::vector<double>> sample_path_model(const ModelSpec& spec, const std::vector<double>& times,
                                                          const std::vector<double>& x0, RngStream& rng) {
  spec.validate();
  if (x0.size() != spec.dim()) throw DimensionError("sample_path_model: x0 dimension mismatch");
  for (std::size_t i = 0; i < spec.n(); ++i)
    if (!(x0[i] >= 0.0)) throw DomainError("sample_path_model: x0 must lie in the closed orthant");
  std::vector<std::vector<double>> path;
  std::vector<double> x = x0;
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev) || (t == prev && !path.empty())) throw DomainError("sample_path_model: times must increase from 0");
    const double dt = t - prev;
    if (dt > 0.0) {
      for (std::size_t i = 0; i < spec.n(); ++i) x[i] = sample_transition(spec.b[i], dt, x[i], rng);
      for (std::size_t j = spec.n(); j < spec.dim(); ++j) x[j] += std::sqrt(2.0 * dt) * rng.normal();
    }
    path.push_back(x);
    prev = t;
  }
  return path;
}

/// One-coordinate form: values of the b-model process at the given times.
inline std::vector<double> sample_path_model(double b, const std::vector<double>& times, double x0, RngStream& rng) {
  const auto p = sample_path_model(ModelSpec{{b}, 0}, times, std::vector<double>{x0}, rng);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i][0];
  return out;
}

enum class PathFate { unabsorbed, at_zero, at_one };

struct WfPathResult {
  PathFate fate = PathFate::unabsorbed;
  double absorption_time = std::numeric_limits<double>::quiet_NaN();
  double final_state = 0.0;
  std::vector<double> trajectory;  // states after each step, when recorded
};

struct WfPathOptions {
  double delta = 0.1;   // collar half-width; the collar models apply on [0, delta] and [1 - delta, 1]
  bool record = false;
  int max_redraws = 64; // draws leaving the local chart are redrawn this often before failing
};

/// Euler-type path sampler for a 1-D Kimura diffusion. Near an endpoint a
/// step is an exact draw of the frozen model xt d^2 + (b + kappa xt) d in the
/// Feller coordinate xt; elsewhere a Gaussian step in the Feller coordinate
/// zeta. Absorption happens only through the model atom, i.e. only at an
/// endpoint whose frozen weight is 0.
class WfPathSampler {
 public:
  WfPathSampler(const KimuraOp1D& op, double dt, const WfPathOptions& opt = {})
      : dt_(dt), opt_(opt), nf0_(feller_normal_form(op, Endpoint::zero)), nf1_(feller_normal_form(op, Endpoint::one)) {
    op.validate();
    if (!(dt > 0.0)) throw DomainError("WfPathSampler: dt must be positive");
    if (!(opt.delta > 0.0 && opt.delta <= 0.25)) throw DomainError("WfPathSampler: delta must lie in (0, 0.25]");
    if (dt > opt.delta * opt.delta) throw StepSizeError("WfPathSampler: dt exceeds delta^2");
  }

  /// One step from x; absorption is reported through fate.
  double step(double x, RngStream& rng, PathFate& fate) const {
    if (x <= opt_.delta) return collar(nf0_, x, rng, fate);
    if (x >= 1.0 - opt_.delta) return collar(nf1_, x, rng, fate);
    const FellerCoordinate& c = *nf0_.coordinate;
    const double z = c.zeta(x), mean = z + c.drift_zeta(x) * dt_, sd = std::sqrt(2.0 * dt_);
    for (int k = 0; k < opt_.max_redraws; ++k) {
      const double zn = mean + sd * rng.normal();
      if (zn > 0.0 && zn < c.zeta_max()) return c.x_of_zeta(zn);
    }
    throw ConvergenceError("WfPathSampler: interior step keeps leaving [0,1]; reduce dt");
  }

  WfPathResult run(double x0, double horizon, RngStream& rng) const {
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("WfPathSampler::run: x0 must lie in [0,1]");
    WfPathResult r;
    double x = x0;
    const long steps = static_cast<long>(std::ceil(horizon / dt_ - 1e-9));
    if ((x0 == 0.0 && nf0_.weight == 0.0) || (x0 == 1.0 && nf1_.weight == 0.0)) {
      r.fate = x0 == 0.0 ? PathFate::at_zero : PathFate::at_one;
      r.absorption_time = 0.0;
      r.final_state = x0;
      return r;
    }
    for (long k = 0; k < steps; ++k) {
      PathFate fate = PathFate::unabsorbed;
      x = step(x, rng, fate);
      if (opt_.record) r.trajectory.push_back(x);
      if (fate != PathFate::unabsorbed) {
        r.fate = fate;
        r.absorption_time = static_cast<double>(k + 1) * dt_;
        break;
      }
    }
    r.final_state = x;
    return r;
  }

  double dt() const { return dt_; }

 private:
  double collar(const FellerNormalForm& nf, double x, RngStream& rng, PathFate& fate) const {
    const FellerCoordinate& c = *nf.coordinate;
    const double xl = nf.endpoint == Endpoint::zero ? x : 1.0 - x;
    const double b0 = nf.weight;
    // Chord slope of the true drift B(xt) against the frozen b0, as in the stepper.
    const double probe = std::max(xl, 1e-6);
    const double xt_probe = c.xt(probe);
    const double kappa = (c.drift_xt(probe) - b0) / xt_probe;
    const double xt = c.xt(xl);
    const double e = std::exp(kappa * dt_);
    const double s = std::abs(kappa * dt_) < 1e-12 ? dt_ : (e - 1.0) / kappa;
    const double xt_max = 0.25 * c.zeta_max() * c.zeta_max();
    for (int k = 0; k < opt_.max_redraws; ++k) {
      const double y = sample_transition(b0, s, xt * e, rng);
      if (y == 0.0) {
        fate = nf.endpoint == Endpoint::zero ? PathFate::at_zero : PathFate::at_one;
        return nf.endpoint == Endpoint::zero ? 0.0 : 1.0;
      }
      if (y < xt_max) {
        const double u = c.x_of_xt(y);
        return nf.endpoint == Endpoint::zero ? u : 1.0 - u;
      }
    }
    throw ConvergenceError("WfPathSampler: collar step keeps leaving [0,1]; reduce dt");
  }

  double dt_;
  WfPathOptions opt_;
  FellerNormalForm nf0_, nf1_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::size_t unabsorbed = 0;
  bool flagged = false;  // more than 1% of paths unabsorbed by the horizon
};

struct McOptions {
  double dt = 5e-4;
  double horizon = 20.0;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  WfPathOptions path;
};

namespace detail {

// Path i always uses stream i, so results do not depend on the worker count.
inline std::vector<WfPathResult> run_paths(const KimuraOp1D& op, double x0, std::size_t n, const McOptions& opt) {
  if (n == 0) throw DomainError("Monte Carlo: need at least one path");
  WfPathOptions po = opt.path;
  po.record = false;
  const WfPathSampler sampler(op, opt.dt, po);
  std::vector<WfPathResult> out(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        RngStream rng(opt.seed, i);
        out[i] = sampler.run(x0, opt.horizon, rng);
      },
      opt.workers);
  return out;
}

inline McEstimate summarize(const std::vector<double>& v, std::size_t unabsorbed, std::size_t n) {
  McEstimate e;
  e.n = n;
  e.unabsorbed = unabsorbed;
  e.flagged = static_cast<double>(unabsorbed) > 0.01 * static_cast<double>(n);
  if (v.size() < 2) throw DomainError("Monte Carlo: fewer than two usable paths");
  double m = 0.0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v) ss += (a - m) * (a - m);
  e.mean = m;
  e.std_error = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  return e;
}

}  // namespace detail

/// P(absorbed at 1 before the horizon); unabsorbed paths count as 0.
inline McEstimate estimate_fixation(const KimuraOp1D& op, double x0, std::size_t n, const McOptions& opt = {}) {
  const auto paths = detail::run_paths(op, x0, n, opt);
  std::vector<double> v(n);
  std::size_t un = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = paths[i].fate == PathFate::at_one ? 1.0 : 0.0;
    if (paths[i].fate == PathFate::unabsorbed) ++un;
  }
  return detail::summarize(v, un, n);
}

/// Mean absorption time over the absorbed paths; unabsorbed ones are reported.
inline McEstimate estimate_absorption_time(const KimuraOp1D& op, double x0, std::size_t n, const McOptions& opt = {}) {
  const auto paths = detail::run_paths(op, x0, n, opt);
  std::vector<double> v;
  v.reserve(n);
  std::size_t un = 0;
  for (const auto& p : paths) {
    if (p.fate == PathFate::unabsorbed) ++un;
    else v.push_back(p.absorption_time);
  }
  return detail::summarize(v, un, n);
}

}  // namespace kimura
