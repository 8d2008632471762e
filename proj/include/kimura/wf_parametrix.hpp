#pragma once

// Frozen-coefficient time stepper for 1-D Kimura operators on [0,1].
//
// Each step maps nodal values v_i to  sum_k w_ik v(q_ik)  where (q_ik, w_ik)
// blend three local models with a quintic partition of unity:
//   collar at 0   xt d^2 + (b0 + kappa_i xt) d in the Feller coordinate xt,
//                 kappa_i the chord slope of the true drift B(xt) at the node;
//                 its law from xt_i is k^{b0}_s(xt_i e^{kappa dt}, .),
//                 s = (e^{kappa dt} - 1)/kappa
//   collar at 1   the same for the mirrored operator
//   interior      d^2_zeta + C_i d_zeta frozen at the node: a Gaussian step
// Weights are positive and sum to one; together with a monotone (PCHIP)
// interpolant this gives min v <= v_new <= max v at every step.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/grid.hpp"
#include "kimura/kimura_op.hpp"
#include "kimura/model_kernels.hpp"
#include "kimura/parallel.hpp"
#include "kimura/quadrature.hpp"

namespace kimura {

struct WfStepperOptions {
  int nodes = 200;                 // grid x_i = sin^2(pi i / (2 nodes)), i = 0..nodes
  double local_tol = 2e-2;         // bound on dt * |frozen drift - true drift| over a step's spread
  KernelRuleOptions rule{0.5, 40.0, 1e-10, 4, 12};
  unsigned workers = 0;
};

/// x(phi) = sin^2(phi) nodes, dense near both endpoints.
inline std::vector<double> wf_nodes(int n) {
  if (n < 4) throw DomainError("wf_nodes: need at least 4 intervals");
  std::vector<double> x(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = std::sin(std::numbers::pi * i / (2.0 * n));
    x[i] = s * s;
  }
  x.front() = 0.0;
  x.back() = 1.0;
  return x;
}

/// Quintic smoothstep on [0,1].
inline double smoothstep5(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Weight of the collar at 0: 1 on [0, delta/2], 0 beyond delta.
inline double collar_weight(double x, double delta) { return 1.0 - smoothstep5((x - 0.5 * delta) / (0.5 * delta)); }

class WfParametrixStepper {
 public:
  WfParametrixStepper(const KimuraOp1D& op, double dt, double delta, const WfStepperOptions& opt = {})
      : dt_(dt), delta_(delta), opt_(opt), nodes_(wf_nodes(opt.nodes)) {
    op.validate();
    if (!(dt > 0.0)) throw DomainError("WfParametrixStepper: dt must be positive");
    if (!(delta > 0.0 && delta <= 0.25)) throw DomainError("WfParametrixStepper: delta must lie in (0, 0.25]");
    if (dt > delta * delta) throw StepSizeError("WfParametrixStepper: dt exceeds delta^2");
    nf0_ = feller_normal_form(op, Endpoint::zero);
    nf1_ = feller_normal_form(op, Endpoint::one);
    interior_ = nf0_.coordinate;
    stencils_.resize(nodes_.size());
    parallel_for(nodes_.size(), [&](std::size_t i) { stencils_[i] = build(i); }, opt.workers);
  }

  const std::vector<double>& nodes() const { return nodes_; }
  double dt() const { return dt_; }
  double max_local_error() const {
    double m = 0.0;
    for (const auto& s : stencils_) m = std::max(m, s.local_error);
    return m;
  }

  /// One step on nodal values.
  std::vector<double> step(const std::vector<double>& v) const {
    if (v.size() != nodes_.size()) throw DimensionError("WfParametrixStepper::step: value count mismatch");
    GridFunction<double> g(Axes1{nodes_}, Interpolation::pchip);
    g.values = v;
    std::vector<double> out(v.size());
    parallel_for(
        v.size(),
        [&](std::size_t i) {
          const auto& s = stencils_[i];
          double acc = 0.0;
          std::vector<double> p(1);
          for (std::size_t k = 0; k < s.points.size(); ++k) {
            p[0] = s.points[k];
            acc += s.weights[k] * g.interpolate(p);
          }
          out[i] = acc;
        },
        opt_.workers);
    return out;
  }

 private:
  using Axes1 = std::vector<std::vector<double>>;

  struct Stencil {
    std::vector<double> points, weights;
    double local_error = 0.0;
  };

  // Collar model at one endpoint for the node x (in [0,1] coordinates).
  void add_collar(const FellerNormalForm& nf, double x, double chi, Stencil& st) const {
    const FellerCoordinate& coord = *nf.coordinate;
    const double xl = nf.endpoint == Endpoint::zero ? x : 1.0 - x;  // local [0,1] coordinate
    const double b0 = nf.weight;
    const double probe = xl > 1e-6 ? xl : 1e-6;
    const double xt_probe = coord.xt(probe);
    const double kappa = (coord.drift_xt(probe) - b0) / xt_probe;
    const double xt = coord.xt(xl);
    const double e = std::exp(kappa * dt_);
    const double s = std::abs(kappa * dt_) < 1e-12 ? dt_ : (e - 1.0) / kappa;
    const KernelRule rule = make_kernel_rule(b0, SectorTime::real(s), xt * e, opt_.rule);
    double err = 0.0;
    // Frozen drift error across the step's spread.
    const double spread = 4.0 * std::sqrt(2.0 * (xt + b0 * dt_ + dt_) * dt_) + 4.0 * dt_;
    for (int k = 0; k <= 8; ++k) {
      const double q = std::max(0.0, xt - spread + 2.0 * spread * k / 8.0);
      const double xq = coord.x_of_xt(q);
      if (xq >= 1.0 - 1e-12 || xq <= 0.0) continue;
      err = std::max(err, dt_ * std::abs(coord.drift_xt(xq) - b0 - kappa * q));
    }
    st.local_error = std::max(st.local_error, chi * err);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double w = rule.weights[k].real();
      if (w == 0.0) continue;
      const double u = coord.x_of_xt(rule.nodes[k]);
      st.points.push_back(nf.endpoint == Endpoint::zero ? u : 1.0 - u);
      st.weights.push_back(chi * w);
    }
  }

  void add_interior(double x, double chi, Stencil& st) const {
    const FellerCoordinate& coord = *interior_;
    const double z = coord.zeta(x);
    const double c = coord.drift_zeta(x);
    const double mean = z + c * dt_;
    const double sd = std::sqrt(2.0 * dt_);
    const auto& gl = gauss_legendre<10>();
    const double S = std::sqrt(2.0 * 40.0);  // standard-normal cut at e^{-40}
    const int panels = 16;
    const double w = 2.0 * S / panels;
    double err = 0.0;
    for (int k = 0; k <= 8; ++k) {
      const double zq = z - 4.0 * sd + sd * k;
      const double xq = coord.x_of_zeta(zq);
      if (xq <= 0.0 || xq >= 1.0) continue;
      err = std::max(err, dt_ * std::abs(coord.drift_zeta(xq) - c));
    }
    st.local_error = std::max(st.local_error, chi * err);
    for (int p = 0; p < panels; ++p) {
      const double mid = -S + (p + 0.5) * w;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double s = mid + 0.5 * w * gl.nodes[i];
        const double wt = 0.5 * w * gl.weights[i] * std::exp(-0.5 * s * s) / std::sqrt(2.0 * std::numbers::pi);
        st.points.push_back(coord.x_of_zeta(mean + sd * s));
        st.weights.push_back(chi * wt);
      }
    }
  }

  Stencil build(std::size_t i) const {
    const double x = nodes_[i];
    const double c0 = collar_weight(x, delta_), c1 = collar_weight(1.0 - x, delta_);
    const double ci = std::max(0.0, 1.0 - c0 - c1);
    Stencil st;
    if (c0 > 0.0) add_collar(nf0_, x, c0, st);
    if (c1 > 0.0) add_collar(nf1_, x, c1, st);
    if (ci > 0.0) add_interior(x, ci, st);
    double total = 0.0;
    for (double w : st.weights) total += w;
    for (double& w : st.weights) w /= total;
    if (st.local_error > opt_.local_tol) {
      std::ostringstream msg;
      msg << "solve_wf_parametrix: estimated local error " << st.local_error << " exceeds " << opt_.local_tol
          << " at x=" << x << "; reduce dt";
      throw StepSizeError(msg.str());
    }
    return st;
  }

  double dt_, delta_;
  WfStepperOptions opt_;
  std::vector<double> nodes_;
  FellerNormalForm nf0_, nf1_;
  std::shared_ptr<const FellerCoordinate> interior_;
  std::vector<Stencil> stencils_;
};

/// v(., t) for v_t = L v, v(., 0) = f, marched in steps of at most dt.
template <class F>
GridFunction<double> solve_wf_parametrix(const KimuraOp1D& op, F&& f, double t, double dt, double delta = 0.1,
                                         const WfStepperOptions& opt = {}) {
  if (!(t >= 0.0)) throw DomainError("solve_wf_parametrix: t must be nonnegative");
  const auto nodes = wf_nodes(opt.nodes);
  GridFunction<double> out(std::vector<std::vector<double>>{nodes}, Interpolation::pchip);
  for (std::size_t i = 0; i < nodes.size(); ++i) out.values[i] = f(nodes[i]);
  const long steps = t > 0.0 ? static_cast<long>(std::ceil(t / dt - 1e-9)) : 0;
  if (steps > 0) {
    const double h = t / static_cast<double>(steps);
    WfParametrixStepper stepper(op, h, delta, opt);
    for (long k = 0; k < steps; ++k) out.values = stepper.step(out.values);
    out.metadata["max_local_error"] = std::to_string(stepper.max_local_error());
  }
  out.metadata["operator"] = "wf_parametrix";
  out.metadata["t"] = std::to_string(t);
  out.metadata["steps"] = std::to_string(steps);
  out.metadata["delta"] = std::to_string(delta);
  return out;
}

}  // namespace kimura
