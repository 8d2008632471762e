#pragma once

// One-dimensional Kimura operators  L = a(x) x(1-x) d^2 + drift(x) d  on [0,1]
// and their Feller normal form near an endpoint.
//
// With x = sin^2(phi) and zeta(phi) = int_0^phi 2/sqrt(a(sin^2 s)) ds the
// leading part becomes d^2_zeta; in xt = zeta^2/4 it becomes xt d^2_xt and
//   L = xt d^2_xt + B(xt) d_xt,   B = 1/2 + zeta (2 drift - A')/(4 sqrt A),
// A = a x(1-x). B(0) = drift(0)/a(0) is the model weight at the endpoint.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "kimura/errors.hpp"
#include "kimura/quadrature.hpp"

namespace kimura {

struct KimuraOp1D {
  std::function<double(double)> a;      // positive on [0,1]
  std::function<double(double)> drift;  // drift(0) >= 0 >= drift(1)
  std::function<double(double)> a_prime;  // optional; finite differences otherwise
  std::optional<double> a_constant;        // set when a is constant, enabling closed-form coordinates

  /// x(1-x) d^2 + [b0(1-x) - b1 x + s x(1-x)] d
  static KimuraOp1D wright_fisher(double b0, double b1, double s = 0.0) {
    if (b0 < 0.0 || b1 < 0.0) throw DomainError("wright_fisher: b0, b1 must be nonnegative");
    return {[](double) { return 1.0; },
            [b0, b1, s](double x) { return b0 * (1.0 - x) - b1 * x + s * x * (1.0 - x); },
            [](double) { return 0.0; },
            1.0};
  }

  static KimuraOp1D neutral() { return wright_fisher(0.0, 0.0, 0.0); }

  double a_at(double x) const { return a(x); }
  double da(double x) const {
    if (a_prime) return a_prime(x);
    const double h = 1e-6;
    const double lo = std::max(0.0, x - h), hi = std::min(1.0, x + h);
    return (a(hi) - a(lo)) / (hi - lo);
  }

  /// Generator applied to a function with known first and second derivatives.
  double apply(double x, double f1, double f2) const { return a(x) * x * (1.0 - x) * f2 + drift(x) * f1; }

  /// Reflection x -> 1 - x, which exchanges the two endpoints.
  KimuraOp1D mirrored() const {
    auto aa = a;
    auto dd = drift;
    auto ap = a_prime;
    KimuraOp1D m{[aa](double x) { return aa(1.0 - x); }, [dd](double x) { return -dd(1.0 - x); }, {}, a_constant};
    if (ap) m.a_prime = [ap](double x) { return -ap(1.0 - x); };
    return m;
  }

  void validate(int samples = 257) const {
    if (!a || !drift) throw DomainError("KimuraOp1D: coefficients not set");
    for (int i = 0; i < samples; ++i) {
      const double x = static_cast<double>(i) / (samples - 1);
      const double av = a(x);
      if (!(av > 0.0) || !std::isfinite(av)) throw InvariantError("KimuraOp1D: a must be positive and finite on [0,1]");
      if (!std::isfinite(drift(x))) throw InvariantError("KimuraOp1D: drift must be finite on [0,1]");
    }
    if (drift(0.0) < 0.0 || drift(1.0) > 0.0) throw InvariantError("KimuraOp1D: drift must point inward at both ends");
  }
};

/// Desingularizing coordinate zeta(x) = int_0^x dx'/sqrt(A(x')) of an operator,
/// tabulated in phi = arcsin sqrt x and inverted by Newton iteration.
class FellerCoordinate {
 public:
  explicit FellerCoordinate(KimuraOp1D op, int panels = 512) : op_(std::move(op)) {
    if (op_.a_constant) {
      if (!(*op_.a_constant > 0.0)) throw InvariantError("FellerCoordinate: a must be positive");
      scale_ = 2.0 / std::sqrt(*op_.a_constant);  // zeta = scale * phi
    }
    const double half_pi = std::numbers::pi / 2;
    phi_.resize(panels + 1);
    zeta_.resize(panels + 1);
    const auto& gl = gauss_legendre<10>();
    zeta_[0] = 0.0;
    for (int k = 0; k <= panels; ++k) phi_[k] = half_pi * k / panels;
    for (int k = 0; k < panels; ++k) {
      const double a0 = phi_[k], a1 = phi_[k + 1];
      double s = 0.0;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double p = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * gl.nodes[i];
        s += 0.5 * (a1 - a0) * gl.weights[i] * dzeta_dphi(p);
      }
      zeta_[k + 1] = zeta_[k] + s;
    }
  }

  double zeta_max() const { return zeta_.back(); }

  double zeta_of_phi(double phi) const {
    phi = std::clamp(phi, 0.0, std::numbers::pi / 2);
    if (scale_ > 0.0) return scale_ * phi;
    const std::size_t n = phi_.size() - 1;
    std::size_t k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(phi / phi_[1]));
    const auto& gl = gauss_legendre<10>();
    const double a0 = phi_[k];
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double p = 0.5 * (a0 + phi) + 0.5 * (phi - a0) * gl.nodes[i];
      s += 0.5 * (phi - a0) * gl.weights[i] * dzeta_dphi(p);
    }
    return zeta_[k] + s;
  }

  double zeta(double x) const { return zeta_of_phi(std::asin(std::sqrt(std::clamp(x, 0.0, 1.0)))); }

  /// Inverse map zeta -> x (clamped to [0,1]).
  double x_of_zeta(double z) const {
    if (z <= 0.0) return 0.0;
    if (z >= zeta_.back()) return 1.0;
    if (scale_ > 0.0) {
      const double sp = std::sin(z / scale_);
      return sp * sp;
    }
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(zeta_.begin(), zeta_.end(), z) - zeta_.begin()) - 1;
    double lo = phi_[k], hi = phi_[k + 1];
    double p = lo + (hi - lo) * (z - zeta_[k]) / (zeta_[k + 1] - zeta_[k]);
    for (int it = 0; it < 50; ++it) {
      const double g = zeta_of_phi(p) - z;
      if (g > 0) hi = p;
      else lo = p;
      double np = p - g / dzeta_dphi(p);
      if (!(np > lo && np < hi)) np = 0.5 * (lo + hi);
      if (std::abs(np - p) < 1e-15) {
        p = np;
        break;
      }
      p = np;
    }
    const double sp = std::sin(p);
    return sp * sp;
  }

  /// xt = zeta^2/4 and its inverse.
  double xt(double x) const {
    const double z = zeta(x);
    return 0.25 * z * z;
  }
  double x_of_xt(double xt) const { return x_of_zeta(2.0 * std::sqrt(std::max(xt, 0.0))); }

  /// Drift of L in the zeta coordinate: (2 drift - A')/(2 sqrt A).
  double drift_zeta(double x) const {
    const double A = op_.a(x) * x * (1.0 - x);
    const double dA = op_.da(x) * x * (1.0 - x) + op_.a(x) * (1.0 - 2.0 * x);
    return (2.0 * op_.drift(x) - dA) / (2.0 * std::sqrt(A));
  }

  /// Drift B(xt) of L in the coordinate xt; the x -> 0 limit is drift(0)/a(0).
  double drift_xt(double x) const {
    if (x <= 0.0) return op_.drift(0.0) / op_.a(0.0);
    return 0.5 + 0.5 * zeta(x) * drift_zeta(x);
  }

  const KimuraOp1D& op() const { return op_; }

 private:
  double dzeta_dphi(double phi) const {
    const double s = std::sin(phi);
    return 2.0 / std::sqrt(op_.a(s * s));
  }

  KimuraOp1D op_;
  double scale_ = 0.0;  // > 0 for constant a
  std::vector<double> phi_, zeta_;
};

enum class Endpoint { zero = 0, one = 1 };

struct FellerNormalForm {
  double weight = 0.0;  // frozen model weight b
  std::shared_ptr<const FellerCoordinate> coordinate;  // coordinate at 0 (of the mirrored op for endpoint 1)
  Endpoint endpoint = Endpoint::zero;

  /// Collar coordinate xt of a point x of [0,1].
  double to_local(double x) const { return coordinate->xt(endpoint == Endpoint::zero ? x : 1.0 - x); }
  double from_local(double xt) const {
    const double u = coordinate->x_of_xt(xt);
    return endpoint == Endpoint::zero ? u : 1.0 - u;
  }
};

/// Weight drift/(a (1-x)) at x = 0 (mirrored at 1) and the local coordinate in
/// which the leading part is xt d^2_xt.
inline FellerNormalForm feller_normal_form(const KimuraOp1D& op, Endpoint end) {
  if (!op.a || !op.drift) throw DomainError("feller_normal_form: coefficients not set");
  const KimuraOp1D local = end == Endpoint::zero ? op : op.mirrored();
  const double a0 = local.a(0.0);
  if (!(a0 > 0.0)) throw InvariantError("feller_normal_form: a must be positive at the endpoint");
  const double w = local.drift(0.0) / a0;
  if (w < 0.0) throw InvariantError("feller_normal_form: negative boundary weight (drift points outward)");
  return {w, std::make_shared<const FellerCoordinate>(local), end};
}

}  // namespace kimura
