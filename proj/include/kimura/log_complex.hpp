#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace kimura {

/// A complex number stored as (ln|v|, arg v). Exact zero is encoded by
/// log_magnitude == -inf and phase == 0.
struct LogComplex {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  double phase = 0.0;

  static LogComplex zero() { return {}; }

  /// From a complex logarithm; the imaginary part is wrapped into (-pi, pi].
  static LogComplex from_log(std::complex<double> log_value) {
    return {log_value.real(), wrap_phase(log_value.imag())};
  }

  static LogComplex from_value(std::complex<double> v) {
    if (v == std::complex<double>(0.0, 0.0)) return zero();
    return {std::log(std::abs(v)), std::arg(v)};
  }

  bool is_zero() const { return std::isinf(log_magnitude) && log_magnitude < 0; }

  std::complex<double> value() const {
    if (is_zero()) return {0.0, 0.0};
    return std::polar(std::exp(log_magnitude), phase);
  }

  /// Real part of the value; for real-valued results this carries the sign.
  double real() const { return value().real(); }

  double magnitude() const { return is_zero() ? 0.0 : std::exp(log_magnitude); }

  std::complex<double> log() const { return {log_magnitude, phase}; }

  /// Multiply by e^{c}.
  LogComplex scaled(std::complex<double> c) const {
    if (is_zero()) return *this;
    return from_log(log() + c);
  }

  friend LogComplex operator*(const LogComplex& a, const LogComplex& b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return from_log(a.log() + b.log());
  }

  static double wrap_phase(double p) {
    constexpr double pi = std::numbers::pi;
    if (p > -pi && p <= pi) return p;
    p = std::remainder(p, 2.0 * pi);
    if (p <= -pi) p += 2.0 * pi;
    return p;
  }
};

}  // namespace kimura
