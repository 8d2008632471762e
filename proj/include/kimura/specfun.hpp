#pragma once

// The entire function psi_b(z) = sum_j z^j / (j! Gamma(j+b)), evaluated in
// log-magnitude form.
//
// Small |z| uses the power series with compensated summation. Large |z| uses
// psi_b(z) = z^{(1-b)/2} I_{b-1}(2 sqrt z) together with the Hankel expansion
// of I_nu, including the exponentially small companion series that matters
// as |arg z| approaches pi:
//
//   I_nu(w) ~ e^w/sqrt(2 pi w) sum (-1)^k a_k/w^k + c e^{-w}/sqrt(2 pi w) sum a_k/w^k
//
// with c = i e^{i nu pi} (Im w > 0), -i e^{-i nu pi} (Im w < 0) and
// -sin(nu pi) on the real axis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "kimura/errors.hpp"
#include "kimura/log_complex.hpp"

namespace kimura {

/// Branch selection for psi_b.
struct PsiRegime {
  double crossover_radius = 100.0;  // series for |z| <= R, asymptotics above
  int asymptotic_order = 60;        // cap on Hankel terms; optimal truncation stops earlier
  double sector_margin = 0.05;      // alpha: admissible |arg z| <= pi - alpha
};

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma: argument must be positive");
  return boost::math::lgamma(x);
}

/// Coefficient c_{b,k} of z^{-k/2} in psi_b(z) ~ z^{1/4-b/2} e^{2 sqrt z} (1 + sum c_{b,k} z^{-k/2}) / sqrt(4 pi).
inline double psi_asymptotic_coefficient(double b, int k) {
  const double nu = b - 1.0;
  double a = 1.0;
  for (int j = 1; j <= k; ++j) a *= (4.0 * nu * nu - (2.0 * j - 1.0) * (2.0 * j - 1.0)) / (8.0 * j);
  return ((k % 2) ? -a : a) / std::ldexp(1.0, k);
}

namespace detail {

struct NeumaierSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline void check_psi_args(double b, std::complex<double> z, const PsiRegime& regime) {
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("psi_b: weight b must be positive");
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DomainError("psi_b: non-finite argument");
  if (z != std::complex<double>(0.0, 0.0) &&
      std::abs(std::arg(z)) > std::numbers::pi - regime.sector_margin)
    throw SectorError("psi_b: argument outside the sector |arg z| <= pi - alpha");
}

/// ln psi_b(z) by the power series.
inline std::complex<double> log_psi_series(double b, std::complex<double> z) {
  const double lg = log_gamma(b);
  if (z == std::complex<double>(0.0, 0.0)) return {-lg, 0.0};
  NeumaierSum re, im;
  std::complex<double> term(1.0, 0.0);
  re.add(1.0);
  const double r = std::abs(z);
  for (int j = 0; j < 500; ++j) {
    term *= z / ((j + 1.0) * (j + b));
    re.add(term.real());
    im.add(term.imag());
    const double next_ratio = r / ((j + 2.0) * (j + 1.0 + b));
    if (next_ratio < 0.5 &&
        std::abs(term) < 1e-18 * std::abs(std::complex<double>(re.value(), im.value())))
      break;
  }
  return std::log(std::complex<double>(re.value(), im.value())) - lg;
}

/// ln psi_b(z) - 2 sqrt(z) by the Hankel expansion (z != 0).
inline std::complex<double> log_psi_asymptotic_scaled(double b, std::complex<double> z, int max_order) {
  const double nu = b - 1.0;
  const double four_nu2 = 4.0 * nu * nu;
  const std::complex<double> w = 2.0 * std::sqrt(z);
  const std::complex<double> inv_w = 1.0 / w;

  std::complex<double> s1(1.0, 0.0), s2(1.0, 0.0);
  std::complex<double> pw(1.0, 0.0);
  double a = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_order; ++k) {
    a *= (four_nu2 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k);
    pw *= inv_w;
    const std::complex<double> t = a * pw;
    const double mag = std::abs(t);
    if (mag == 0.0) break;  // half-integer nu: the series terminates
    if (mag > prev) break;  // optimal truncation
    s1 += (k % 2) ? -t : t;
    s2 += t;
    prev = mag;
    if (mag < 1e-17 * std::abs(s1)) break;
  }

  std::complex<double> c;
  const double pi = std::numbers::pi;
  if (w.imag() > 0.0)
    c = std::complex<double>(0.0, 1.0) * std::polar(1.0, nu * pi);
  else if (w.imag() < 0.0)
    c = std::complex<double>(0.0, -1.0) * std::polar(1.0, -nu * pi);
  else
    c = -std::sin(nu * pi);

  std::complex<double> bracket = s1;
  const std::complex<double> small = std::exp(-2.0 * w);
  if (std::abs(small) > 1e-300) bracket += c * small * s2;

  return 0.5 * (1.0 - b) * std::log(z) - 0.5 * std::log(2.0 * pi * w) + std::log(bracket);
}

inline bool psi_use_series(std::complex<double> z, const PsiRegime& regime) {
  const double r = std::abs(z);
  if (r > regime.crossover_radius) return false;
  if (z.imag() == 0.0 || r <= 16.0) return true;
  // Off the real axis the series cancels; switch once its loss exceeds the
  // Hankel truncation error.
  const double half_arg = 0.5 * std::abs(std::arg(z));
  const double series_log_err = 2.0 * std::sqrt(r) * (1.0 - std::cos(half_arg)) - 36.0;
  const double asym_log_err = -4.0 * std::sqrt(r);
  return series_log_err <= asym_log_err;
}

}  // namespace detail

/// ln psi_b(z) - 2 sqrt(z) (principal root), the form used by the kernels so
/// that e^{-(x+y)/t} e^{2 sqrt(xy)/t} combine analytically.
inline std::complex<double> log_psi_scaled(double b, std::complex<double> z, const PsiRegime& regime = {}) {
  detail::check_psi_args(b, z, regime);
  if (detail::psi_use_series(z, regime)) return detail::log_psi_series(b, z) - 2.0 * std::sqrt(z);
  return detail::log_psi_asymptotic_scaled(b, z, regime.asymptotic_order);
}

/// psi_b(z) in log form.
inline LogComplex psi_b(double b, std::complex<double> z, const PsiRegime& regime = {}) {
  detail::check_psi_args(b, z, regime);
  if (detail::psi_use_series(z, regime)) return LogComplex::from_log(detail::log_psi_series(b, z));
  return LogComplex::from_log(detail::log_psi_asymptotic_scaled(b, z, regime.asymptotic_order) +
                              2.0 * std::sqrt(z));
}

/// psi_b'(z) = psi_{b+1}(z).
inline LogComplex psi_b_prime(double b, std::complex<double> z, const PsiRegime& regime = {}) {
  detail::require(b > 0.0, "psi_b_prime: weight b must be positive");
  return psi_b(b + 1.0, z, regime);
}

/// Series branch only (any |z|); exposed for branch-agreement checks.
inline LogComplex psi_b_series(double b, std::complex<double> z) {
  detail::check_psi_args(b, z, PsiRegime{});
  return LogComplex::from_log(detail::log_psi_series(b, z));
}

/// Asymptotic branch only, truncated after at most `order` correction terms.
inline LogComplex psi_b_asymptotic(double b, std::complex<double> z, int order = PsiRegime{}.asymptotic_order) {
  detail::check_psi_args(b, z, PsiRegime{});
  if (z == std::complex<double>(0.0, 0.0)) throw DomainError("psi_b_asymptotic: z must be nonzero");
  return LogComplex::from_log(detail::log_psi_asymptotic_scaled(b, z, order) + 2.0 * std::sqrt(z));
}

}  // namespace kimura
