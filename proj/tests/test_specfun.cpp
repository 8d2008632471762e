#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "kimura/specfun.hpp"

using namespace kimura;
using cplx = std::complex<double>;

namespace {

// ln psi_b(z) at 40 digits from z^{(1-b)/2} I_{b-1}(2 sqrt z) (mpmath).
struct PsiRef {
  double b;
  cplx z;
  cplx log_value;
};

const PsiRef kPsiRefs[] = {
    {0.5, {0.3, 0}, {-0.064071249454229751895, 0}},
    {1.0, {2.0, 0}, {1.447471978124562227, 0}},
    {2.5, {50, 0}, {8.8912653398371220103, 0}},
    {0.1, {150, 0}, {24.219838927257895076, 0}},
    {0.5, {400, 0}, {38.734487876515354604, 0}},
    {1.5, {30, 40}, {9.4275870144645274033, -0.42227759584278212036}},
    {2.0, {-5, 1}, {-2.0680664878088785476, 2.7937758140058631329}},
};

}  // namespace

TEST(PsiB, MatchesBesselReferenceValues) {
  for (const auto& r : kPsiRefs) {
    const LogComplex v = psi_b(r.b, r.z);
    EXPECT_NEAR(v.log_magnitude, r.log_value.real(), 1e-12 * std::max(1.0, std::abs(r.log_value.real())))
        << "b=" << r.b << " z=" << r.z;
    EXPECT_NEAR(v.phase, r.log_value.imag(), 1e-11) << "b=" << r.b << " z=" << r.z;
  }
}

TEST(PsiB, ValueAtZeroIsReciprocalGamma) {
  for (double b : {0.1, 0.5, 1.0, 3.7})
    EXPECT_NEAR(psi_b(b, 0.0).log_magnitude, -std::lgamma(b), 1e-14);
}

TEST(PsiB, HalfIntegerOneIsClosedForm) {
  // psi_{1/2}(z) = cosh(2 sqrt z) / sqrt(pi)
  for (double z : {0.01, 1.0, 20.0, 99.0, 101.0, 900.0}) {
    const double expect = std::log(std::cosh(2.0 * std::sqrt(z))) - 0.5 * std::log(M_PI);
    EXPECT_NEAR(psi_b(0.5, z).log_magnitude, expect, 1e-13 * std::max(1.0, expect)) << z;
  }
}

TEST(PsiB, DerivativeIsShiftedWeight) {
  // psi_b'(z) = psi_{b+1}(z), checked by a centred difference.
  for (double b : {0.3, 1.0, 2.5})
    for (double z : {0.5, 7.0, 60.0}) {
      const double h = 1e-4 * z;
      const double fd = (psi_b(b, z + h).real() - psi_b(b, z - h).real()) / (2.0 * h);
      EXPECT_NEAR(psi_b_prime(b, z).real() / fd, 1.0, 1e-7) << b << " " << z;
    }
}

TEST(PsiB, SatisfiesTheBesselTypeOde) {
  // z psi'' + b psi' - psi = 0, with psi' = psi_{b+1}, psi'' = psi_{b+2}.
  for (double b : {0.2, 1.3})
    for (cplx z : {cplx(3, 0), cplx(40, 30), cplx(250, -10)}) {
      const cplx p0 = psi_b(b, z).value(), p1 = psi_b(b + 1, z).value(), p2 = psi_b(b + 2, z).value();
      EXPECT_LT(std::abs(z * p2 + b * p1 - p0) / std::abs(p0), 1e-12) << b << " " << z;
    }
}

TEST(PsiB, BranchesAgreeAcrossTheCrossover) {
  for (double b : {0.1, 0.5, 1.0, 2.5})
    for (double arg : {0.0, 0.8, 2.0})
      for (double r : {100.0, 150.0, 200.0}) {
        const cplx z = std::polar(r, arg);
        const cplx s = psi_b_series(b, z).value(), a = psi_b_asymptotic(b, z).value();
        EXPECT_LT(std::abs(s - a) / std::abs(a), 1e-9) << b << " " << z;
      }
}

TEST(PsiB, ConjugateSymmetry) {
  const cplx z(120, 70);
  const LogComplex a = psi_b(0.7, z), c = psi_b(0.7, std::conj(z));
  EXPECT_DOUBLE_EQ(a.log_magnitude, c.log_magnitude);
  EXPECT_DOUBLE_EQ(a.phase, -c.phase);
}

TEST(PsiB, RejectsArgumentsOutsideTheSector) {
  EXPECT_THROW(psi_b(0.5, cplx(-10, 0)), SectorError);
  EXPECT_THROW(psi_b(0.5, std::polar(5.0, M_PI - 0.01)), SectorError);
  EXPECT_NO_THROW(psi_b(0.5, std::polar(5.0, M_PI - 0.06)));
  EXPECT_THROW(psi_b(0.0, 1.0), DomainError);
  EXPECT_THROW(psi_b(-1.0, 1.0), DomainError);
}

TEST(PsiB, AsymptoticCoefficientsFollowTheHankelRecursion) {
  // c_{b,1} = -(4 nu^2 - 1)/16 with nu = b - 1.
  for (double b : {0.3, 1.0, 2.0}) {
    const double nu = b - 1.0;
    EXPECT_NEAR(psi_asymptotic_coefficient(b, 0), 1.0, 0.0);
    EXPECT_NEAR(psi_asymptotic_coefficient(b, 1), -(4 * nu * nu - 1) / 16.0, 1e-15);
  }
  // nu = 1/2 terminates after the first term.
  EXPECT_EQ(psi_asymptotic_coefficient(1.5, 2), 0.0);
}

TEST(LogGamma, AgreesWithStdLgammaAndRejectsNonpositive) {
  for (double x : {1e-3, 0.5, 1.0, 7.25, 170.0}) EXPECT_NEAR(log_gamma(x), std::lgamma(x), 1e-13 * std::max(1.0, std::lgamma(x)));
  EXPECT_THROW(log_gamma(0.0), DomainError);
  EXPECT_THROW(log_gamma(-2.5), DomainError);
}

TEST(LogComplexValue, PhaseWrapsIntoPrincipalRange) {
  const LogComplex v = LogComplex::from_log(cplx(0.0, 3 * M_PI));
  EXPECT_NEAR(v.phase, M_PI, 1e-15);
  EXPECT_TRUE(LogComplex::zero().is_zero());
  EXPECT_EQ(LogComplex::from_value(0.0).magnitude(), 0.0);
  EXPECT_NEAR(LogComplex::from_value(cplx(-2, 0)).real(), -2.0, 1e-15);
}
