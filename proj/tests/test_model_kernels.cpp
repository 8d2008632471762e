#include <cmath>
#include <algorithm>
#include <complex>

#include <gtest/gtest.h>

#include "kimura/model_kernels.hpp"

using namespace kimura;

namespace {

struct KernelRef {
  double b, t, x, y, log_k;
};

// ln k^b_t(x,y) from y^{b-1} t^{-b} e^{-(x+y)/t} psi_b(xy/t^2) at 40 digits (mpmath).
const KernelRef kKernelRefs[] = {
    {0.5, 1, 1, 0.5, -0.94730005408705770279},    {1, 0.1, 2, 2.5, -0.79239241560757340633},
    {2.5, 10, 0.01, 3, -4.6941071720129385501},   {0.001, 1, 1, 1e-3, -0.31393442045608932873},
    {1, 1, 0, 1, -1.0},                           {0.5, 0.01, 10, 9.8, -0.20513090099579383109},
};

SectorTime rt(double t) { return SectorTime::real(t); }

}  // namespace

TEST(Kernel1D, MatchesReferenceValues) {
  for (const auto& r : kKernelRefs) {
    const LogComplex k = kernel_1d(r.b, rt(r.t), r.x, r.y);
    EXPECT_NEAR(k.log_magnitude, r.log_k, 1e-11 * std::max(1.0, std::abs(r.log_k))) << r.b << " " << r.t << " " << r.x;
    EXPECT_EQ(k.phase, 0.0);
  }
}

TEST(Kernel1D, ComplexTimeMatchesReference) {
  // t = e^{0.6 i}, b = 0.7, x = 1, y = 2.
  const LogComplex k = kernel_1d(0.7, SectorTime(1.0, 0.6), 1.0, 2.0);
  EXPECT_NEAR(k.log_magnitude, -1.6683630281363493867, 1e-12);
  EXPECT_NEAR(k.phase, -0.17561320597080221414, 1e-12);
}

TEST(Kernel1D, ZeroWeightDensityMatchesReference) {
  EXPECT_NEAR(kernel_density(0.0, rt(1), 1, 0.5).log_magnitude, -1.2596269672783770749, 1e-12);
  EXPECT_NEAR(kernel_density(0.0, rt(0.5), 2, 1).log_magnitude, -1.1621836084070625399, 1e-12);
  EXPECT_TRUE(kernel_density(0.0, rt(1), 0.0, 1.0).is_zero());
}

TEST(Kernel1D, FromOriginIsGammaDensity) {
  for (double b : {0.3, 1.0, 4.0})
    for (double y : {0.1, 1.0, 5.0}) {
      const double t = 0.7;
      const double expect = (b - 1) * std::log(y) - y / t - b * std::log(t) - std::lgamma(b);
      EXPECT_NEAR(kernel_1d(b, rt(t), 0.0, y).log_magnitude, expect, 1e-13 * std::max(1.0, std::abs(expect)));
    }
}

TEST(Kernel1D, SolvesTheForwardEquationInX) {
  // d_t k = x d_x^2 k + b d_x k, checked by centred differences in t and x.
  const double b = 0.8, t = 0.5, x = 1.2, y = 0.7, h = 1e-4;
  auto k = [&](double tt, double xx) { return kernel_1d(b, rt(tt), xx, y).real(); };
  const double kt = (k(t + h, x) - k(t - h, x)) / (2 * h);
  const double kx = (k(t, x + h) - k(t, x - h)) / (2 * h);
  const double kxx = (k(t, x + h) - 2 * k(t, x) + k(t, x - h)) / (h * h);
  EXPECT_NEAR(kt, x * kxx + b * kx, 1e-6);
}

TEST(KernelDerivatives, MatchReferenceValues) {
  // d_x k and x d_x^2 k at b=0.8, t=0.5, x=1.2, y=0.7, by mpmath differentiation.
  EXPECT_NEAR(kernel_dx(0.8, rt(0.5), 1.2, 0.7, 1).real(), -0.24575415549065054792, 1e-13);
  EXPECT_NEAR(kernel_dx(0.8, rt(0.5), 1.2, 0.7, 2).real(), -0.057974606377873944462, 1e-13);
  // (d_y y - b) k at the same point.
  EXPECT_NEAR(adjoint_flux(0.8, rt(0.5), 1.2, 0.7).real(), 0.10348331261275184605, 1e-13);
}

TEST(KernelDerivatives, RejectInvalidOrders) {
  EXPECT_THROW(kernel_dx(0.5, rt(1), 1, 1, 3), DomainError);
  EXPECT_THROW(kernel_dx(0.0, rt(1), 1, 1, 1), DomainError);
  EXPECT_THROW(kernel_1d(0.5, rt(1), -1, 1), DomainError);
  EXPECT_THROW(kernel_1d(0.5, rt(1), 1, 0), DomainError);
}

TEST(AtomWeight, IsExponentialOnlyForZeroWeight) {
  EXPECT_NEAR(atom_weight(0.0, rt(1), 1).real(), std::exp(-1.0), 1e-16);
  EXPECT_EQ(atom_weight(0.5, rt(1), 1), std::complex<double>(0.0, 0.0));
  EXPECT_EQ(transition_measure_1d(0.0, rt(2), 0.0).atom_weight, 1.0);
  EXPECT_THROW(transition_measure_1d(0.0, SectorTime(1.0, 0.3), 1.0), DomainError);
}

TEST(KernelMass, IsOneAcrossWeightsTimesAndStarts) {
  for (double b : {0.0, 1e-3, 0.5, 2.5})
    for (double t : {0.01, 1.0, 10.0})
      for (double x : {0.0, 0.01, 10.0}) {
        const auto m = kernel_mass(b, rt(t), x);
        ASSERT_TRUE(m.converged);
        EXPECT_NEAR(std::abs(m.value - 1.0), 0.0, 1e-10) << b << " " << t << " " << x;
      }
}

TEST(KernelMass, IsOneForComplexTimes) {
  for (double theta : {0.5, 1.2, -1.0}) {
    const auto m = kernel_mass(0.6, SectorTime(1.5, theta), 2.0);
    EXPECT_LT(std::abs(m.value - 1.0), 1e-9) << theta;
  }
}

TEST(KernelMoments, FirstMomentIsDriftedStart) {
  // E[y] = x + b t for every b >= 0.
  for (double b : {0.0, 0.4, 2.0}) {
    const auto m = integrate_kernel(b, rt(0.8), 1.5, [](double y) { return y; });
    EXPECT_NEAR(m.value.real(), 1.5 + 0.8 * b, 1e-10) << b;
  }
}

TEST(TransitionCdf, MatchesQuadratureReference) {
  EXPECT_NEAR(transition_cdf(0.5, 1, 1, 1.05), 0.51183394521312218429, 1e-11);
  // b = 0 includes the atom.
  EXPECT_NEAR(transition_cdf(0.0, 1, 1, 1.0), 0.65425416127683551977, 1e-11);
}

TEST(TransitionCdf, IsMonotoneAndTendsToOne) {
  double prev = 0.0;
  for (double y = 0.05; y < 30.0; y *= 1.5) {
    const double c = transition_cdf(1.3, 0.9, 2.0, y);
    EXPECT_GE(c, prev - 1e-14);
    prev = c;
  }
  EXPECT_NEAR(transition_cdf(1.3, 0.9, 2.0, 200.0), 1.0, 1e-11);
}

TEST(KernelRules, ReproduceMassAndMoments) {
  for (double b : {0.0, 0.5, 2.0}) {
    const KernelRule r = make_kernel_rule(b, rt(0.3), 0.7);
    std::complex<double> m0, m1;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      m0 += r.weights[i];
      m1 += r.weights[i] * r.nodes[i];
    }
    EXPECT_LT(std::abs(m0 - 1.0), 1e-11) << b;
    EXPECT_LT(std::abs(m1 - (0.7 + 0.3 * b)), 1e-9) << b;
  }
}

TEST(KernelRules, EuclideanRuleHasUnitMassAndVariance) {
  const KernelRule r = make_euclidean_rule(rt(0.25), 1.0);
  std::complex<double> m0, m2;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    m0 += r.weights[i];
    m2 += r.weights[i] * (r.nodes[i] - 1.0) * (r.nodes[i] - 1.0);
  }
  EXPECT_LT(std::abs(m0 - 1.0), 1e-11);
  EXPECT_LT(std::abs(m2 - 0.5), 1e-10);  // 2 t
}

TEST(KernelProduct, EnumeratesAbsorbedStrata) {
  const ModelSpec spec{{0.0, 0.0, 0.5}, 1};
  const auto mu = kernel_product(spec, rt(1.0), {1.0, 0.0, 2.0}, {0.0});
  // Coordinate 1 starts at 0 with b = 0: it is absorbed in every stratum.
  ASSERT_EQ(mu.strata.size(), 2u);
  for (const auto& s : mu.strata) {
    EXPECT_NE(std::find(s.absorbed.begin(), s.absorbed.end(), 1), s.absorbed.end());
  }
  EXPECT_THROW(kernel_product(spec, rt(1.0), {1.0, 0.0}, {0.0}), DimensionError);
}
