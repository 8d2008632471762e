#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "kimura/kimura_op.hpp"
#include "kimura/solve_ops.hpp"
#include "kimura/wf_parametrix.hpp"

using namespace kimura;
using cplx = std::complex<double>;

// Polynomial oracles: e^{tL_b} applied to 1, x, x^2 is a finite Taylor sum in t
// because L_b lowers the degree.
//   e^{tL} x   = x + b t
//   e^{tL} x^2 = x^2 + 2(1+b) t x + b(1+b) t^2

TEST(CauchyOperator, PreservesConstantsAndLinearMoments) {
  const Axes ax{{0.0, 0.1, 1.0, 3.0, 8.0}};
  for (double b : {0.0, 0.5, 2.0}) {
    const ModelSpec spec{{b}, 0};
    const auto one = apply_cauchy(spec, SectorTime::real(0.7), [](const std::vector<double>&) { return 1.0; }, ax);
    const auto lin = apply_cauchy(spec, SectorTime::real(0.7), [](const std::vector<double>& p) { return p[0]; }, ax);
    for (std::size_t i = 0; i < ax[0].size(); ++i) {
      EXPECT_LT(std::abs(one.values[i] - 1.0), 1e-10) << b;
      EXPECT_LT(std::abs(lin.values[i] - (ax[0][i] + 0.7 * b)), 1e-9 * (1 + ax[0][i])) << b;
    }
  }
}

TEST(CauchyOperator, QuadraticMomentAtComplexTime) {
  const double b = 0.6;
  const SectorTime t(0.9, 0.7);
  const cplx tv = t.value();
  const Axes ax{{0.0, 0.5, 2.0}};
  const auto v = apply_cauchy(ModelSpec{{b}, 0}, t, [](const std::vector<double>& p) { return p[0] * p[0]; }, ax);
  for (std::size_t i = 0; i < ax[0].size(); ++i) {
    const double x = ax[0][i];
    const cplx expect = x * x + 2 * (1 + b) * tv * x + b * (1 + b) * tv * tv;
    EXPECT_LT(std::abs(v.values[i] - expect), 1e-8 * std::abs(expect) + 1e-12) << x;
  }
}

TEST(CauchyOperator, ProductModelFactorizes) {
  // L = x d^2 + b d + d_y^2 on x + y^2: e^{tL} = x + b t + y^2 + 2 t.
  const double b = 0.5, t = 0.4;
  const Axes ax{{0.0, 1.0, 2.0}, {-1.0, 0.0, 1.5}};
  const auto v =
      apply_cauchy(ModelSpec{{b}, 1}, SectorTime::real(t), [](const std::vector<double>& p) { return p[0] + p[1] * p[1]; }, ax);
  for (std::size_t k = 0; k < v.values.size(); ++k) {
    const auto p = v.point(k);
    EXPECT_LT(std::abs(v.values[k] - (p[0] + b * t + p[1] * p[1] + 2 * t)), 1e-8) << p[0] << "," << p[1];
  }
}

TEST(CauchyOperator, ZeroWeightKeepsBoundaryAtom) {
  // b = 0: the atom at 0 carries f(0); f = indicator near 0 sees e^{-x/t}.
  const Axes ax{{0.0, 1.0, 3.0}};
  const auto v = apply_cauchy(ModelSpec{{0.0}, 0}, SectorTime::real(1.0),
                              [](const std::vector<double>& p) { return p[0] == 0.0 ? 1.0 : 0.0; }, ax);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(v.values[i].real(), std::exp(-ax[0][i]), 1e-12);
}

TEST(CauchyOperator, RejectsMismatchedAxes) {
  const auto f = [](const std::vector<double>&) { return 1.0; };
  EXPECT_THROW(apply_cauchy(ModelSpec{{0.5}, 1}, SectorTime::real(1.0), f, Axes{{0.0, 1.0}}), DimensionError);
  EXPECT_THROW(apply_cauchy(ModelSpec{{0.5}, 0}, SectorTime::real(1.0), f, Axes{{-1.0, 1.0}}), DomainError);
}

TEST(DuhamelOperator, IntegratesPolynomialSources) {
  // g = x gives u = x t + b t^2 / 2; g = 1 gives u = t.
  const double b = 0.8, t = 1.3;
  const Axes ax{{0.0, 0.5, 2.0}};
  const ModelSpec spec{{b}, 0};
  const auto u1 = apply_duhamel(spec, [](const std::vector<double>&, double) { return 1.0; }, t, 3, ax);
  const auto ux = apply_duhamel(spec, [](const std::vector<double>& p, double) { return p[0]; }, t, 3, ax);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(u1.values[i].real(), t, 1e-9);
    EXPECT_NEAR(ux.values[i].real(), ax[0][i] * t + 0.5 * b * t * t, 1e-8);
  }
}

TEST(DuhamelOperator, TimeDependentSource) {
  // g = s: u = t^2 / 2.
  const auto u = apply_duhamel(ModelSpec{{0.3}, 0}, [](const std::vector<double>&, double s) { return s; }, 2.0, 2,
                               Axes{{0.0, 1.0}});
  EXPECT_NEAR(u.values[0].real(), 2.0, 1e-10);
  EXPECT_NEAR(u.values[1].real(), 2.0, 1e-10);
}

TEST(ResolventOperator, InvertsOnLowDegreePolynomials) {
  // R(mu) 1 = 1/mu,  R(mu) x = x/mu + b/mu^2.
  const double b = 0.5;
  const Axes ax{{0.0, 0.7, 2.0}};
  for (cplx mu : {cplx(2, 0), cplx(1, 1), 5.0 * std::polar(1.0, 2 * M_PI / 3)}) {
    const auto r1 = resolvent_apply(ModelSpec{{b}, 0}, mu, [](const std::vector<double>&) { return 1.0; }, ax);
    const auto rx = resolvent_apply(ModelSpec{{b}, 0}, mu, [](const std::vector<double>& p) { return p[0]; }, ax);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_LT(std::abs(r1.values[i] - 1.0 / mu), 1e-8) << mu;
      EXPECT_LT(std::abs(rx.values[i] - (ax[0][i] / mu + b / (mu * mu))), 1e-8) << mu;
    }
  }
}

TEST(ResolventOperator, RejectsTheNegativeAxis) {
  const auto f = [](const std::vector<double>&) { return 1.0; };
  EXPECT_THROW(resolvent_apply(ModelSpec{{0.5}, 0}, cplx(-1.0, 0.0), f, Axes{{0.0, 1.0}}), SectorError);
}

TEST(DerivativeCommutation, SpatialDerivativeShiftsTheWeight) {
  // d_x e^{tL_b} x^2 = 2x + 2(1+b) t.
  const double b = 0.4, t = 0.6;
  SmoothData f{4, [](double y, int k) { return k == 0 ? y * y : k == 1 ? 2 * y : k == 2 ? 2.0 : 0.0; }};
  const std::vector<double> ax{0.0, 0.5, 3.0};
  const auto d = derivative_commute(ModelSpec{{b}, 0}, SectorTime::real(t), f, 1, 0, ax);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(d.values[i].real(), 2 * ax[i] + 2 * (1 + b) * t, 1e-9);
  // d_t e^{tL_b} x^2 = 2(1+b) x + 2 b(1+b) t.
  const auto dt = derivative_commute(ModelSpec{{b}, 0}, SectorTime::real(t), f, 0, 1, ax);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(dt.values[i].real(), 2 * (1 + b) * ax[i] + 2 * b * (1 + b) * t, 1e-9);
  EXPECT_THROW(derivative_commute(ModelSpec{{b}, 0}, SectorTime::real(t), f, 1, 2, ax), DomainError);
}

TEST(ModelOperatorPowers, SquareOfDegenerateOperator) {
  // (y d^2 + c d)^2 = y^2 d^4 + (2+2c) y d^3 + c(1+c) d^2.
  const auto m = power_of_model_operator(0.5, 2, false);
  EXPECT_DOUBLE_EQ(m.at({2, 4}), 1.0);
  EXPECT_DOUBLE_EQ(m.at({1, 3}), 3.0);
  EXPECT_DOUBLE_EQ(m.at({0, 2}), 0.75);
}

TEST(WfParametrix, NeutralOperatorPreservesAffineData) {
  const auto op = KimuraOp1D::neutral();
  WfStepperOptions opt;
  opt.nodes = 40;
  const auto one = solve_wf_parametrix(op, [](double) { return 1.0; }, 0.2, 5e-3, 0.1, opt);
  const auto lin = solve_wf_parametrix(op, [](double x) { return x; }, 0.2, 5e-3, 0.1, opt);
  for (std::size_t i = 0; i < one.values.size(); ++i) {
    EXPECT_NEAR(one.values[i], 1.0, 1e-6);
    EXPECT_NEAR(lin.values[i], lin.axes[0][i], 1e-3);
  }
}

TEST(WfParametrix, RespectsTheMaximumPrinciple) {
  const auto op = KimuraOp1D::wright_fisher(0.5, 0.5);
  WfStepperOptions opt;
  opt.nodes = 40;
  const auto v = solve_wf_parametrix(op, [](double x) { return x < 0.5 ? 1.0 : 0.0; }, 0.3, 5e-3, 0.1, opt);
  for (double e : v.values) {
    EXPECT_LE(e, 1.0 + 1e-8);
    EXPECT_GE(e, -1e-8);
  }
}
