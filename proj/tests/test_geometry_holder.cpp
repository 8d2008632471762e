#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kimura/grid.hpp"
#include "kimura/wf_geometry.hpp"

using namespace kimura;

namespace {

GridFunction<double> sampled(const std::vector<double>& ax, double (*f)(double)) {
  GridFunction<double> g(std::vector<std::vector<double>>{ax});
  for (std::size_t i = 0; i < ax.size(); ++i) g.values[i] = f(ax[i]);
  return g;
}

}  // namespace

TEST(WfDistance, IsSquareRootDistanceInDegenerateCoordinates) {
  EXPECT_DOUBLE_EQ(wf_distance({{0.0}, {}}, {{1.0}, {}}), 1.0);
  EXPECT_DOUBLE_EQ(wf_distance({{1.0}, {}}, {{4.0}, {}}), 1.0);
  EXPECT_DOUBLE_EQ(wf_distance({{1.0, 9.0}, {2.0}}, {{4.0, 4.0}, {-1.0}}), 1.0 + 1.0 + 3.0);
  EXPECT_DOUBLE_EQ(wf_parabolic_distance({{0.0}, {}}, 0.0, {{1.0}, {}}, 4.0), 3.0);
}

TEST(WfDistance, IsAMetricOnRandomTriples) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    const WfPoint p{{u(gen), u(gen)}, {u(gen) - 2.5}}, q{{u(gen), u(gen)}, {u(gen) - 2.5}},
        r{{u(gen), u(gen)}, {u(gen) - 2.5}};
    EXPECT_LE(wf_distance(p, r), wf_distance(p, q) + wf_distance(q, r) + 1e-14);
    EXPECT_DOUBLE_EQ(wf_distance(p, q), wf_distance(q, p));
  }
  EXPECT_EQ(wf_distance({{2.0}, {1.0}}, {{2.0}, {1.0}}), 0.0);
}

TEST(WfDistance, RejectsNegativeOrMismatchedPoints) {
  EXPECT_THROW(wf_distance({{-1.0}, {}}, {{1.0}, {}}), DomainError);
  EXPECT_THROW(wf_distance({{1.0}, {}}, {{1.0, 2.0}, {}}), DimensionError);
}

TEST(WfBalls, EnlargedIntervalAndMidpoint) {
  const auto [a, b] = wf_ball_interval(1.0, 4.0);
  EXPECT_DOUBLE_EQ(a, 0.25);
  EXPECT_DOUBLE_EQ(b, 6.25);
  EXPECT_EQ(wf_ball_interval(0.0, 1.0).first, 0.0);
  const double m = wf_midpoint(1.0, 4.0);
  EXPECT_DOUBLE_EQ(m, 2.25);
  EXPECT_NEAR(wf_distance({{1.0}, {}}, {{m}, {}}), wf_distance({{m}, {}}, {{4.0}, {}}), 1e-15);
}

TEST(HolderSeminorm, SquareRootIsLipschitzInTheWfMetric) {
  HolderOptions opt;
  opt.max_distance = 10.0;
  const auto r = holder_seminorm(sampled(linspace(0.0, 4.0, 33), [](double x) { return std::sqrt(x); }), 1.0, opt);
  EXPECT_NEAR(r.seminorm, 1.0, 1e-12);
  EXPECT_NEAR(r.sup_norm, 2.0, 1e-15);
  EXPECT_TRUE(r.grid_restricted);
}

TEST(HolderSeminorm, ConstantHasZeroSeminorm) {
  const auto r = holder_seminorm(sampled(linspace(0.0, 2.0, 11), [](double) { return 3.0; }), 0.5);
  EXPECT_EQ(r.seminorm, 0.0);
  EXPECT_EQ(r.norm(), 3.0);
  EXPECT_GT(r.pairs, 0u);
}

TEST(HolderSeminorm, LinearDataApproachesTheContinuumBoundFromBelow) {
  // |x - y| / |sqrt x - sqrt y| = sqrt x + sqrt y, at most 2 on [0, 1].
  HolderOptions opt;
  opt.max_distance = 10.0;
  const auto coarse = holder_seminorm(sampled(linspace(0.0, 1.0, 11), [](double x) { return x; }), 1.0, opt);
  const auto fine = holder_seminorm(sampled(linspace(0.0, 1.0, 101), [](double x) { return x; }), 1.0, opt);
  EXPECT_LE(coarse.seminorm, fine.seminorm + 1e-15);
  EXPECT_LE(fine.seminorm, 2.0);
  EXPECT_GT(fine.seminorm, 1.98);
}

TEST(HolderSeminorm, ParabolicModeUsesSquareRootOfTime) {
  // f(x, t) = t on a grid with x fixed: |t - s| / |t - s|^{1/2 gamma}.
  GridFunction<double> g(std::vector<std::vector<double>>{{1.0}, linspace(0.0, 1.0, 5)});
  for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = g.point(k)[1];
  HolderOptions opt;
  opt.mode = HolderMode::parabolic;
  const auto r = holder_seminorm(g, 1.0, opt);
  EXPECT_NEAR(r.seminorm, 1.0, 1e-15);  // sqrt|t - s| <= 1 on the unit interval
  EXPECT_THROW(holder_seminorm(sampled(linspace(0, 1, 5), [](double x) { return x; }), 0.5, opt), DimensionError);
}

TEST(HolderSeminorm, RejectsBadExponents) {
  const auto g = sampled(linspace(0.0, 1.0, 5), [](double x) { return x; });
  EXPECT_THROW(holder_seminorm(g, 0.0), DomainError);
  EXPECT_THROW(holder_seminorm(g, 1.5), DomainError);
}

TEST(HolderNorm2Plus, QuadraticComponentsAreExact) {
  // f = x^2: f' = 2x, x f'' = 2x, all recovered exactly by three-point differences.
  const auto r = holder_norm_2plus(sampled(linspace(0.0, 1.0, 21), [](double x) { return x * x; }), 0.5);
  ASSERT_EQ(r.components.size(), 3u);
  EXPECT_NEAR(r.components[0].sup_norm, 1.0, 1e-14);
  EXPECT_NEAR(r.components[1].sup_norm, 2.0, 1e-12);
  EXPECT_NEAR(r.components[2].sup_norm, 2.0, 1e-10);
  EXPECT_TRUE(r.vanishing_ok);
  EXPECT_NEAR(r.vanishing_value, 0.0, 1e-9);
}

TEST(HolderNorm2Plus, FlagsNonVanishingSecondOrderTerm) {
  // x (sqrt x)'' = -x^{-1/2}/4 does not vanish at 0.
  const auto r = holder_norm_2plus(sampled(linspace(0.0, 1.0, 41), [](double x) { return std::sqrt(x); }), 0.5);
  EXPECT_FALSE(r.vanishing_ok);
}
