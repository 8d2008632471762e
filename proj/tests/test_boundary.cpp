#include <cmath>

#include <gtest/gtest.h>

#include "json.hpp"
#include "kimura/boundary.hpp"

using namespace kimura;
using nlohmann::json;

TEST(BoundaryClassification, SimplexWithoutDriftHasThreeTerminalVertices) {
  const auto c = classify_boundary(DomainSpec::simplex(2), PolyOperator::kimura_simplex(2, {0, 0, 0}));
  ASSERT_EQ(c.faces.size(), 3u);
  for (const auto& f : c.faces) EXPECT_EQ(f.label, FaceLabel::tangent);
  ASSERT_EQ(c.terminal.size(), 3u);
  for (const auto& s : c.terminal) EXPECT_EQ(s.dimension, 0);
  EXPECT_EQ(c.predicted_null_dim, 3);
}

TEST(BoundaryClassification, InwardDriftLeavesOnlyTheInterior) {
  const auto c = classify_boundary(DomainSpec::simplex(2), PolyOperator::kimura_simplex(2, {1, 0.5, 2}));
  for (const auto& f : c.faces) EXPECT_EQ(f.label, FaceLabel::transverse);
  ASSERT_EQ(c.terminal.size(), 1u);
  EXPECT_TRUE(c.terminal[0].faces.empty());
  EXPECT_EQ(c.terminal[0].dimension, 2);
  EXPECT_EQ(c.predicted_null_dim, 1);
}

TEST(BoundaryClassification, MixedFacesPickTheTangentEdge) {
  // Only face lambda0 = 0 is tangent: the terminal stratum is that edge.
  const auto c = classify_boundary(DomainSpec::simplex(2), PolyOperator::kimura_simplex(2, {0, 1, 1}));
  ASSERT_EQ(c.terminal.size(), 1u);
  EXPECT_EQ(c.terminal[0].dimension, 1);
  EXPECT_EQ(c.terminal[0].faces, std::vector<std::string>{"lambda0=0"});
}

TEST(BoundaryClassification, CubeWithoutDriftHasCornerTerminals) {
  const auto c = classify_boundary(DomainSpec::cube(2), PolyOperator::kimura_cube(2, {0, 0}, {0, 0}));
  EXPECT_EQ(c.terminal.size(), 4u);
  EXPECT_EQ(c.predicted_null_dim, 4);
}

TEST(BoundaryClassification, MultiplierDoesNotChangeLabels) {
  const auto base = PolyOperator::kimura_simplex(2, {0, 0, 1});
  const auto scaled = base.scaled([](const std::vector<double>& x) { return 2.0 + x[0]; });
  const auto a = classify_boundary(DomainSpec::simplex(2), base), b = classify_boundary(DomainSpec::simplex(2), scaled);
  for (std::size_t i = 0; i < a.faces.size(); ++i) EXPECT_EQ(a.faces[i].label, b.faces[i].label);
  EXPECT_EQ(a.terminal.size(), b.terminal.size());
}

TEST(BoundaryClassification, DimensionMismatchIsAnError) {
  EXPECT_THROW(classify_boundary(DomainSpec::simplex(3), PolyOperator::kimura_simplex(2, {0, 0, 0})), DimensionError);
  EXPECT_THROW(PolyOperator::kimura_simplex(2, {0, 0}), DimensionError);
}

TEST(BoundaryProblemJson, ParsesAndRejectsUnknownKeys) {
  const auto p = boundary_problem_from_json(json::parse(R"({"kind":"simplex","dimension":2,"operator":{"weights":[1,1,1]}})"));
  EXPECT_EQ(classify_boundary(p.domain, p.op, p.options).terminal.size(), 1u);
  EXPECT_THROW(boundary_problem_from_json(json::parse(R"({"kind":"simplex","dim":2})")), ConfigError);
  EXPECT_THROW(boundary_problem_from_json(json::parse(R"({"kind":"torus"})")), ConfigError);
  EXPECT_THROW(boundary_problem_from_json(json::parse(R"({"kind":"simplex","operator":{"weight":[1,1,1]}})")),
               ConfigError);
}

TEST(LongTimeLimit, NeutralInterpolatesEndValues) {
  const auto lim = long_time_limit(KimuraOp1D::neutral(), [](double x) { return std::cos(3 * x); });
  EXPECT_EQ(lim.regime, "absorbing at both ends");
  for (double x : {0.0, 0.3, 0.8, 1.0}) EXPECT_NEAR(lim(x), (1 - x) + x * std::cos(3.0), 1e-10);
}

TEST(LongTimeLimit, SelectionUsesTheHarmonicFunction) {
  const double s = 2.0;
  const auto lim = long_time_limit(KimuraOp1D::wright_fisher(0, 0, s), [](double x) { return x; });
  for (double x : {0.2, 0.5}) EXPECT_NEAR(lim(x), (1 - std::exp(-s * x)) / (1 - std::exp(-s)), 1e-9);
}

TEST(LongTimeLimit, TransverseEndsAverageAgainstTheBetaLaw) {
  // Speed measure x^{b0-1}(1-x)^{b1-1}: the mean of x is b0 / (b0 + b1).
  const auto lim = long_time_limit(KimuraOp1D::wright_fisher(0.5, 1.5), [](double x) { return x; });
  EXPECT_EQ(lim.regime, "ergodic");
  EXPECT_NEAR(lim(0.3), 0.25, 1e-9);
}

TEST(LongTimeLimit, OneAbsorbingEndTakesItsValue) {
  const auto lim = long_time_limit(KimuraOp1D::wright_fisher(0.0, 1.0), [](double x) { return 2.0 + x; });
  EXPECT_EQ(lim.regime, "absorbing at 0");
  EXPECT_NEAR(lim(0.6), 2.0, 1e-14);
}
