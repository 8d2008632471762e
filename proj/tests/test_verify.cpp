#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kimura/verify.hpp"
#include "kimura/verify_checks.hpp"

using namespace kimura;

namespace {

EstimateCase synthetic(std::function<double(double)> g) {
  EstimateCase c;
  c.lemma = "synthetic";
  c.b = 1.0;
  c.estimand = [g](double x, const SectorTime&, bool*) { return g(x); };
  c.normalizer = [](double, const SectorTime&) { return 1.0; };
  return c;
}

}  // namespace

TEST(EstimateEngine, BoundedRatioIsRefinementStable) {
  const auto r = check_estimate(synthetic([](double x) { return x / (1.0 + x); }));
  EXPECT_TRUE(r.pass) << r.message;
  EXPECT_LT(r.ratio, 1.001);
  EXPECT_LE(r.constant, 1.0);
}

TEST(EstimateEngine, GrowingRatioIsReportedDiverging) {
  const auto r = check_estimate(synthetic([](double x) { return std::sqrt(x); }));
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.diverging);
  EXPECT_NEAR(r.ratio, std::sqrt(10.0), 1e-9);
}

TEST(EstimateEngine, SlowGrowthFailsWithoutDiverging) {
  const auto r = check_estimate(synthetic([](double x) { return std::log1p(x); }));
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.diverging);
}

TEST(EstimateEngine, InteriorPeakIsPolishedBetweenGridPoints) {
  // Narrow peak of height 2 at x = e^{0.37}, off every grid point.
  const auto r = check_estimate(synthetic([](double x) {
    const double u = std::log(x) - 0.37;
    return 2.0 * std::exp(-u * u / 0.02);
  }));
  EXPECT_TRUE(r.pass) << r.message;
  EXPECT_NEAR(r.constant, 2.0, 1e-6);
  EXPECT_NEAR(r.constant_coarse, 2.0, 1e-6);
}

TEST(EstimateEngine, NonFiniteEstimandFails) {
  const auto r = check_estimate(synthetic([](double x) { return x > 100.0 ? INFINITY : 1.0; }));
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.message, "non-finite estimand");
}

TEST(EstimateEngine, DecayFitRecoversTheExponent) {
  auto c = synthetic([](double) { return 1.0; });
  c.estimand = [](double, const SectorTime& t, bool*) { return std::exp(-0.7 / t.tau); };
  c.decay = DecaySpec{1.0, {0.05, 0.1, 0.2, 0.4}, 0.0, 0.7, 0.0};
  const auto r = check_estimate(c);
  ASSERT_TRUE(r.decay_rate.has_value());
  EXPECT_NEAR(*r.decay_rate, 0.7, 1e-9);
  c.decay->target = 1.0;  // 0.7 < 0.8 * 1.0
  EXPECT_FALSE(check_estimate(c).pass);
}

TEST(EstimateGrid, RefinedLevelDoublesDensityAndWidensRange) {
  EstimateGrid g;
  const auto a = g.xs(1, 2.0), b = g.xs(2, 2.0);
  EXPECT_EQ(a.size(), 8u * 3 + 1);
  EXPECT_EQ(b.size(), 10u * 6 + 1);
  EXPECT_NEAR(a.front(), 2e-4, 1e-18);
  EXPECT_NEAR(b.back(), 2e5, 1e-6);
}

TEST(EstimateRegistry, KeysAreDistinctAndFilterable) {
  const auto keys = registry_keys();
  ASSERT_FALSE(keys.empty());
  EXPECT_EQ(std::set<std::string>(keys.begin(), keys.end()).size(), keys.size());
  RegistryOptions ro;
  ro.only = {keys.front()};
  for (const auto& c : estimate_registry(ro)) EXPECT_EQ(c.lemma, keys.front());
}

TEST(EstimateRegistry, KernelAbsoluteMassCaseIsStable) {
  RegistryOptions ro;
  ro.only = {"abs_mass"};
  ro.b = {1e-3, 0.5};
  for (const auto& r : run_estimates(estimate_registry(ro))) EXPECT_TRUE(r.pass) << r.b << " " << r.message;
}

TEST(IdentityChecks, MassAndIndicialPassOnSmallSets) {
  EXPECT_TRUE(check_mass({0.0, 0.5}, {0.1, 1.0}, {0.0, 1.0}).pass);
  for (double b : {0.3, 2.0}) {
    const auto r = check_indicial(b);
    EXPECT_TRUE(r.pass) << r.message;
    EXPECT_LE(r.error, 1e-12);
  }
}

TEST(IdentityChecks, ChapmanKolmogorovOnASingleTimePair) {
  const auto r = check_chapman_kolmogorov({0.3}, {{0.1, 0.2}}, {0.5, 2.0}, {0.5, 2.0});
  EXPECT_TRUE(r.pass) << r.message;
  EXPECT_EQ(r.points, 4u);
}

TEST(IdentityChecks, FailureInsideACheckIsReportedNotThrown) {
  const auto r = check_mass({-1.0}, {1.0}, {1.0});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.message.empty());
}

TEST(MaxPrinciple, DetectsAnOvershoot) {
  using K = SolvedProblem::Kind;
  const std::vector<SolvedProblem> ok{{"fine", K::homogeneous, 1.0, 0.0, {0.2, 0.9, 1.0}},
                                      {"flat", K::constant, 2.0, 2.0, {2.0, 2.0}},
                                      {"sink", K::nonpositive_source, 0.0, 0.0, {-0.3, 0.0}}};
  EXPECT_TRUE(check_max_principle(ok).pass);
  auto bad = ok;
  bad[0].values.push_back(1.0 + 1e-6);
  const auto r = check_max_principle(bad);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.entries[0].excess, 0.0);
}

TEST(ReportOutput, SummaryCsvAndJsonlAreLineOriented) {
  IdentityReport rep;
  rep.check = "demo";
  rep.tolerance = 1e-8;
  rep.record(3e-9, {{"b", 0.5}});
  rep.finish();
  std::ostringstream jl, csv;
  write_jsonl(jl, {to_json(rep)});
  write_summary_csv(csv, {to_json(rep)});
  const std::string lines = jl.str(), table = csv.str();
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 1);
  EXPECT_EQ(table.substr(0, table.find('\n')), "kind,id,params,value,threshold,ratio,pass");
  EXPECT_EQ(std::stod(fmt17(0.1)), 0.1);
}
