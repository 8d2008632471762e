#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "kimura/sampling.hpp"
#include "kimura/verify_checks.hpp"

using namespace kimura;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double std_error(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return std::sqrt(s / (v.size() - 1) / v.size());
}

}  // namespace

TEST(RngStream, SameSeedAndStreamReproduce) {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    differs = differs || u != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(RngStream, SmallShapeGammaNeverReturnsZero) {
  RngStream rng(5);
  for (int i = 0; i < 20000; ++i) EXPECT_GT(rng.gamma(1e-3), 0.0);
}

TEST(RngStream, PoissonMeanMatchesInBothRegimes) {
  RngStream rng(11);
  for (double mean : {0.3, 4.0, 25.0, 400.0}) {
    std::vector<double> v(40000);
    for (auto& e : v) e = static_cast<double>(rng.poisson(mean));
    EXPECT_LT(std::abs(mean_of(v) - mean), 4.0 * std::sqrt(mean / v.size())) << mean;
  }
}

TEST(SampleTransition, FromOriginIsGammaWithMeanBT) {
  RngStream rng(3);
  std::vector<double> v(20000);
  for (auto& e : v) e = sample_transition(1.7, 0.4, 0.0, rng);
  EXPECT_LT(std::abs(mean_of(v) - 1.7 * 0.4), 3.0 * std_error(v));
}

TEST(SampleTransition, FirstMomentIsDriftedStart) {
  for (double b : {0.0, 0.5, 2.5}) {
    RngStream rng(9, static_cast<std::uint64_t>(b * 10));
    std::vector<double> v(20000);
    for (auto& e : v) e = sample_transition(b, 0.8, 1.2, rng);
    EXPECT_LT(std::abs(mean_of(v) - (1.2 + 0.8 * b)), 3.0 * std_error(v)) << b;
  }
}

TEST(SampleTransition, EmpiricalLawMatchesQuadratureCdf) {
  const auto rep = check_sampler_law({{0.5, 0.3, 2.0}, {0.0, 1.0, 1.0}}, 20000, 17, 0.015);
  EXPECT_TRUE(rep.pass) << rep.message << " ks=" << rep.error;
}

TEST(SampleTransition, RejectsNonpositiveTime) {
  RngStream rng(1);
  EXPECT_THROW(sample_transition(0.5, 0.0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_transition(-0.5, 1.0, 1.0, rng), DomainError);
}

TEST(KsDistance, HandlesAnAtomAtZero) {
  // Half the mass at 0, the rest uniform on (0, 1].
  std::vector<double> ys{0, 0, 0.25, 0.75};
  const double d = ks_distance(ys, [](double y) { return y <= 0 ? 0.5 : 0.5 + 0.5 * std::min(y, 1.0); });
  EXPECT_NEAR(d, 0.125, 1e-15);
}

TEST(KsDistance, SubnormalStackUsesThePrecedingDouble) {
  // F(y) = 0.4 + 0.6 y on (0, 1]: the 0.4 near 0 is rounded onto the smallest subnormal.
  const double tiny = std::numeric_limits<double>::denorm_min();
  std::vector<double> ys{tiny, tiny, 0.5, 0.9, 1.0};
  const double d = ks_distance(ys, [](double y) { return y <= 0 ? 0.0 : 0.4 + 0.6 * std::min(y, 1.0); });
  EXPECT_NEAR(d, 0.34, 1e-12);  // at 0.9; F(tiny) as left limit would give 0.4
}

TEST(SampleTransition, NearAtomWeightNeverReturnsZero) {
  RngStream rng(5);
  for (int i = 0; i < 20000; ++i) ASSERT_GT(sample_transition(1e-3, 0.5, 1.0, rng), 0.0);
}

TEST(SamplePathModel, AbsorbedZeroWeightPathStaysAtZero) {
  RngStream rng(2);
  const auto p = sample_path_model(0.0, {0.1, 0.5, 2.0}, 0.0, rng);
  for (double e : p) EXPECT_EQ(e, 0.0);
}

TEST(SamplePathModel, FinalMarginalMatchesDirectSampler) {
  const std::vector<double> times{0.2, 0.5, 1.0};
  std::vector<double> end(20000);
  for (std::size_t i = 0; i < end.size(); ++i) {
    RngStream rng(21, i);
    end[i] = sample_path_model(0.6, times, 1.0, rng).back();
  }
  const double ks = ks_distance(end, [](double y) { return transition_cdf(0.6, 1.0, 1.0, y); });
  EXPECT_LT(ks, 0.015);
  EXPECT_LT(std::abs(mean_of(end) - 1.6), 3.0 * std_error(end));
}

TEST(WfPathSampler, NeutralFromBoundaryIsConstant) {
  const WfPathSampler s(KimuraOp1D::neutral(), 1e-3);
  RngStream rng(1);
  const auto r = s.run(0.0, 1.0, rng);
  EXPECT_EQ(r.fate, PathFate::at_zero);
  EXPECT_EQ(r.final_state, 0.0);
}

TEST(WfPathSampler, TransverseEndsNeverAbsorb) {
  WfPathOptions po;
  po.record = true;
  const WfPathSampler s(KimuraOp1D::wright_fisher(1.0, 1.0), 1e-3, po);
  for (std::uint64_t k = 0; k < 50; ++k) {
    RngStream rng(8, k);
    const auto r = s.run(0.05, 2.0, rng);
    EXPECT_EQ(r.fate, PathFate::unabsorbed);
    for (double x : r.trajectory) {
      EXPECT_GT(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
  }
}

TEST(WfPathSampler, RejectsStepsLargerThanTheCollar) {
  WfPathOptions po;
  po.delta = 0.05;
  EXPECT_THROW(WfPathSampler(KimuraOp1D::neutral(), 0.01, po), StepSizeError);
}

TEST(MonteCarlo, TrivialStartsAreExact) {
  McOptions opt;
  opt.dt = 1e-3;
  EXPECT_EQ(estimate_fixation(KimuraOp1D::neutral(), 0.0, 10, opt).mean, 0.0);
  EXPECT_EQ(estimate_fixation(KimuraOp1D::neutral(), 1.0, 10, opt).mean, 1.0);
  EXPECT_EQ(estimate_absorption_time(KimuraOp1D::neutral(), 0.0, 10, opt).mean, 0.0);
}

TEST(MonteCarlo, SelectedFixationMatchesHarmonicFunction) {
  // x(1-x) f'' + s x(1-x) f' = 0 with f(0)=0, f(1)=1: f = (1 - e^{-s x}) / (1 - e^{-s}).
  const double s = 2.0, x0 = 0.3;
  McOptions opt;
  opt.dt = 1e-3;
  opt.seed = 4;
  const auto e = estimate_fixation(KimuraOp1D::wright_fisher(0, 0, s), x0, 4000, opt);
  const double expect = (1 - std::exp(-s * x0)) / (1 - std::exp(-s));
  EXPECT_LT(std::abs(e.mean - expect), 3.0 * e.std_error) << e.mean << " vs " << expect;
  EXPECT_FALSE(e.flagged);
}

TEST(MonteCarlo, EstimatesDoNotDependOnWorkerCount) {
  McOptions a, b;
  a.dt = b.dt = 1e-3;
  a.workers = 1;
  b.workers = 3;
  const auto ea = estimate_absorption_time(KimuraOp1D::neutral(), 0.4, 200, a);
  const auto eb = estimate_absorption_time(KimuraOp1D::neutral(), 0.4, 200, b);
  EXPECT_EQ(ea.mean, eb.mean);
  EXPECT_EQ(ea.std_error, eb.std_error);
}
