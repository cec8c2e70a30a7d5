#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "secrecy/ergodic.hpp"

using namespace secrecy;

TEST(Draw, DeterministicPerTrial) {
  EnsembleSpec spec{5, 5, 5, 10, 99};
  const auto a = drawChannelPair(spec, 3), b = drawChannelPair(spec, 3), c = drawChannelPair(spec, 4);
  EXPECT_EQ(a.hb, b.hb);
  EXPECT_EQ(a.he, b.he);
  EXPECT_NE(a.hb, c.hb);
  spec.seed = 100;
  EXPECT_NE(drawChannelPair(spec, 3).hb, a.hb);
}

TEST(Draw, UnitSecondMoment) {
  EnsembleSpec spec{5, 5, 5, 500, 1};
  double acc = 0.0;
  long n = 0;
  for (int t = 0; t < 500; ++t) {
    const auto p = drawChannelPair(spec, t);
    acc += p.hb.squaredNorm() + p.he.squaredNorm();
    n += p.hb.size() + p.he.size();
  }
  EXPECT_NEAR(acc / n, 1.0, 0.05);
}

TEST(Draw, FullRankEve) {
  EnsembleSpec spec{5, 5, 3, 50, 5};
  for (int t = 0; t < 50; ++t) {
    const auto p = drawChannelPair(spec, t);
    EXPECT_EQ(linalg::numericalRank(p.he, 1e-10), 3);
    const auto bank = reduceToParallel(gsvd(p));
    EXPECT_EQ(bank.bobOnly.size(), 2u);
    EXPECT_EQ(bank.shared.size(), 3u);
  }
}

TEST(Ergodic, SingleTrialEqualsPipeline) {
  EnsembleSpec spec{5, 5, 3, 1, 8};
  const auto recs = ergodicSecrecyRate(spec, Constellation::qpsk(), {5.0}, {Method::Dual, Method::Uniform});
  const auto bank = reduceToParallel(gsvd(drawChannelPair(spec, 0)));
  SecrecyProblem prob{bank, Constellation::qpsk(), dbToLinear(5.0)};
  EXPECT_DOUBLE_EQ(recs[0].meanRate, secrecyRate(prob, dualDecomposition(prob)).totalRate);
  EXPECT_DOUBLE_EQ(recs[1].meanRate, secrecyRate(prob, uniformAllocation(prob)).totalRate);
  EXPECT_EQ(recs[0].trials, 1);
  EXPECT_EQ(recs[0].stdError, 0.0);
}

TEST(Ergodic, GaussianDualEqualsWaterFilling) {
  EnsembleSpec spec{4, 4, 3, 20, 13};
  ErgodicOptions opt;
  opt.solver.powerTol = 1e-13;
  opt.solver.rootTol = 1e-14;
  const std::vector<double> grid{-10.0, 0.0, 10.0, 20.0, 30.0};
  const auto recs =
      ergodicSecrecyRate(spec, Constellation::gaussian(), grid, {Method::Dual, Method::GaussianWF}, opt);
  for (size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(recs[2 * i].meanRate, recs[2 * i + 1].meanRate, 1e-6);
}

TEST(Ergodic, GaussianWaterFillingCollapsesForBpsk) {
  EnsembleSpec spec{5, 5, 5, 30, 42};
  const auto recs = ergodicSecrecyRate(spec, Constellation::bpsk(), {40.0}, {Method::GaussianWF});
  EXPECT_LT(recs[0].meanRate, 0.1);
}

TEST(Ergodic, BobOnlyFloor) {
  EnsembleSpec spec{5, 5, 3, 20, 42};
  const auto recs = ergodicSecrecyRate(spec, Constellation::qpsk(), {40.0}, {Method::Dual});
  EXPECT_GE(recs[0].meanRate, 2.0 * 2.0 - 0.1);
}

TEST(Ergodic, IndependentOfThreadCount) {
  EnsembleSpec spec{5, 5, 5, 12, 77};
  ErgodicOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const auto a = ergodicSecrecyRate(spec, Constellation::qpsk(), {0.0, 10.0}, {Method::Dual}, one);
  const auto b = ergodicSecrecyRate(spec, Constellation::qpsk(), {0.0, 10.0}, {Method::Dual}, three);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].meanRate, b[i].meanRate);
    EXPECT_EQ(a[i].stdError, b[i].stdError);
  }
}

TEST(Ergodic, FailuresAreCounted) {
  EnsembleSpec spec{5, 5, 5, 4, 1};
  ErgodicOptions opt;
  opt.solver.master = MasterUpdate::Subgradient;
  opt.solver.maxIters = 1;
  opt.solver.fallbackToBisection = false;
  const auto recs = ergodicSecrecyRate(spec, Constellation::bpsk(), {0.0}, {Method::Dual, Method::Uniform}, opt);
  EXPECT_EQ(recs[0].failures, 4);
  EXPECT_EQ(recs[0].trials, 0);
  EXPECT_TRUE(std::isnan(recs[0].meanRate));
  EXPECT_FALSE(recs[0].firstFailure.empty());
  EXPECT_EQ(recs[1].failures, 0);
}

TEST(Ergodic, RejectsBadRequests) {
  EnsembleSpec spec{5, 5, 5, 2, 1};
  EXPECT_THROW(ergodicSecrecyRate(spec, Constellation::bpsk(), {}, {Method::Dual}), InvalidInput);
  EXPECT_THROW(ergodicSecrecyRate(spec, Constellation::gaussian(), {0.0}, {Method::HighSnr}), InvalidInput);
  spec.trials = 0;
  EXPECT_THROW(ergodicSecrecyRate(spec, Constellation::bpsk(), {0.0}, {Method::Dual}), InvalidInput);
}

TEST(PartialCsi, ZeroUncertaintyIsExact) {
  EnsembleSpec spec{5, 5, 3, 5, 2};
  for (int t = 0; t < 5; ++t) {
    const auto g = gsvd(drawChannelPair(spec, t));
    const auto bank = reduceToParallel(g);
    for (const auto& c : {Constellation::bpsk(), Constellation::qam(16)}) {
      SecrecyProblem prob{bank, c, 10.0};
      const auto alloc = dualDecomposition(prob);
      const auto r = partialCsiRate(g, alloc, UncertaintyModel{0.0, 100, 1}, c);
      EXPECT_NEAR(r.raw, secrecyRate(prob, alloc).totalRate, 1e-9);
      for (double s2 : r.sigma2) EXPECT_EQ(s2, 1.0);
    }
  }
}

TEST(PartialCsi, InterferenceBookkeeping) {
  auto bank = ParallelChannelBank::make({1.0}, {{0, 0.7, 0.3, 1.0}}, {2.0}, 1);
  PowerAllocation alloc;
  alloc.p = {0.0, 3.0, 5.0, 0.0};
  const auto r = partialCsiRate(bank, alloc, UncertaintyModel{0.2, 10, 3}, Constellation::qpsk());
  EXPECT_DOUBLE_EQ(r.sigma2[0], 1.0 + 0.2 * 8.0);
  EXPECT_DOUBLE_EQ(r.sigma2[1], 1.0 + 0.2 * 5.0);
  EXPECT_DOUBLE_EQ(r.sigma2[2], 1.0 + 0.2 * 3.0);
  for (double s2 : r.sigma2) EXPECT_GE(s2, 1.0);
}

TEST(PartialCsi, MonteCarloMatchesRadialQuadrature) {
  // Bob-only leakage: |et|^2 = sigmaE2 omega X with X ~ Exp(1).
  auto bank = ParallelChannelBank::make({}, {}, {0.8});
  PowerAllocation alloc;
  alloc.p = {6.0};
  const double s2e = 0.05, omega = 0.8, p = 6.0;
  const auto c = Constellation::qpsk();
  const auto a = Alphabet::shared(c);
  const auto r = partialCsiRate(bank, alloc, UncertaintyModel{s2e, 20000, 5}, c);
  auto integrand = [&](double x) { return a->mutualInfo(s2e * x * p) * std::exp(-x); };
  const double leak = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 60.0, 15, 1e-12);
  const double expected = (a->mutualInfo(p / omega) - leak) / std::numbers::ln2;
  EXPECT_NEAR(r.raw, expected, 3.0 * r.stdError + 1e-12);
}

TEST(PartialCsi, RateDecreasesWithUncertainty) {
  EnsembleSpec spec{5, 5, 5, 1, 31};
  const auto g = gsvd(drawChannelPair(spec, 0));
  const auto bank = reduceToParallel(g);
  SecrecyProblem prob{bank, Constellation::bpsk(), 10.0};
  const auto alloc = dualDecomposition(prob);
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.0, 1e-3, 1e-2, 1e-1}) {
    const auto r = partialCsiRate(g, alloc, UncertaintyModel{s, 4000, 11}, prob.constellation);
    EXPECT_LE(r.raw, prev);
    EXPECT_EQ(r.clamped, std::max(0.0, r.raw));
    prev = r.raw;
  }
}

TEST(PartialCsi, EnsembleRecordsShareNoiseDraws) {
  EnsembleSpec spec{5, 5, 3, 6, 4};
  const auto recs = ergodicPartialCsi(spec, Constellation::bpsk(), {10.0}, {0.0, 1e-2}, Method::Dual);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].trials, 6);
  EXPECT_GT(recs[0].meanRate, recs[1].meanRate);
  const auto exact = ergodicSecrecyRate(spec, Constellation::bpsk(), {10.0}, {Method::Dual});
  EXPECT_NEAR(recs[0].meanRaw, exact[0].meanRate, 1e-9);
}
