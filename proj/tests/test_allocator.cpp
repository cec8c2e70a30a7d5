#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/tools/roots.hpp>

#include "secrecy/allocator.hpp"
#include "secrecy/closed_forms.hpp"
#include "test_support.hpp"

using namespace secrecy;

namespace {

SolverConfig tightConfig() {
  SolverConfig cfg;
  cfg.powerTol = 1e-13;
  cfg.rootTol = 1e-14;
  return cfg;
}

// Random bank with paired gains b2 + e2 = 1 and log-uniform omega.
ParallelChannelBank randomBank(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nEve(0, 2), nShared(0, 4), nBob(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto omega = [&] { return std::exp(std::log(0.1) + u(rng) * std::log(100.0)); };
  int s, r;
  do {
    s = nShared(rng);
    r = nBob(rng);
  } while (s + r == 0);
  std::vector<double> eve(nEve(rng)), bob(r);
  for (auto& w : eve) w = omega();
  for (auto& w : bob) w = omega();
  std::vector<SharedChannel> shared;
  for (int i = 0; i < s; ++i) {
    const double b2 = 0.02 + 0.96 * u(rng);
    shared.push_back({0, b2, 1.0 - b2, omega()});
  }
  // Keep at least one channel viable.
  if (r == 0 && std::none_of(shared.begin(), shared.end(), viable)) std::swap(shared[0].b2, shared[0].e2);
  return ParallelChannelBank::make(eve, shared, bob, 1);
}

ParallelChannelBank bankFromEnsemble(int ma, int mb, int me, uint64_t seed) {
  std::mt19937_64 rng(seed);
  ChannelPair pair{secrecy::testing::randomGaussian(mb, ma, rng), secrecy::testing::randomGaussian(me, ma, rng)};
  return reduceToParallel(gsvd(pair));
}

}  // namespace

TEST(Subproblem2, Anchors) {
  const auto g = Alphabet::shared(Constellation::gaussian());
  const auto q = Alphabet::shared(Constellation::qpsk());
  EXPECT_NEAR(solveSubproblem2(*g, 1.0, 0.5), 1.0, 1e-12);
  EXPECT_EQ(solveSubproblem2(*q, 2.0, 0.5), 0.0);
  EXPECT_EQ(solveSubproblem2(*q, 2.0, 0.7), 0.0);
  SolverConfig cfg;
  EXPECT_DOUBLE_EQ(solveSubproblem2(*q, 3.0, 0.0, cfg), cfg.rhoCap * 3.0);
  for (double mu : {0.01, 0.3, 0.9}) EXPECT_NEAR(solveSubproblem2(*g, 1.0, mu), 1.0 / mu - 1.0, 1e-8 / mu);
}

TEST(Subproblem1, ZeroCases) {
  const auto b = Alphabet::shared(Constellation::bpsk());
  EXPECT_EQ(solveSubproblem1(*b, 0.5, 0.5, 1.0, 0.0), 0.0);
  EXPECT_EQ(solveSubproblem1(*b, 0.3, 0.7, 1.0, 0.0), 0.0);
  EXPECT_EQ(solveSubproblem1(*b, 0.8, 0.2, 2.0, (0.8 - 0.2) / 2.0), 0.0);
  EXPECT_EQ(solveSubproblem1(*b, 0.8, 0.2, 2.0, 0.31), 0.0);
  EXPECT_GT(solveSubproblem1(*b, 0.8, 0.2, 2.0, 0.29), 0.0);
}

TEST(Subproblem1, UnconstrainedZeroMatchesGridScan) {
  const auto b = Alphabet::shared(Constellation::bpsk());
  auto f = [&](double p) { return b->mmseDifference(p, 0.8, 0.2, 1.0); };
  // Sign scan on a fine grid, then a bracketing root finder inside the detected cell.
  double cellLo = 0.0, step = 1e-3;
  while (f(cellLo + step) > 0.0) cellLo += step;
  boost::uintmax_t iters = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(f, cellLo, cellLo + step,
                                                    boost::math::tools::eps_tolerance<double>(50), iters);
  const double oracle = 0.5 * (lo + hi);
  const double p = solveSubproblem1(*b, 0.8, 0.2, 1.0, 0.0);
  EXPECT_NEAR(p, oracle, 1e-8);
  // Same zero from the untabulated mmse.
  auto fd = [&](double x) {
    const auto c = Constellation::bpsk();
    return 0.8 * directMmse(c, 0.8 * x) - 0.2 * directMmse(c, 0.2 * x);
  };
  iters = 200;
  auto [dlo, dhi] = boost::math::tools::toms748_solve(fd, cellLo - 0.01, cellLo + 0.01,
                                                      boost::math::tools::eps_tolerance<double>(50), iters);
  EXPECT_NEAR(p, 0.5 * (dlo + dhi), 1e-4 * p);
}

TEST(Subproblem1, StationarityHoldsInterior) {
  for (const auto& c : {Constellation::bpsk(), Constellation::qam(16)}) {
    const auto a = Alphabet::shared(c);
    for (double mu : {0.01, 0.1, 0.4}) {
      const double p = solveSubproblem1(*a, 0.7, 0.3, 0.8, mu);
      ASSERT_GT(p, 0.0);
      EXPECT_NEAR(a->mmseDifference(p, 0.7, 0.3, 0.8), mu, 1e-7);
      EXPECT_LT(p, unconstrainedSharedPower(*a, 0.7, 0.3, 0.8));
    }
  }
}

TEST(Dual, GaussianMatchesWaterFilling) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cfg = tightConfig();
  for (int trial = 0; trial < 100; ++trial) {
    const auto bank = randomBank(rng);
    const double pt = std::exp(std::log(0.1) + u(rng) * std::log(1000.0));
    SecrecyProblem prob{bank, Constellation::gaussian(), pt};
    const auto dual = dualDecomposition(prob, cfg);
    const auto wf = gaussianAllocate(bank, pt);
    for (int i = 0; i < bank.size(); ++i) EXPECT_NEAR(dual.p[i], wf.p[i], 1e-6) << "trial " << trial << " i " << i;
    EXPECT_NEAR(secrecyRate(prob, dual).totalRate, gaussianRate(bank, wf), 1e-8) << "trial " << trial;
  }
}

TEST(Dual, RateNondecreasingInPower) {
  const auto bank = bankFromEnsemble(5, 5, 5, 11);
  double prev = 0.0;
  for (int db = -10; db <= 40; db += 2) {
    SecrecyProblem prob{bank, Constellation::bpsk(), std::pow(10.0, db / 10.0)};
    const double r = secrecyRate(prob, dualDecomposition(prob)).totalRate;
    EXPECT_GE(r, prev - 1e-6) << db << " dB";
    prev = r;
  }
}

TEST(Dual, LargeBudgetIsSlack) {
  const auto bank = bankFromEnsemble(5, 5, 5, 3);
  ASSERT_TRUE(bank.bobOnly.empty());
  SecrecyProblem prob{bank, Constellation::bpsk(), 1e4};
  const auto alloc = dualDecomposition(prob);
  EXPECT_TRUE(alloc.slack);
  EXPECT_EQ(alloc.mu, 0.0);
  EXPECT_LT(alloc.total(), prob.pt);
  const auto a = Alphabet::shared(prob.constellation);
  for (const auto& ch : bank.shared)
    EXPECT_DOUBLE_EQ(alloc.p[ch.index], solveSubproblem1(*a, ch.b2, ch.e2, ch.omega, 0.0));
}

TEST(Dual, TightBudgetMeetsTolerance) {
  const auto bank = bankFromEnsemble(5, 5, 3, 5);
  for (double pt : {0.1, 3.0, 100.0}) {
    SecrecyProblem prob{bank, Constellation::qpsk(), pt};
    SolverConfig cfg;
    const auto alloc = dualDecomposition(prob, cfg);
    EXPECT_FALSE(alloc.slack);
    EXPECT_GT(alloc.mu, 0.0);
    EXPECT_LE(std::abs(alloc.total() - pt), cfg.powerTol * pt);
    EXPECT_LE(alloc.mu * std::abs(alloc.total() - pt), cfg.powerTol * pt * alloc.mu + 1e-15);
  }
}

TEST(Dual, EmptyBankGivesZero) {
  auto bank = ParallelChannelBank::make({1.0, 2.0}, {{0, 0.3, 0.7, 1.0}}, {}, 2);
  SecrecyProblem prob{bank, Constellation::qpsk(), 5.0};
  const auto alloc = dualDecomposition(prob);
  EXPECT_EQ(alloc.total(), 0.0);
  EXPECT_EQ(secrecyRate(prob, alloc).totalRate, 0.0);
}

TEST(Dual, NeverAllocatesToEveOrWeakChannels) {
  auto bank = ParallelChannelBank::make({0.5}, {{0, 0.4, 0.6, 1.0}, {0, 0.7, 0.3, 1.5}, {0, 0.5, 0.5, 1.0}}, {2.0}, 1);
  for (const auto& c : {Constellation::bpsk(), Constellation::qam(16), Constellation::gaussian()}) {
    SecrecyProblem prob{bank, c, 4.0};
    const auto alloc = dualDecomposition(prob);
    EXPECT_EQ(alloc.p[0], 0.0);
    EXPECT_EQ(alloc.p[1], 0.0);
    EXPECT_EQ(alloc.p[3], 0.0);
    EXPECT_EQ(alloc.p[5], 0.0);
    EXPECT_GT(alloc.p[2], 0.0);
    EXPECT_GT(alloc.p[4], 0.0);
  }
}

TEST(Dual, SaturationCeiling) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const auto bank = bankFromEnsemble(5, 5, 3, seed);
    for (const auto& c : {Constellation::bpsk(), Constellation::qpsk(), Constellation::qam(16)}) {
      SecrecyProblem prob{bank, c, 1e4};
      const double r = secrecyRate(prob, dualDecomposition(prob)).totalRate;
      const double ceiling = static_cast<double>(bank.shared.size() + bank.bobOnly.size()) * std::log2(c.size());
      EXPECT_LE(r, ceiling + 1e-9);
    }
  }
}

TEST(Dual, SubgradientAgreesWithBisection) {
  const auto bank = bankFromEnsemble(5, 5, 5, 9);
  for (double pt : {0.5, 2.0, 10.0}) {
    SecrecyProblem prob{bank, Constellation::qpsk(), pt};
    SolverConfig sg;
    sg.master = MasterUpdate::Subgradient;
    sg.fallbackToBisection = false;
    sg.powerTol = 1e-7;
    const auto a = dualDecomposition(prob, sg);
    const auto b = dualDecomposition(prob);
    EXPECT_EQ(a.master, "subgradient");
    EXPECT_NEAR(secrecyRate(prob, a).totalRate, secrecyRate(prob, b).totalRate, 1e-5) << pt;
    EXPECT_NEAR(a.mu, b.mu, 1e-4 * std::max(1.0, b.mu)) << pt;
  }
}

TEST(Dual, DualObjectiveNonincreasingAlongSubgradient) {
  const auto bank = bankFromEnsemble(5, 5, 5, 21);
  SecrecyProblem prob{bank, Constellation::qpsk(), 2.0};
  SolverConfig sg;
  sg.master = MasterUpdate::Subgradient;
  sg.fallbackToBisection = false;
  const auto alloc = dualDecomposition(prob, sg);
  ASSERT_GT(alloc.muHistory.size(), 2u);
  double prev = dualObjective(prob, alloc.muHistory.front());
  for (size_t i = 1; i < alloc.muHistory.size(); ++i) {
    const double v = dualObjective(prob, alloc.muHistory[i]);
    EXPECT_LE(v, prev + 1e-9) << "iterate " << i;
    prev = v;
  }
}

TEST(Dual, SubgradientFailureCarriesBestIterate) {
  const auto bank = bankFromEnsemble(5, 5, 5, 4);
  SecrecyProblem prob{bank, Constellation::bpsk(), 3.0};
  SolverConfig sg;
  sg.master = MasterUpdate::Subgradient;
  sg.maxIters = 3;
  sg.fallbackToBisection = false;
  try {
    dualDecomposition(prob, sg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 3);
    EXPECT_EQ(static_cast<int>(e.bestPower().size()), bank.size());
    EXPECT_GT(e.residual(), 0.0);
  }
  sg.fallbackToBisection = true;
  const auto alloc = dualDecomposition(prob, sg);
  EXPECT_EQ(alloc.master, "subgradient+bisection");
}

TEST(Rate, Anchors) {
  auto bob = ParallelChannelBank::make({}, {}, {1.0});
  SecrecyProblem g{bob, Constellation::gaussian(), 1.0};
  PowerAllocation alloc;
  alloc.p = {1.0};
  EXPECT_NEAR(secrecyRate(g, alloc).totalRate, 1.0, 1e-12);
  alloc.p = {0.0};
  EXPECT_EQ(secrecyRate(g, alloc).totalRate, 0.0);

  // b2 = 1, e2 = 0 shared channel behaves as Bob-only.
  auto degenerate = ParallelChannelBank::make({}, {{0, 1.0, 0.0, 1.0}}, {});
  SecrecyProblem prob{degenerate, Constellation::bpsk(), 1e5};
  const auto dual = dualDecomposition(prob);
  const auto a = Alphabet::shared(prob.constellation);
  EXPECT_NEAR(secrecyRate(prob, dual).totalRate, a->mutualInfo(dual.p[0]) / std::numbers::ln2, 1e-12);
  EXPECT_NEAR(secrecyRate(prob, dual).totalRate, 1.0, 1e-6);
}

TEST(Rate, RejectsForbiddenPower) {
  auto bank = ParallelChannelBank::make({1.0}, {{0, 0.3, 0.7, 1.0}}, {1.0}, 1);
  SecrecyProblem prob{bank, Constellation::qpsk(), 1.0};
  PowerAllocation alloc;
  alloc.p = {0.1, 0.0, 0.0, 0.0};
  EXPECT_THROW(secrecyRate(prob, alloc), InvalidInput);
  alloc.p = {0.0, 0.1, 0.0, 0.0};
  EXPECT_THROW(secrecyRate(prob, alloc), InvalidInput);
  alloc.p = {0.0, 0.0, 0.0, 0.1};
  EXPECT_THROW(secrecyRate(prob, alloc), InvalidInput);
  alloc.p = {0.0, 0.0, 0.1};
  EXPECT_THROW(secrecyRate(prob, alloc), InvalidInput);
}

TEST(Uniform, SplitsEvenly) {
  std::vector<SharedChannel> five(5, SharedChannel{0, 0.7, 0.3, 1.0});
  auto bank = ParallelChannelBank::make({}, five, {});
  const auto alloc = uniformAllocation({bank, Constellation::qpsk(), 10.0});
  for (double p : alloc.p) EXPECT_DOUBLE_EQ(p, 2.0);

  auto one = ParallelChannelBank::make({1.0}, {{0, 0.4, 0.6, 1.0}}, {3.0});
  const auto single = uniformAllocation({one, Constellation::qpsk(), 7.0});
  EXPECT_EQ(single.p, (std::vector<double>{0.0, 0.0, 7.0}));

  auto none = ParallelChannelBank::make({1.0}, {{0, 0.4, 0.6, 1.0}}, {});
  EXPECT_EQ(uniformAllocation({none, Constellation::qpsk(), 7.0}).total(), 0.0);
}

TEST(Config, RejectsBadValues) {
  SolverConfig cfg;
  cfg.powerTol = 0.0;
  auto bank = ParallelChannelBank::make({}, {}, {1.0});
  EXPECT_THROW(dualDecomposition({bank, Constellation::qpsk(), 1.0}, cfg), InvalidInput);
  EXPECT_THROW(dualDecomposition({bank, Constellation::qpsk(), -1.0}), InvalidInput);
  EXPECT_EQ(parseMethod("low-snr"), Method::LowSnr);
  EXPECT_EQ(parseMethod("gaussian"), Method::GaussianWF);
  EXPECT_THROW(parseMethod("greedy"), InvalidInput);
}
