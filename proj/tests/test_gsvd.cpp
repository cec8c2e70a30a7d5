#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <vector>

#include "secrecy/gsvd.hpp"
#include "test_support.hpp"

using namespace secrecy;
using secrecy::testing::randomGaussian;

namespace {

ChannelPair randomPair(int ma, int mb, int me, std::mt19937_64& rng) {
  return {randomGaussian(mb, ma, rng), randomGaussian(me, ma, rng)};
}

// Subspace dimensions computed from explicit null spaces, independent of the CS route.
struct Dims {
  int k, r, s, nu;
};

Dims nullSpaceDims(const ChannelPair& pair, double tol) {
  CMatrix stacked(pair.mb() + pair.me(), pair.ma());
  stacked << pair.hb, pair.he;
  const CMatrix rowA = linalg::rowSpace(stacked, tol);
  const int k = static_cast<int>(rowA.cols());
  const int r = linalg::intersectionDim(linalg::nullSpace(pair.he, tol), rowA, 1e-8);
  const int nu = linalg::intersectionDim(linalg::nullSpace(pair.hb, tol), rowA, 1e-8);
  return {k, r, k - r - nu, nu};
}

void expectValid(const ChannelPair& pair, const GsvdResult& g) {
  EXPECT_EQ(g.nu + g.s + g.r, g.k);
  EXPECT_LE(linalg::unitarityError(g.psiA), 1e-10);
  EXPECT_LE(linalg::unitarityError(g.psiB), 1e-10);
  EXPECT_LE(linalg::unitarityError(g.psiE), 1e-10);
  const double nb = std::max(pair.hb.norm(), 1e-300);
  const double ne = std::max(pair.he.norm(), 1e-300);
  EXPECT_LE((pair.hb - g.reconstructHb()).norm(), 1e-8 * nb);
  EXPECT_LE((pair.he - g.reconstructHe()).norm(), 1e-8 * ne);
  for (int i = 0; i < g.s; ++i) {
    EXPECT_NEAR(g.db[i] * g.db[i] + g.de[i] * g.de[i], 1.0, 1e-10);
    EXPECT_GT(g.db[i], 0.0);
    EXPECT_LT(g.db[i], 1.0);
    EXPECT_GT(g.de[i], 0.0);
    EXPECT_LT(g.de[i], 1.0);
    if (i > 0) {
      EXPECT_LE(g.db[i - 1], g.db[i]);
      EXPECT_GE(g.de[i - 1], g.de[i]);
    }
  }
  for (double w : g.omegaDiag) EXPECT_GT(w, 0.0);
}

}  // namespace

TEST(Gsvd, IdentityBobNullEve) {
  ChannelPair pair{CMatrix::Identity(3, 3), CMatrix::Zero(3, 3)};
  const auto g = gsvd(pair);
  EXPECT_EQ(g.k, 3);
  EXPECT_EQ(g.r, 3);
  EXPECT_EQ(g.s, 0);
  EXPECT_EQ(g.nu, 0);
  for (double w : g.omegaDiag) EXPECT_NEAR(w, 1.0, 1e-12);
  // Omega is unitary up to column scaling: Omega^H Omega diagonal.
  const CMatrix gram = g.omega.adjoint() * g.omega;
  EXPECT_LE((gram - CMatrix(gram.diagonal().asDiagonal())).norm(), 1e-12);
  expectValid(pair, g);
}

TEST(Gsvd, MirrorCaseNullBob) {
  ChannelPair pair{CMatrix::Zero(3, 3), CMatrix::Identity(3, 3)};
  const auto g = gsvd(pair);
  EXPECT_EQ(g.k, 3);
  EXPECT_EQ(g.r, 0);
  EXPECT_EQ(g.s, 0);
  EXPECT_EQ(g.nu, 3);
  expectValid(pair, g);
}

TEST(Gsvd, RandomFiveByFiveByThree) {
  std::mt19937_64 rng(7);
  const auto pair = randomPair(5, 5, 3, rng);
  const auto g = gsvd(pair);
  EXPECT_EQ(g.k, 5);
  EXPECT_EQ(g.r, 2);
  EXPECT_EQ(g.s, 3);
  EXPECT_EQ(g.nu, 0);
  // r = dim(null(He) ∩ null(Hb)^perp) by explicit null-space computation.
  const double tol = 1e-10;
  const int r = linalg::intersectionDim(linalg::nullSpace(pair.he, tol), linalg::rowSpace(pair.hb, tol), 1e-8);
  EXPECT_EQ(r, 2);
  expectValid(pair, g);
}

TEST(Gsvd, ReconstructionAcrossShapes) {
  std::mt19937_64 rng(2024);
  const std::vector<std::array<int, 3>> shapes{{5, 5, 5}, {5, 5, 3}, {3, 5, 2}, {4, 2, 3},
                                              {2, 4, 4}, {6, 2, 2}, {1, 1, 1}, {4, 1, 1}};
  int count = 0;
  for (int rep = 0; rep < 15; ++rep) {
    for (const auto& sh : shapes) {
      const auto pair = randomPair(sh[0], sh[1], sh[2], rng);
      const auto g = gsvd(pair);
      expectValid(pair, g);
      const Dims d = nullSpaceDims(pair, 1e-10);
      EXPECT_EQ(g.k, d.k);
      EXPECT_EQ(g.r, d.r);
      EXPECT_EQ(g.s, d.s);
      EXPECT_EQ(g.nu, d.nu);
      ++count;
    }
  }
  EXPECT_GE(count, 100);
}

TEST(Gsvd, RankDeficientPair) {
  std::mt19937_64 rng(11);
  // Hb has rank 1, He has rank 2, both inside a 3-dimensional row space of a 5-antenna array.
  const CMatrix basis = randomGaussian(3, 5, rng);
  ChannelPair pair{randomGaussian(4, 1, rng) * basis.row(0), randomGaussian(3, 2, rng) * basis.bottomRows(2)};
  const auto g = gsvd(pair);
  EXPECT_EQ(g.k, 3);
  EXPECT_EQ(g.r, 1);
  EXPECT_EQ(g.nu, 2);
  EXPECT_EQ(g.s, 0);
  EXPECT_EQ(g.ma - g.k, 2);
  expectValid(pair, g);
  const Dims d = nullSpaceDims(pair, 1e-10);
  EXPECT_EQ(g.r, d.r);
  EXPECT_EQ(g.nu, d.nu);
}

TEST(Gsvd, ParallelizesBothReceivers) {
  std::mt19937_64 rng(5);
  const auto pair = randomPair(4, 2, 3, rng);
  const auto g = gsvd(pair);
  std::vector<double> p{0.3, 1.2, 0.7, 2.0};
  const CMatrix w = buildPrecoder(g, p);
  RVector sq(4);
  for (int i = 0; i < 4; ++i) sq(i) = std::sqrt(p[i]);
  CMatrix sel = CMatrix::Zero(g.k, g.ma);
  sel.leftCols(g.k).setIdentity();
  const CMatrix expectB = g.sigmaB() * sel * sq.cast<cplx>().asDiagonal();
  const CMatrix expectE = g.sigmaE() * sel * sq.cast<cplx>().asDiagonal();
  EXPECT_LE((g.psiB.adjoint() * pair.hb * w - expectB).norm(), 1e-9);
  EXPECT_LE((g.psiE.adjoint() * pair.he * w - expectE).norm(), 1e-9);
}

TEST(Gsvd, RejectsBadInput) {
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 1) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EXPECT_THROW(gsvd(ChannelPair{bad, CMatrix::Identity(2, 2)}), InvalidInput);
  EXPECT_THROW(gsvd(ChannelPair{CMatrix(2, 0), CMatrix(2, 0)}), InvalidInput);
  EXPECT_THROW(gsvd(ChannelPair{CMatrix::Identity(2, 3), CMatrix::Identity(2, 2)}), InvalidInput);
  EXPECT_THROW(gsvd(ChannelPair{CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)}, 0.0), InvalidInput);
}

TEST(Precoder, ZeroPowerGivesZero) {
  std::mt19937_64 rng(3);
  const auto g = gsvd(randomPair(3, 3, 2, rng));
  const CMatrix w = buildPrecoder(g, std::vector<double>(3, 0.0));
  EXPECT_EQ(w.norm(), 0.0);
}

TEST(Precoder, TraceMatchesOmegaWeightedPower) {
  const auto g = gsvd(ChannelPair{CMatrix::Identity(3, 3), CMatrix::Zero(3, 3)});
  const CMatrix w = buildPrecoder(g, std::vector<double>{1.0, 1.0, 1.0});
  EXPECT_NEAR((w * w.adjoint()).trace().real(), 3.0, 1e-12);

  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto gr = gsvd(randomPair(5, 3, 2, rng));
    std::vector<double> p(gr.ma);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (auto& v : p) v = u(rng);
    double expected = 0.0;
    for (int i = 0; i < gr.k; ++i) expected += gr.omegaDiag[i] * p[i];
    const CMatrix wr = buildPrecoder(gr, p);
    EXPECT_NEAR((wr * wr.adjoint()).trace().real(), expected, 1e-9 * expected);
  }
}

TEST(Precoder, EntriesBeyondRankAreIgnored) {
  std::mt19937_64 rng(4);
  // ma = 6 > mb + me = 4 leaves a 2-dimensional null block.
  const auto g = gsvd(randomPair(6, 2, 2, rng));
  ASSERT_EQ(g.k, 4);
  std::vector<double> p{1, 2, 3, 4, 0, 0};
  std::vector<double> q{1, 2, 3, 4, 5, 9};
  const CMatrix wp = buildPrecoder(g, p);
  const CMatrix wq = buildPrecoder(g, q);
  EXPECT_NEAR((wp * wp.adjoint()).trace().real(), (wq * wq.adjoint()).trace().real(), 1e-10);
}

TEST(Precoder, RejectsNegativePower) {
  const auto g = gsvd(ChannelPair{CMatrix::Identity(2, 2), CMatrix::Zero(2, 2)});
  EXPECT_THROW(buildPrecoder(g, std::vector<double>{1.0, -0.1}), InvalidInput);
  EXPECT_THROW(buildPrecoder(g, std::vector<double>{1.0}), InvalidInput);
}

TEST(Reduce, BobOnlyBank) {
  const auto bank = reduceToParallel(gsvd(ChannelPair{CMatrix::Identity(3, 3), CMatrix::Zero(3, 3)}));
  EXPECT_TRUE(bank.shared.empty());
  EXPECT_TRUE(bank.eveOnly.empty());
  ASSERT_EQ(bank.bobOnly.size(), 3u);
  EXPECT_EQ(bank.nullDim, 0);
}

TEST(Reduce, FullRankEveHasNoBobOnlyChannel) {
  std::mt19937_64 rng(17);
  const auto bank = reduceToParallel(gsvd(randomPair(5, 5, 5, rng)));
  EXPECT_TRUE(bank.bobOnly.empty());
  EXPECT_EQ(bank.shared.size(), 5u);
  EXPECT_TRUE(bank.eveOnly.empty());
}

TEST(Reduce, PartitionCoversEveryIndexOnce) {
  std::mt19937_64 rng(23);
  const std::vector<std::array<int, 3>> shapes{{5, 5, 3}, {4, 2, 3}, {6, 2, 2}, {3, 5, 2}};
  for (const auto& sh : shapes) {
    const auto g = gsvd(randomPair(sh[0], sh[1], sh[2], rng));
    const auto bank = reduceToParallel(g);
    EXPECT_EQ(static_cast<int>(bank.eveOnly.size()), g.nu);
    EXPECT_EQ(static_cast<int>(bank.shared.size()), g.s);
    EXPECT_EQ(static_cast<int>(bank.bobOnly.size()), g.r);
    EXPECT_EQ(bank.nullDim, g.ma - g.k);
    std::vector<int> seen(g.ma, 0);
    for (const auto& c : bank.eveOnly) seen[c.index]++;
    for (const auto& c : bank.shared) {
      seen[c.index]++;
      EXPECT_NEAR(c.b2 + c.e2, 1.0, 1e-10);
    }
    for (const auto& c : bank.bobOnly) seen[c.index]++;
    for (int i = g.k; i < g.ma; ++i) seen[i]++;
    for (int v : seen) EXPECT_EQ(v, 1);
    EXPECT_NO_THROW(bank.validate());
  }
  const auto g553 = gsvd(randomPair(5, 5, 3, rng));
  EXPECT_EQ(g553.r, 2);
  EXPECT_EQ(g553.s, 3);
  EXPECT_EQ(g553.nu, 0);
}

TEST(Reduce, PrecoderPowersUndoNormalization) {
  std::mt19937_64 rng(31);
  const auto g = gsvd(randomPair(5, 5, 3, rng));
  const auto bank = reduceToParallel(g);
  std::vector<double> p{0.5, 1.0, 1.5, 2.0, 2.5};
  const auto raw = precoderPowers(bank, p);
  const CMatrix w = buildPrecoder(g, raw);
  EXPECT_NEAR((w * w.adjoint()).trace().real(), 7.5, 1e-9);
}
