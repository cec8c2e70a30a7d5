#pragma once

// Generalized SVD of a wiretap channel pair and the parallel-channel reduction built on it.
//
//   Hb = PsiB * SigmaB * [Omega^-1 0] * PsiA^H
//   He = PsiE * SigmaE * [Omega^-1 0] * PsiA^H
//
// Column blocks of SigmaB / SigmaE (width k) are ordered Eve-only (nu), shared (s),
// Bob-only (r). Transmit directions beyond k reach neither receiver.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "secrecy/error.hpp"
#include "secrecy/linalg.hpp"

namespace secrecy {

struct ChannelPair {
  CMatrix hb;  // mb x ma
  CMatrix he;  // me x ma

  int ma() const { return static_cast<int>(hb.cols()); }
  int mb() const { return static_cast<int>(hb.rows()); }
  int me() const { return static_cast<int>(he.rows()); }

  void validate() const {
    if (hb.cols() == 0 || he.cols() == 0) throw InvalidInput("channel pair: m_a must be positive");
    if (hb.cols() != he.cols())
      throw InvalidInput("channel pair: Hb has " + std::to_string(hb.cols()) +
                         " columns but He has " + std::to_string(he.cols()));
    if (hb.rows() == 0 || he.rows() == 0)
      throw InvalidInput("channel pair: m_b and m_e must be positive");
    if (!linalg::allFinite(hb) || !linalg::allFinite(he))
      throw InvalidInput("channel pair: non-finite entry");
  }
};

inline double defaultRankTol(int ma, int mb, int me) {
  return 1e-10 * static_cast<double>(std::max(ma, mb + me));
}

struct GsvdResult {
  int ma = 0, mb = 0, me = 0;
  int k = 0;   // rank of [Hb; He]
  int r = 0;   // Bob-only directions
  int s = 0;   // shared directions
  int nu = 0;  // Eve-only directions, k - r - s

  CMatrix psiA;   // ma x ma
  CMatrix psiB;   // mb x mb
  CMatrix psiE;   // me x me
  CMatrix omega;  // k x k, nonsingular

  std::vector<double> db;         // b_1 <= ... <= b_s
  std::vector<double> de;         // e_1 >= ... >= e_s
  std::vector<double> omegaDiag;  // diag(Omega^H Omega), length k

  // ||offdiag(Omega^H Omega)||_F / ||diag(Omega^H Omega)||_2; ignored by the power constraint.
  double omegaOffDiagonal = 0.0;

  CMatrix sigmaB() const {
    CMatrix sb = CMatrix::Zero(mb, k);
    for (int i = 0; i < s; ++i) sb(mb - r - s + i, nu + i) = db[i];
    for (int t = 0; t < r; ++t) sb(mb - r + t, nu + s + t) = 1.0;
    return sb;
  }

  CMatrix sigmaE() const {
    CMatrix se = CMatrix::Zero(me, k);
    for (int t = 0; t < nu; ++t) se(t, t) = 1.0;
    for (int i = 0; i < s; ++i) se(nu + i, nu + i) = de[i];
    return se;
  }

  // [Omega^-1 0] PsiA^H, the k x ma right factor shared by both channels.
  CMatrix rightFactor() const {
    if (k == 0) return CMatrix::Zero(0, ma);
    return omega.inverse() * psiA.leftCols(k).adjoint();
  }

  CMatrix reconstructHb() const {
    if (k == 0) return CMatrix::Zero(mb, ma);
    return psiB * sigmaB() * rightFactor();
  }

  CMatrix reconstructHe() const {
    if (k == 0) return CMatrix::Zero(me, ma);
    return psiE * sigmaE() * rightFactor();
  }
};

namespace detail {

inline CMatrix completeUnitary(const CMatrix& cols, Eigen::Index n) {
  // Orthonormal completion of the given (orthonormal-ish) columns via Householder QR, with
  // column phases chosen so the leading columns match the input directions.
  if (cols.cols() == 0) return CMatrix::Identity(n, n);
  Eigen::HouseholderQR<CMatrix> qr(cols);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix& rq = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    const cplx d = rq(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

}  // namespace detail

// GSVD via an SVD of the stacked matrix followed by a CS decomposition of its left factor.
// A generalized pair counts as Bob-only when its Eve component is within rankTol of 0, and as
// Eve-only when its Bob component is within rankTol of 0.
inline GsvdResult gsvd(const ChannelPair& pair, double rankTol) {
  pair.validate();
  if (!(rankTol > 0.0) || !std::isfinite(rankTol)) throw InvalidInput("gsvd: rankTol must be positive");

  GsvdResult g;
  g.ma = pair.ma();
  g.mb = pair.mb();
  g.me = pair.me();
  const int ma = g.ma, mb = g.mb, me = g.me;

  CMatrix stacked(mb + me, ma);
  stacked << pair.hb, pair.he;

  Eigen::JacobiSVD<CMatrix> outer(stacked, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const int k = linalg::numericalRank(outer.singularValues(), rankTol);
  g.k = k;

  if (k == 0) {
    g.psiA = CMatrix::Identity(ma, ma);
    g.psiB = CMatrix::Identity(mb, mb);
    g.psiE = CMatrix::Identity(me, me);
    g.omega = CMatrix(0, 0);
    return g;
  }

  const CMatrix u1 = outer.matrixU().leftCols(k);
  const RVector s1 = outer.singularValues().head(k);
  const CMatrix v1 = outer.matrixV().leftCols(k);
  const CMatrix qb = u1.topRows(mb);
  const CMatrix qe = u1.bottomRows(me);

  // CS decomposition: qb = Ub C Z^H, and qe Z has orthogonal columns of norm sqrt(1 - c^2).
  Eigen::JacobiSVD<CMatrix> inner(qb, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix& ub = inner.matrixU();
  const CMatrix& z = inner.matrixV();
  std::vector<double> c(k, 0.0);
  for (Eigen::Index i = 0; i < inner.singularValues().size(); ++i)
    c[i] = std::min(1.0, inner.singularValues()(i));
  const CMatrix y = qe * z;
  std::vector<double> sn(k);
  for (int j = 0; j < k; ++j) sn[j] = y.col(j).norm();

  std::vector<int> eveIdx, sharedIdx, bobIdx;
  for (int j = 0; j < k; ++j) {
    if (sn[j] <= rankTol)
      bobIdx.push_back(j);
    else if (c[j] <= rankTol)
      eveIdx.push_back(j);
    else
      sharedIdx.push_back(j);
  }
  std::stable_sort(sharedIdx.begin(), sharedIdx.end(),
                   [&](int a, int b) { return c[a] / std::hypot(c[a], sn[a]) < c[b] / std::hypot(c[b], sn[b]); });

  g.nu = static_cast<int>(eveIdx.size());
  g.s = static_cast<int>(sharedIdx.size());
  g.r = static_cast<int>(bobIdx.size());

  std::vector<int> perm;
  perm.insert(perm.end(), eveIdx.begin(), eveIdx.end());
  perm.insert(perm.end(), sharedIdx.begin(), sharedIdx.end());
  perm.insert(perm.end(), bobIdx.begin(), bobIdx.end());

  CMatrix zp(k, k);
  for (int j = 0; j < k; ++j) zp.col(j) = z.col(perm[j]);

  for (int idx : sharedIdx) {
    const double t = std::hypot(c[idx], sn[idx]);
    g.db.push_back(c[idx] / t);
    g.de.push_back(sn[idx] / t);
  }

  // Bob side: rows of SigmaB below the zero block pick up the singular vectors of qb.
  g.psiB = CMatrix(mb, mb);
  {
    std::vector<bool> used(mb, false);
    const int top = mb - g.r - g.s;
    for (int i = 0; i < g.s; ++i) {
      g.psiB.col(top + i) = ub.col(sharedIdx[i]);
      used[sharedIdx[i]] = true;
    }
    for (int t = 0; t < g.r; ++t) {
      g.psiB.col(mb - g.r + t) = ub.col(bobIdx[t]);
      used[bobIdx[t]] = true;
    }
    int next = 0;
    for (int j = 0; j < mb; ++j)
      if (!used[j]) g.psiB.col(next++) = ub.col(j);
  }

  // Eve side: normalized columns of qe Z for the Eve-only and shared blocks, completed to unitary.
  {
    CMatrix active(me, g.nu + g.s);
    for (int j = 0; j < g.nu + g.s; ++j) active.col(j) = y.col(perm[j]);
    g.psiE = detail::completeUnitary(active, me);
  }

  // Right factor X = Zp^H S1 V1^H = [Omega^-1 0] PsiA^H; QR of X^H gives PsiA and Omega^-1 = R^H.
  const CMatrix x = zp.adjoint() * s1.cast<cplx>().asDiagonal() * v1.adjoint();
  Eigen::HouseholderQR<CMatrix> qr(x.adjoint());
  g.psiA = qr.householderQ() * CMatrix::Identity(ma, ma);
  const CMatrix rk = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  g.omega = rk.adjoint().inverse();

  const CMatrix gram = g.omega.adjoint() * g.omega;
  g.omegaDiag.resize(k);
  double diagNorm2 = 0.0, offNorm2 = 0.0;
  for (int i = 0; i < k; ++i) {
    g.omegaDiag[i] = gram(i, i).real();
    diagNorm2 += g.omegaDiag[i] * g.omegaDiag[i];
    for (int j = 0; j < k; ++j)
      if (i != j) offNorm2 += std::norm(gram(i, j));
  }
  g.omegaOffDiagonal = std::sqrt(offNorm2 / diagNorm2);
  return g;
}

inline GsvdResult gsvd(const ChannelPair& pair) {
  return gsvd(pair, defaultRankTol(pair.ma(), pair.mb(), pair.me()));
}

// W = PsiA B P^(1/2), B = [Omega 0; 0 0]. tr(W W^H) = sum_{i<k} omega_i p_i.
inline CMatrix buildPrecoder(const GsvdResult& g, std::span<const double> p) {
  if (static_cast<int>(p.size()) != g.ma)
    throw InvalidInput("buildPrecoder: power vector length " + std::to_string(p.size()) +
                       " != m_a = " + std::to_string(g.ma));
  for (double v : p)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("buildPrecoder: negative or non-finite power entry");
  CMatrix b = CMatrix::Zero(g.ma, g.ma);
  if (g.k > 0) b.topLeftCorner(g.k, g.k) = g.omega;
  RVector sq(g.ma);
  for (int i = 0; i < g.ma; ++i) sq(i) = std::sqrt(p[i]);
  return g.psiA * b * sq.cast<cplx>().asDiagonal();
}

struct EveOnlyChannel {
  int index;
  double gainEve;  // 1 / omega_i
};

struct SharedChannel {
  int index;
  double b2;
  double e2;
  double omega;
};

struct BobOnlyChannel {
  int index;
  double omega;
};

// Parallel subchannels with 0-based indices laid out as
// [0, nu) Eve-only, [nu, nu+s) shared, [k-r, k) Bob-only, [k, ma) null.
// Allocations over this bank are in the normalized power variable (transmit power per
// subchannel); the effective SNRs are b2 p / omega, e2 p / omega and p / omega.
struct ParallelChannelBank {
  std::vector<EveOnlyChannel> eveOnly;
  std::vector<SharedChannel> shared;
  std::vector<BobOnlyChannel> bobOnly;
  int nullDim = 0;

  int k() const { return static_cast<int>(eveOnly.size() + shared.size() + bobOnly.size()); }
  int size() const { return k() + nullDim; }

  void validate() const {
    int expected = 0;
    for (const auto& ch : eveOnly) {
      if (ch.index != expected++ || !(ch.gainEve > 0.0)) throw InvalidInput("bank: malformed Eve-only channel");
    }
    for (const auto& ch : shared) {
      if (ch.index != expected++) throw InvalidInput("bank: shared channel index out of order");
      if (!(ch.omega > 0.0) || !(ch.b2 >= 0.0) || !(ch.e2 >= 0.0) || ch.b2 > 1.0 || ch.e2 > 1.0)
        throw InvalidInput("bank: shared channel gains out of range");
    }
    for (const auto& ch : bobOnly) {
      if (ch.index != expected++ || !(ch.omega > 0.0)) throw InvalidInput("bank: malformed Bob-only channel");
    }
    if (nullDim < 0) throw InvalidInput("bank: negative null dimension");
  }

  // Builds a bank with contiguous indices; used for synthetic problems.
  static ParallelChannelBank make(std::vector<double> eveOmega,
                                  std::vector<SharedChannel> sharedGains,
                                  std::vector<double> bobOmega, int nullDim = 0) {
    ParallelChannelBank bank;
    int idx = 0;
    for (double w : eveOmega) bank.eveOnly.push_back({idx++, 1.0 / w});
    for (auto ch : sharedGains) {
      ch.index = idx++;
      bank.shared.push_back(ch);
    }
    for (double w : bobOmega) bank.bobOnly.push_back({idx++, w});
    bank.nullDim = nullDim;
    bank.validate();
    return bank;
  }
};

inline ParallelChannelBank reduceToParallel(const GsvdResult& g) {
  if (static_cast<int>(g.omegaDiag.size()) != g.k || static_cast<int>(g.db.size()) != g.s ||
      g.nu + g.s + g.r != g.k)
    throw InvalidInput("reduceToParallel: inconsistent GSVD result");
  ParallelChannelBank bank;
  for (int i = 0; i < g.nu; ++i) bank.eveOnly.push_back({i, 1.0 / g.omegaDiag[i]});
  for (int i = 0; i < g.s; ++i)
    bank.shared.push_back({g.nu + i, g.db[i] * g.db[i], g.de[i] * g.de[i], g.omegaDiag[g.nu + i]});
  for (int j = g.k - g.r; j < g.k; ++j) bank.bobOnly.push_back({j, g.omegaDiag[j]});
  bank.nullDim = g.ma - g.k;
  return bank;
}

// Converts a normalized allocation (one entry per subchannel) into the diagonal of P used by
// buildPrecoder: p_i / omega_i on the first k entries, zero on the null block.
inline std::vector<double> precoderPowers(const ParallelChannelBank& bank, std::span<const double> p) {
  if (static_cast<int>(p.size()) != bank.size()) throw InvalidInput("precoderPowers: length mismatch");
  std::vector<double> out(p.size(), 0.0);
  for (const auto& ch : bank.eveOnly) out[ch.index] = p[ch.index] * ch.gainEve;
  for (const auto& ch : bank.shared) out[ch.index] = p[ch.index] / ch.omega;
  for (const auto& ch : bank.bobOnly) out[ch.index] = p[ch.index] / ch.omega;
  return out;
}

}  // namespace secrecy
