#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "secrecy/error.hpp"
#include "secrecy/gsvd.hpp"
#include "secrecy/mutual_info.hpp"

namespace secrecy {

enum class Method { Dual, GaussianWF, Uniform, LowSnr, HighSnr };

inline std::string methodName(Method m) {
  switch (m) {
    case Method::Dual: return "dual";
    case Method::GaussianWF: return "gaussianWF";
    case Method::Uniform: return "uniform";
    case Method::LowSnr: return "lowSNR";
    case Method::HighSnr: return "highSNR";
  }
  return "unknown";
}

inline Method parseMethod(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (ch != '-' && ch != '_') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "dual") return Method::Dual;
  if (s == "gaussian" || s == "gaussianwf" || s == "wf") return Method::GaussianWF;
  if (s == "uniform") return Method::Uniform;
  if (s == "lowsnr" || s == "low") return Method::LowSnr;
  if (s == "highsnr" || s == "high") return Method::HighSnr;
  throw InvalidInput("unknown method '" + raw + "'");
}

enum class MasterUpdate { Bisection, Subgradient };

struct SolverConfig {
  MasterUpdate master = MasterUpdate::Bisection;
  double alpha = 0.0;  // subgradient step; 0 selects 0.1 / Pt
  int maxIters = 5000;
  double powerTol = 1e-6;  // relative to Pt
  double muTol = 1e-12;
  double rhoCap = 1e4;  // normalized per-channel SNR ceiling
  double rootTol = 1e-9;  // relative, per-channel root finding
  bool fallbackToBisection = true;

  void validate() const {
    if (!(alpha >= 0.0)) throw InvalidInput("solver: alpha must be >= 0");
    if (maxIters < 1) throw InvalidInput("solver: maxIters must be >= 1");
    if (!(powerTol > 0.0)) throw InvalidInput("solver: powerTol must be > 0");
    if (!(rhoCap > 0.0)) throw InvalidInput("solver: rhoCap must be > 0");
    if (!(rootTol > 0.0)) throw InvalidInput("solver: rootTol must be > 0");
  }
};

struct SecrecyProblem {
  ParallelChannelBank bank;
  Constellation constellation;
  double pt = 1.0;

  void validate() const {
    if (!(pt > 0.0) || !std::isfinite(pt)) throw InvalidInput("problem: Pt must be finite and positive");
    bank.validate();
  }
};

struct PowerAllocation {
  std::vector<double> p;  // normalized variable, indexed by parallel channel
  double mu = 0.0;
  Method method = Method::Dual;
  std::string master;
  int iterations = 0;
  double residual = 0.0;  // |sum p - Pt|; unused budget when slack
  bool slack = false;
  std::vector<bool> active;
  std::vector<double> muHistory;  // subgradient iterates only

  double total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
  }
};

struct ChannelRate {
  int index;
  double rateBob;  // bits
  double rateEve;  // bits
  double secrecy;  // bits
};

struct SecrecyRateResult {
  double totalRate = 0.0;  // bits per channel use
  std::vector<ChannelRate> perChannel;
  PowerAllocation allocation;
};

// A shared channel with e2 = 0 behaves like a Bob-only channel of gain b2.
inline bool viable(const SharedChannel& ch) { return ch.b2 > ch.e2; }

// Stationary point of I(p/omega) - mu p: omega mmse^{-1}(min{1, mu omega}), capped at rhoCap omega.
inline double solveSubproblem2(const Alphabet& a, double omega, double mu, const SolverConfig& cfg = {}) {
  if (!(omega > 0.0)) throw InvalidInput("subproblem 2: omega must be positive");
  if (!(mu >= 0.0)) throw InvalidInput("subproblem 2: mu must be nonnegative");
  const double target = mu * omega;
  if (target >= 1.0) return 0.0;
  if (target == 0.0) return cfg.rhoCap * omega;
  return omega * a.mmseInverseCapped(target, cfg.rhoCap);
}

namespace detail {

// Root of a decreasing f on [lo, hi] with f(lo) > 0 >= f(hi). Returns the right end, so
// f(result) <= 0 always holds.
template <class F>
double bisectDecreasing(F f, double lo, double hi, double relTol) {
  for (int it = 0; it < 400 && hi - lo > relTol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace detail

// Unique positive zero p' of the mmse difference; +inf for the Gaussian input.
inline double unconstrainedSharedPower(const Alphabet& a, double b2, double e2, double omega,
                                       const SolverConfig& cfg = {}) {
  if (!(b2 > e2)) return 0.0;
  if (a.isGaussian() || e2 == 0.0) return std::numeric_limits<double>::infinity();
  auto f = [&](double p) { return a.mmseDifference(p, b2, e2, omega); };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw SolverError("subproblem 1: cannot bracket the mmse-difference zero");
  }
  return detail::bisectDecreasing(f, lo, hi, cfg.rootTol);
}

// Maximizer of I(b2 p/omega) - I(e2 p/omega) - mu p over p >= 0.
inline double solveSubproblem1(const Alphabet& a, double b2, double e2, double omega, double mu,
                               const SolverConfig& cfg = {}) {
  if (!(omega > 0.0)) throw InvalidInput("subproblem 1: omega must be positive");
  if (!(mu >= 0.0)) throw InvalidInput("subproblem 1: mu must be nonnegative");
  if (!(e2 >= 0.0) || !(b2 >= 0.0) || b2 > 1.0 || e2 > 1.0) throw InvalidInput("subproblem 1: gains out of range");
  if (b2 <= e2) return 0.0;
  if (e2 == 0.0) return solveSubproblem2(a, omega / b2, mu, cfg);
  if (mu >= (b2 - e2) / omega) return 0.0;
  const double cap = cfg.rhoCap * omega / b2;
  const double pPrime = unconstrainedSharedPower(a, b2, e2, omega, cfg);
  if (mu == 0.0) return std::min(pPrime, cap);
  auto f = [&](double p) { return a.mmseDifference(p, b2, e2, omega) - mu; };
  double hi = pPrime;
  if (!std::isfinite(hi)) {
    hi = omega;
    while (f(hi) > 0.0) {
      hi *= 2.0;
      if (hi > 1e300) throw SolverError("subproblem 1: cannot bracket stationarity root");
    }
  }
  if (!(f(hi) <= 0.0))
    throw SolverError("subproblem 1: bracket [0, p'] lost its sign change (b2=" + std::to_string(b2) +
                      ", e2=" + std::to_string(e2) + ", mu=" + std::to_string(mu) + ")");
  return detail::bisectDecreasing(f, 0.0, hi, cfg.rootTol);
}

namespace detail {

inline void requireLength(const SecrecyProblem& prob, const PowerAllocation& alloc) {
  if (static_cast<int>(alloc.p.size()) != prob.bank.size())
    throw InvalidInput("allocation length " + std::to_string(alloc.p.size()) + " does not match bank size " +
                       std::to_string(prob.bank.size()));
}

inline std::vector<double> subproblemPowers(const SecrecyProblem& prob, const Alphabet& a, double mu,
                                            const SolverConfig& cfg) {
  std::vector<double> p(prob.bank.size(), 0.0);
  for (const auto& ch : prob.bank.shared) p[ch.index] = solveSubproblem1(a, ch.b2, ch.e2, ch.omega, mu, cfg);
  for (const auto& ch : prob.bank.bobOnly) p[ch.index] = solveSubproblem2(a, ch.omega, mu, cfg);
  return p;
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Smallest mu at which every channel is switched off.
inline double muCeiling(const ParallelChannelBank& bank) {
  double hi = 0.0;
  for (const auto& ch : bank.shared)
    if (viable(ch)) hi = std::max(hi, (ch.b2 - ch.e2) / ch.omega);
  for (const auto& ch : bank.bobOnly) hi = std::max(hi, 1.0 / ch.omega);
  return hi;
}

inline void finish(PowerAllocation& out, double pt) {
  out.active.assign(out.p.size(), false);
  for (size_t i = 0; i < out.p.size(); ++i) out.active[i] = out.p[i] > 0.0;
  out.residual = std::abs(sum(out.p) - pt);
}

inline constexpr double kMuUnderflow = 1e-300;

inline PowerAllocation bisectMu(const SecrecyProblem& prob, const Alphabet& a, const SolverConfig& cfg) {
  PowerAllocation out;
  out.method = Method::Dual;
  out.master = "bisection";
  const double pt = prob.pt;
  const double tol = cfg.powerTol * pt;
  auto zero = subproblemPowers(prob, a, 0.0, cfg);
  if (sum(zero) <= pt + tol) {
    out.p = std::move(zero);
    out.mu = 0.0;
    out.slack = true;
    out.iterations = 1;
    finish(out, pt);
    return out;
  }
  double lo = 0.0, hi = muCeiling(prob.bank);
  std::vector<double> pHi = subproblemPowers(prob, a, hi, cfg);
  int it = 0;
  for (; it < cfg.maxIters; ++it) {
    // Saturated regime: mmse underflows, no representable mu > 0 spends the budget.
    if (hi <= kMuUnderflow) {
      out.p = std::move(pHi);
      out.mu = hi;
      out.slack = true;
      out.iterations = it + 1;
      finish(out, pt);
      return out;
    }
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 1e-3 * hi;
    if (!(mid > lo && mid < hi)) break;
    auto p = subproblemPowers(prob, a, mid, cfg);
    const double s = sum(p);
    if (std::abs(s - pt) <= tol) {
      out.p = std::move(p);
      out.mu = mid;
      out.iterations = it + 1;
      finish(out, pt);
      return out;
    }
    if (s > pt) {
      lo = mid;
    } else {
      hi = mid;
      pHi = std::move(p);
    }
  }
  const double residual = std::abs(sum(pHi) - pt);
  throw ConvergenceError("dual bisection did not reach |sum p - Pt| <= " + std::to_string(tol) +
                             " (residual " + std::to_string(residual) + ")",
                         pHi, hi, residual, it);
}

inline PowerAllocation subgradientMu(const SecrecyProblem& prob, const Alphabet& a, const SolverConfig& cfg) {
  PowerAllocation out;
  out.method = Method::Dual;
  out.master = "subgradient";
  const double pt = prob.pt;
  const double tol = cfg.powerTol * pt;
  const double alpha = cfg.alpha > 0.0 ? cfg.alpha : 0.1 / pt;
  double mu = 0.5 * muCeiling(prob.bank);
  std::vector<double> best;
  double bestMu = mu, bestResidual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.maxIters; ++it) {
    out.muHistory.push_back(mu);
    auto p = subproblemPowers(prob, a, mu, cfg);
    const double s = sum(p);
    const bool slack = mu <= cfg.muTol && s <= pt + tol;
    if (std::abs(s - pt) <= tol || slack) {
      out.p = std::move(p);
      out.mu = slack ? 0.0 : mu;
      out.slack = slack && std::abs(s - pt) > tol;
      out.iterations = it + 1;
      finish(out, pt);
      return out;
    }
    const double residual = s > pt ? s - pt : (mu > cfg.muTol ? pt - s : 0.0);
    if (residual < bestResidual) {
      bestResidual = residual;
      best = p;
      bestMu = mu;
    }
    mu = std::max(0.0, mu + alpha * (s - pt));
  }
  throw ConvergenceError("subgradient master update did not converge in " + std::to_string(cfg.maxIters) +
                             " iterations (best residual " + std::to_string(bestResidual) + ")",
                         best, bestMu, bestResidual, cfg.maxIters);
}

}  // namespace detail

// Dual-decomposition power allocation. The achieved primal point is returned; for finite
// alphabets it need not be globally optimal.
inline PowerAllocation dualDecomposition(const SecrecyProblem& prob, const SolverConfig& cfg = {}) {
  prob.validate();
  cfg.validate();
  const auto alphabet = Alphabet::shared(prob.constellation);
  if (detail::muCeiling(prob.bank) == 0.0) {
    PowerAllocation out;
    out.method = Method::Dual;
    out.master = "none";
    out.p.assign(prob.bank.size(), 0.0);
    out.slack = true;
    detail::finish(out, prob.pt);
    return out;
  }
  if (cfg.master == MasterUpdate::Bisection) return detail::bisectMu(prob, *alphabet, cfg);
  try {
    return detail::subgradientMu(prob, *alphabet, cfg);
  } catch (const ConvergenceError&) {
    if (!cfg.fallbackToBisection) throw;
    auto out = detail::bisectMu(prob, *alphabet, cfg);
    out.master = "subgradient+bisection";
    return out;
  }
}

// Splits Pt equally over the viable shared and Bob-only channels.
inline PowerAllocation uniformAllocation(const SecrecyProblem& prob) {
  prob.validate();
  PowerAllocation out;
  out.method = Method::Uniform;
  out.master = "none";
  out.p.assign(prob.bank.size(), 0.0);
  std::vector<int> idx;
  for (const auto& ch : prob.bank.shared)
    if (viable(ch)) idx.push_back(ch.index);
  for (const auto& ch : prob.bank.bobOnly) idx.push_back(ch.index);
  for (int i : idx) out.p[i] = prob.pt / static_cast<double>(idx.size());
  out.slack = idx.empty();
  detail::finish(out, prob.pt);
  return out;
}

// Secrecy objective in bits. Power on Eve-only, null, or non-viable shared channels is rejected.
inline SecrecyRateResult secrecyRate(const SecrecyProblem& prob, const PowerAllocation& alloc) {
  prob.validate();
  detail::requireLength(prob, alloc);
  for (double v : alloc.p)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("allocation entries must be finite and >= 0");
  for (const auto& ch : prob.bank.eveOnly)
    if (alloc.p[ch.index] != 0.0) throw InvalidInput("allocation puts power on an Eve-only channel");
  for (int i = prob.bank.k(); i < prob.bank.size(); ++i)
    if (alloc.p[i] != 0.0) throw InvalidInput("allocation puts power on a null-space direction");
  for (const auto& ch : prob.bank.shared)
    if (!viable(ch) && alloc.p[ch.index] != 0.0)
      throw InvalidInput("allocation puts power on a shared channel with b <= e");

  const auto a = Alphabet::shared(prob.constellation);
  const double toBits = 1.0 / std::numbers::ln2;
  SecrecyRateResult res;
  res.allocation = alloc;
  for (const auto& ch : prob.bank.shared) {
    const double p = alloc.p[ch.index];
    const double rb = a->mutualInfo(ch.b2 * p / ch.omega) * toBits;
    const double re = a->mutualInfo(ch.e2 * p / ch.omega) * toBits;
    res.perChannel.push_back({ch.index, rb, re, rb - re});
  }
  for (const auto& ch : prob.bank.bobOnly) {
    const double rb = a->mutualInfo(alloc.p[ch.index] / ch.omega) * toBits;
    res.perChannel.push_back({ch.index, rb, 0.0, rb});
  }
  for (const auto& c : res.perChannel) res.totalRate += c.secrecy;
  return res;
}

// Dual function value sum_i max_p [R_i(p) - mu p] + mu Pt, in nats.
inline double dualObjective(const SecrecyProblem& prob, double mu, const SolverConfig& cfg = {}) {
  const auto a = Alphabet::shared(prob.constellation);
  const auto p = detail::subproblemPowers(prob, *a, mu, cfg);
  double v = mu * prob.pt;
  for (const auto& ch : prob.bank.shared)
    v += a->mutualInfo(ch.b2 * p[ch.index] / ch.omega) - a->mutualInfo(ch.e2 * p[ch.index] / ch.omega) -
         mu * p[ch.index];
  for (const auto& ch : prob.bank.bobOnly) v += a->mutualInfo(p[ch.index] / ch.omega) - mu * p[ch.index];
  return v;
}

}  // namespace secrecy
