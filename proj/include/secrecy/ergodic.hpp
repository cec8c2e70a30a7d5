#pragma once

// Monte-Carlo evaluation over i.i.d. Rayleigh channel ensembles.
//
// Every trial owns an RNG stream derived from (seed, trialIndex), so results do not depend on
// scheduling or thread count. Means are accumulated in trial order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "secrecy/allocator.hpp"
#include "secrecy/closed_forms.hpp"
#include "secrecy/gsvd.hpp"

namespace secrecy {

struct EnsembleSpec {
  int ma = 5, mb = 5, me = 5;
  int trials = 500;
  std::uint64_t seed = 42;
  bool requireFullRankEve = true;
  int redrawLimit = 1000;

  void validate() const {
    if (ma < 1 || mb < 1 || me < 1) throw InvalidInput("ensemble: antenna counts must be positive");
    if (trials < 1) throw InvalidInput("ensemble: trials must be >= 1");
    if (redrawLimit < 1) throw InvalidInput("ensemble: redraw limit must be >= 1");
  }
};

struct UncertaintyModel {
  double sigmaE2 = 0.0;
  int noiseTrials = 2000;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(sigmaE2 >= 0.0) || !std::isfinite(sigmaE2)) throw InvalidInput("uncertainty: sigmaE2 must be >= 0");
    if (noiseTrials < 1) throw InvalidInput("uncertainty: noiseTrials must be >= 1");
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t streamSeed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

namespace detail {

inline CMatrix complexGaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline int defaultThreads() {
  if (const char* env = std::getenv("SECRECY_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n) on a small pool; rethrows the first exception.
template <class F>
void parallelFor(int n, int threads, F body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(errorMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Deterministic in (seed, trialIndex). Redraws until rank(He) = min(me, ma) when required.
inline ChannelPair drawChannelPair(const EnsembleSpec& spec, std::uint64_t trialIndex) {
  spec.validate();
  std::mt19937_64 rng(streamSeed(spec.seed, trialIndex));
  const double tol = defaultRankTol(spec.ma, spec.mb, spec.me);
  for (int attempt = 0; attempt < spec.redrawLimit; ++attempt) {
    ChannelPair pair{detail::complexGaussian(spec.mb, spec.ma, rng), detail::complexGaussian(spec.me, spec.ma, rng)};
    if (!spec.requireFullRankEve || linalg::numericalRank(pair.he, tol) == std::min(spec.me, spec.ma)) return pair;
  }
  throw SolverError("drawChannelPair: no full-rank Eve channel within " + std::to_string(spec.redrawLimit) +
                    " draws");
}

// Rate in bits achieved by `method` on one bank. highSNR returns the asymptotic rate of its
// allocation (independent of Pt); every other method reports the exact rate of its allocation.
inline double methodRate(const ParallelChannelBank& bank, const Constellation& c, Method method, double pt,
                         const SolverConfig& cfg = {}) {
  SecrecyProblem prob{bank, c, pt};
  switch (method) {
    case Method::Dual: return secrecyRate(prob, dualDecomposition(prob, cfg)).totalRate;
    case Method::GaussianWF: return secrecyRate(prob, gaussianAllocate(bank, pt)).totalRate;
    case Method::Uniform: return secrecyRate(prob, uniformAllocation(prob)).totalRate;
    case Method::LowSnr: return secrecyRate(prob, lowSnrAllocate(bank, pt, c.secondOrderOptimal())).totalRate;
    case Method::HighSnr: return highSnrRate(bank, c, highSnrAllocate(bank, c, cfg.rhoCap));
  }
  throw InvalidInput("unknown method");
}

inline PowerAllocation methodAllocation(const ParallelChannelBank& bank, const Constellation& c, Method method,
                                        double pt, const SolverConfig& cfg = {}) {
  SecrecyProblem prob{bank, c, pt};
  switch (method) {
    case Method::Dual: return dualDecomposition(prob, cfg);
    case Method::GaussianWF: return gaussianAllocate(bank, pt);
    case Method::Uniform: return uniformAllocation(prob);
    case Method::LowSnr: return lowSnrAllocate(bank, pt, c.secondOrderOptimal());
    case Method::HighSnr: return highSnrAllocate(bank, c, cfg.rhoCap);
  }
  throw InvalidInput("unknown method");
}

inline double dbToLinear(double db) { return std::pow(10.0, db / 10.0); }

struct SweepRecord {
  double snrDb = 0.0;
  double pt = 0.0;
  Method method = Method::Dual;
  std::string constellation;
  double meanRate = 0.0;  // bits
  double stdError = 0.0;
  int trials = 0;  // successful trials
  int failures = 0;
  std::string firstFailure;
};

struct ErgodicOptions {
  SolverConfig solver{};
  int threads = 0;  // 0 selects SECRECY_THREADS or the hardware count
};

namespace detail {

struct Accumulator {
  std::vector<double> value;
  std::vector<char> ok;
  std::vector<std::string> message;
};

inline void summarize(const Accumulator& acc, SweepRecord& rec) {
  double sum = 0.0;
  int n = 0;
  for (size_t t = 0; t < acc.value.size(); ++t) {
    if (!acc.ok[t]) {
      ++rec.failures;
      if (rec.firstFailure.empty()) rec.firstFailure = acc.message[t];
      continue;
    }
    sum += acc.value[t];
    ++n;
  }
  rec.trials = n;
  rec.meanRate = n > 0 ? sum / n : std::nan("");
  double ss = 0.0;
  for (size_t t = 0; t < acc.value.size(); ++t)
    if (acc.ok[t]) ss += (acc.value[t] - rec.meanRate) * (acc.value[t] - rec.meanRate);
  rec.stdError = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
}

}  // namespace detail

// One record per (snr, method), ordered by snr then method. Solver failures are counted per
// record and excluded from its mean.
inline std::vector<SweepRecord> ergodicSecrecyRate(const EnsembleSpec& spec, const Constellation& c,
                                                   const std::vector<double>& snrDb,
                                                   const std::vector<Method>& methods,
                                                   const ErgodicOptions& opt = {}) {
  spec.validate();
  opt.solver.validate();
  if (snrDb.empty()) throw InvalidInput("ergodic: SNR grid is empty");
  if (methods.empty()) throw InvalidInput("ergodic: no methods requested");
  if (c.isGaussian())
    for (Method m : methods)
      if (m == Method::HighSnr) throw InvalidInput("ergodic: highSNR needs a finite alphabet");
  Alphabet::shared(c);  // build the table before fanning out

  const size_t cells = snrDb.size() * methods.size();
  std::vector<detail::Accumulator> acc(cells);
  for (auto& a : acc) {
    a.value.assign(spec.trials, 0.0);
    a.ok.assign(spec.trials, 0);
    a.message.assign(spec.trials, {});
  }
  const int threads = opt.threads > 0 ? opt.threads : detail::defaultThreads();
  detail::parallelFor(spec.trials, threads, [&](int t) {
    ParallelChannelBank bank;
    try {
      bank = reduceToParallel(gsvd(drawChannelPair(spec, static_cast<std::uint64_t>(t))));
    } catch (const SolverError& e) {
      for (auto& a : acc) a.message[t] = e.what();
      return;
    }
    for (size_t i = 0; i < snrDb.size(); ++i) {
      for (size_t m = 0; m < methods.size(); ++m) {
        auto& a = acc[i * methods.size() + m];
        try {
          a.value[t] = methodRate(bank, c, methods[m], dbToLinear(snrDb[i]), opt.solver);
          a.ok[t] = 1;
        } catch (const SolverError& e) {
          a.message[t] = e.what();
        }
      }
    }
  });

  std::vector<SweepRecord> out;
  for (size_t i = 0; i < snrDb.size(); ++i) {
    for (size_t m = 0; m < methods.size(); ++m) {
      SweepRecord rec;
      rec.snrDb = snrDb[i];
      rec.pt = dbToLinear(snrDb[i]);
      rec.method = methods[m];
      rec.constellation = c.label();
      detail::summarize(acc[i * methods.size() + m], rec);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

struct PartialCsiResult {
  double raw = 0.0;  // bits, may be negative
  double clamped = 0.0;  // max(0, raw)
  double stdError = 0.0;  // Monte-Carlo standard error of raw
  std::vector<double> sigma2;  // per parallel channel; 1 + sigmaE2 (sum p - p_i) on channels 0..k-1
};

// Secrecy rate when Eve's true channel is the mean plus CN(0, sigmaE2) error and `alloc` was
// computed from the mean. Eve sees channel i at SNR |e_i' + et_i|^2 p_i / (sigma_i^2 omega_i),
// et_i ~ CN(0, sigmaE2 omega_i), with the cross terms treated as noise.
inline PartialCsiResult partialCsiRate(const ParallelChannelBank& bank, const PowerAllocation& alloc,
                                       const UncertaintyModel& u, const Constellation& c) {
  u.validate();
  bank.validate();
  if (static_cast<int>(alloc.p.size()) != bank.size()) throw InvalidInput("partialCsiRate: length mismatch");
  const auto a = Alphabet::shared(c);
  const int k = bank.k();
  double total = 0.0;
  for (int i = 0; i < k; ++i) total += alloc.p[i];

  PartialCsiResult res;
  res.sigma2.assign(bank.size(), 1.0);
  for (int i = 0; i < k; ++i) res.sigma2[i] = 1.0 + u.sigmaE2 * (total - alloc.p[i]);

  // Bob's term is deterministic; only Eve's leakage is averaged.
  double bob = 0.0;
  for (const auto& ch : bank.shared) bob += a->mutualInfo(ch.b2 * alloc.p[ch.index] / ch.omega);
  for (const auto& ch : bank.bobOnly) bob += a->mutualInfo(alloc.p[ch.index] / ch.omega);

  if (u.sigmaE2 == 0.0) {
    double eve = 0.0;
    for (const auto& ch : bank.shared) eve += a->mutualInfo(ch.e2 * alloc.p[ch.index] / ch.omega);
    res.raw = (bob - eve) / std::numbers::ln2;
    res.clamped = std::max(0.0, res.raw);
    return res;
  }

  std::mt19937_64 rng(u.seed);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < u.noiseTrials; ++t) {
    double eve = 0.0;
    for (const auto& ch : bank.shared) {
      const double p = alloc.p[ch.index];
      const cplx et = std::sqrt(u.sigmaE2 * ch.omega) * cplx(n(rng), n(rng));
      if (p == 0.0) continue;
      const double g = std::norm(std::sqrt(ch.e2) + et);
      eve += a->mutualInfo(g * p / (res.sigma2[ch.index] * ch.omega));
    }
    for (const auto& ch : bank.bobOnly) {
      const double p = alloc.p[ch.index];
      const cplx et = std::sqrt(u.sigmaE2 * ch.omega) * cplx(n(rng), n(rng));
      if (p == 0.0) continue;
      eve += a->mutualInfo(std::norm(et) * p / (res.sigma2[ch.index] * ch.omega));
    }
    sum += eve;
    sum2 += eve * eve;
  }
  const double mean = sum / u.noiseTrials;
  const double var = u.noiseTrials > 1 ? std::max(0.0, (sum2 - u.noiseTrials * mean * mean) / (u.noiseTrials - 1)) : 0.0;
  res.raw = (bob - mean) / std::numbers::ln2;
  res.clamped = std::max(0.0, res.raw);
  res.stdError = std::sqrt(var / u.noiseTrials) / std::numbers::ln2;
  return res;
}

inline PartialCsiResult partialCsiRate(const GsvdResult& g, const PowerAllocation& alloc, const UncertaintyModel& u,
                                       const Constellation& c) {
  return partialCsiRate(reduceToParallel(g), alloc, u, c);
}

struct PartialCsiRecord {
  double snrDb = 0.0;
  double sigmaE2 = 0.0;
  Method method = Method::Dual;
  std::string constellation;
  double meanRate = 0.0;  // clamped, bits
  double stdError = 0.0;
  double meanRaw = 0.0;
  double stdErrorRaw = 0.0;
  int trials = 0;
  int failures = 0;
};

// Ergodic partial-CSI rate: allocation from the mean channel, then the leakage expectation.
// The noise stream of trial t does not depend on sigmaE2, so sweeps over sigmaE2 share draws.
inline std::vector<PartialCsiRecord> ergodicPartialCsi(const EnsembleSpec& spec, const Constellation& c,
                                                       const std::vector<double>& snrDb,
                                                       const std::vector<double>& sigmaE2, Method method,
                                                       const UncertaintyModel& base = {},
                                                       const ErgodicOptions& opt = {}) {
  spec.validate();
  base.validate();
  if (snrDb.empty() || sigmaE2.empty()) throw InvalidInput("partial CSI: empty grid");
  for (double s : sigmaE2)
    if (!(s >= 0.0)) throw InvalidInput("partial CSI: sigma_e2 must be >= 0");
  Alphabet::shared(c);
  const size_t cells = snrDb.size() * sigmaE2.size();
  std::vector<detail::Accumulator> raw(cells), clamped(cells);
  for (size_t i = 0; i < cells; ++i) {
    for (auto* a : {&raw[i], &clamped[i]}) {
      a->value.assign(spec.trials, 0.0);
      a->ok.assign(spec.trials, 0);
      a->message.assign(spec.trials, {});
    }
  }
  const int threads = opt.threads > 0 ? opt.threads : detail::defaultThreads();
  detail::parallelFor(spec.trials, threads, [&](int t) {
    ParallelChannelBank bank;
    try {
      bank = reduceToParallel(gsvd(drawChannelPair(spec, static_cast<std::uint64_t>(t))));
    } catch (const SolverError& e) {
      return;
    }
    for (size_t i = 0; i < snrDb.size(); ++i) {
      PowerAllocation alloc;
      try {
        alloc = methodAllocation(bank, c, method, dbToLinear(snrDb[i]), opt.solver);
      } catch (const SolverError& e) {
        for (size_t j = 0; j < sigmaE2.size(); ++j) raw[i * sigmaE2.size() + j].message[t] = e.what();
        continue;
      }
      for (size_t j = 0; j < sigmaE2.size(); ++j) {
        UncertaintyModel u = base;
        u.sigmaE2 = sigmaE2[j];
        u.seed = streamSeed(base.seed, static_cast<std::uint64_t>(t));
        const auto r = partialCsiRate(bank, alloc, u, c);
        const size_t cell = i * sigmaE2.size() + j;
        raw[cell].value[t] = r.raw;
        raw[cell].ok[t] = 1;
        clamped[cell].value[t] = r.clamped;
        clamped[cell].ok[t] = 1;
      }
    }
  });
  std::vector<PartialCsiRecord> out;
  for (size_t i = 0; i < snrDb.size(); ++i) {
    for (size_t j = 0; j < sigmaE2.size(); ++j) {
      const size_t cell = i * sigmaE2.size() + j;
      SweepRecord r1, r2;
      detail::summarize(raw[cell], r1);
      detail::summarize(clamped[cell], r2);
      PartialCsiRecord rec;
      rec.snrDb = snrDb[i];
      rec.sigmaE2 = sigmaE2[j];
      rec.method = method;
      rec.constellation = c.label();
      rec.meanRate = r2.meanRate;
      rec.stdError = r2.stdError;
      rec.meanRaw = r1.meanRate;
      rec.stdErrorRaw = r1.stdError;
      rec.trials = r1.trials;
      rec.failures = r1.failures;
      out.push_back(rec);
    }
  }
  return out;
}

}  // namespace secrecy
