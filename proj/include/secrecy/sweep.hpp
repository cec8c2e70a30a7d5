#pragma once

#include <string>
#include <vector>

#include "secrecy/scenario.hpp"

#ifndef SECRECY_VERSION
#define SECRECY_VERSION "unknown"
#endif

namespace secrecy {

inline constexpr const char* kVersion = SECRECY_VERSION;

struct SweepOutcome {
  std::string text;  // CSV or JSON artifact
  int failures = 0;
  std::string diagnostic;  // first failure, empty on success
};

namespace detail {

inline std::string joinNumbers(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + io::num(v[i]);
  return out;
}

inline std::string joinMethods(const std::vector<Method>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + methodName(v[i]);
  return out;
}

// Parameter echo as ordered key/value pairs; no absolute paths so artifacts stay relocatable.
inline std::vector<std::pair<std::string, std::string>> echo(const Scenario& s, const std::string& command,
                                                            const std::vector<double>& grid) {
  std::vector<std::pair<std::string, std::string>> kv{{"version", kVersion}, {"command", command}};
  if (s.ensemble) {
    kv.emplace_back("seed", std::to_string(s.ensemble->seed));
    kv.emplace_back("trials", std::to_string(s.ensemble->trials));
    kv.emplace_back("ma", std::to_string(s.ensemble->ma));
    kv.emplace_back("mb", std::to_string(s.ensemble->mb));
    kv.emplace_back("me", std::to_string(s.ensemble->me));
  } else {
    kv.emplace_back("seed", "none");
    kv.emplace_back("hb", s.hbPath.filename().string());
    kv.emplace_back("he", s.hePath.filename().string());
    if (s.rankTol) kv.emplace_back("rank_tol", io::num(*s.rankTol));
  }
  kv.emplace_back("constellation", Constellation::fromName(s.constellation).label());
  kv.emplace_back("methods", joinMethods(s.methods));
  kv.emplace_back("snr_db", joinNumbers(grid));
  kv.emplace_back("master", s.solver.master == MasterUpdate::Bisection ? "bisection" : "subgradient");
  kv.emplace_back("alpha", io::num(s.solver.alpha));
  kv.emplace_back("maxIters", std::to_string(s.solver.maxIters));
  kv.emplace_back("powerTol", io::num(s.solver.powerTol));
  kv.emplace_back("muTol", io::num(s.solver.muTol));
  kv.emplace_back("rhoCap", io::num(s.solver.rhoCap));
  kv.emplace_back("rootTol", io::num(s.solver.rootTol));
  kv.emplace_back("fallbackToBisection", s.solver.fallbackToBisection ? "true" : "false");
  if (!s.sigmaE2.empty()) {
    kv.emplace_back("sigma_e2", joinNumbers(s.sigmaE2));
    kv.emplace_back("noise_trials", std::to_string(s.uncertainty.noiseTrials));
    kv.emplace_back("noise_seed", std::to_string(s.uncertainty.seed));
  }
  return kv;
}

// A fixed pair is a one-trial ensemble with a known bank.
inline std::vector<SweepRecord> fixedPairSweep(const ParallelChannelBank& bank, const Constellation& c,
                                               const std::vector<double>& grid, const std::vector<Method>& methods,
                                               const SolverConfig& cfg) {
  std::vector<SweepRecord> out;
  for (double db : grid) {
    for (Method m : methods) {
      SweepRecord r{db, dbToLinear(db), m, c.label()};
      try {
        r.meanRate = methodRate(bank, c, m, r.pt, cfg);
        r.trials = 1;
      } catch (const SolverError& e) {
        r.meanRate = std::numeric_limits<double>::quiet_NaN();
        r.failures = 1;
        r.firstFailure = e.what();
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::vector<PartialCsiRecord> fixedPairPartialCsi(const GsvdResult& g, const Constellation& c,
                                                         const std::vector<double>& grid,
                                                         const std::vector<double>& sigmaE2, Method m,
                                                         const UncertaintyModel& base, const SolverConfig& cfg,
                                                         std::string& firstFailure) {
  const auto bank = reduceToParallel(g);
  std::vector<PartialCsiRecord> out;
  for (double db : grid) {
    PowerAllocation alloc;
    bool ok = true;
    try {
      alloc = methodAllocation(bank, c, m, dbToLinear(db), cfg);
    } catch (const SolverError& e) {
      ok = false;
      if (firstFailure.empty()) firstFailure = e.what();
    }
    for (double s2 : sigmaE2) {
      PartialCsiRecord r{db, s2, m, c.label()};
      if (ok) {
        UncertaintyModel u = base;
        u.sigmaE2 = s2;
        u.seed = streamSeed(base.seed, 0);
        const auto res = partialCsiRate(g, alloc, u, c);
        r.meanRate = res.clamped;
        r.meanRaw = res.raw;
        r.stdError = r.stdErrorRaw = res.stdError;
        r.trials = 1;
      } else {
        r.meanRate = r.meanRaw = std::numeric_limits<double>::quiet_NaN();
        r.failures = 1;
      }
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace detail

// One record per (snr, method), or per (snr, sigma_e2) when the scenario asks for partial CSI.
// Output bytes depend only on the scenario, the grid and the version.
inline SweepOutcome runSweep(const Scenario& s, const std::vector<double>& grid, const std::string& command = "sweep") {
  if (grid.empty()) throw InvalidInput("sweep: SNR grid is empty");
  const Constellation c = Constellation::fromName(s.constellation);
  ErgodicOptions opt{s.solver, s.threads};
  const auto kv = detail::echo(s, command, grid);
  const bool partial = !s.sigmaE2.empty();
  if (partial && s.methods.size() != 1) throw InvalidInput("partial CSI: exactly one method is evaluated");

  SweepOutcome out;
  std::vector<SweepRecord> recs;
  std::vector<PartialCsiRecord> precs;
  if (partial) {
    if (s.ensemble) {
      precs = ergodicPartialCsi(*s.ensemble, c, grid, s.sigmaE2, s.methods[0], s.uncertainty, opt);
    } else {
      const auto g = s.rankTol ? gsvd(*s.pair, *s.rankTol) : gsvd(*s.pair);
      precs = detail::fixedPairPartialCsi(g, c, grid, s.sigmaE2, s.methods[0], s.uncertainty, s.solver,
                                          out.diagnostic);
    }
    for (const auto& r : precs) out.failures += r.failures;
    if (out.failures && out.diagnostic.empty()) out.diagnostic = "solver failure in partial-CSI sweep";
  } else {
    if (c.isGaussian())
      for (Method m : s.methods)
        if (m == Method::HighSnr) throw InvalidInput("sweep: highSNR needs a finite alphabet");
    if (s.ensemble) {
      recs = ergodicSecrecyRate(*s.ensemble, c, grid, s.methods, opt);
    } else {
      const auto g = s.rankTol ? gsvd(*s.pair, *s.rankTol) : gsvd(*s.pair);
      recs = detail::fixedPairSweep(reduceToParallel(g), c, grid, s.methods, s.solver);
    }
    for (const auto& r : recs) {
      out.failures += r.failures;
      if (r.failures && out.diagnostic.empty())
        out.diagnostic = "snr_db=" + io::num(r.snrDb) + " method=" + methodName(r.method) + ": " + r.firstFailure;
    }
  }

  if (s.format == OutputFormat::Json) {
    io::json header = io::json::object();
    for (const auto& [k, v] : kv) header[k] = v;
    io::json rows = io::json::array();
    for (const auto& r : recs)
      rows.push_back({{"snr_db", r.snrDb}, {"method", methodName(r.method)}, {"constellation", r.constellation},
                      {"mean_rate_bits", r.meanRate}, {"stderr", r.stdError}, {"trials", r.trials},
                      {"failures", r.failures}});
    for (const auto& r : precs)
      rows.push_back({{"snr_db", r.snrDb}, {"sigma_e2", r.sigmaE2}, {"method", methodName(r.method)},
                      {"constellation", r.constellation}, {"mean_rate_bits", r.meanRate}, {"stderr", r.stdError},
                      {"mean_raw_bits", r.meanRaw}, {"stderr_raw", r.stdErrorRaw}, {"trials", r.trials},
                      {"failures", r.failures}});
    out.text = io::json{{"header", header}, {"records", rows}}.dump(2) + "\n";
    return out;
  }

  std::string text = "#";
  for (const auto& [k, v] : kv) text += " " + k + "=" + v;
  text += "\n";
  if (partial) {
    text += "snr_db,sigma_e2,method,constellation,mean_rate_bits,stderr,trials,mean_raw_bits,stderr_raw\n";
    for (const auto& r : precs)
      text += io::num(r.snrDb) + "," + io::num(r.sigmaE2) + "," + methodName(r.method) + "," + r.constellation + "," +
              io::num(r.meanRate) + "," + io::num(r.stdError) + "," + std::to_string(r.trials) + "," +
              io::num(r.meanRaw) + "," + io::num(r.stdErrorRaw) + "\n";
  } else {
    text += "snr_db,method,constellation,mean_rate_bits,stderr,trials\n";
    for (const auto& r : recs)
      text += io::num(r.snrDb) + "," + methodName(r.method) + "," + r.constellation + "," + io::num(r.meanRate) + "," +
              io::num(r.stdError) + "," + std::to_string(r.trials) + "\n";
  }
  out.text = std::move(text);
  return out;
}

inline std::string miTableCsv(const Constellation& c, double rhoMin, double rhoMax, int points) {
  if (!(rhoMin > 0.0) || !(rhoMax > rhoMin) || points < 2)
    throw InvalidInput("mi-table: need 0 < rho-min < rho-max and points >= 2");
  const auto a = Alphabet::shared(c);
  std::string text = "# version=" + std::string(kVersion) + " command=mi-table constellation=" + c.label() +
                     " rho_min=" + io::num(rhoMin) + " rho_max=" + io::num(rhoMax) +
                     " points=" + std::to_string(points) + "\nrho,I_bits,mmse\n";
  for (int i = 0; i < points; ++i) {
    const double rho = i == 0 ? rhoMin : i == points - 1 ? rhoMax : rhoMin * std::pow(rhoMax / rhoMin, double(i) / (points - 1));
    text += io::num(rho) + "," + io::num(a->mutualInfo(rho) / std::numbers::ln2) + "," + io::num(a->mmse(rho)) + "\n";
  }
  return text;
}

}  // namespace secrecy
