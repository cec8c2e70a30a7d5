#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include "secrecy/sweep.hpp"

using namespace secrecy;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kSolver = 2, kIo = 3 };

std::string buildInfo() {
  return std::string("secrecy ") + kVersion + "\ncompiler: " + __VERSION__ + "\neigen: " +
         std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION) + "\nboost: " + BOOST_LIB_VERSION + "\nthreads: " +
         std::to_string(secrecy::detail::defaultThreads()) + " (SECRECY_THREADS overrides)\n";
}

// "-" or empty writes to stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  io::writeText(path, text);
}

std::vector<double> splitNumbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw InvalidInput("bad number '" + item + "' in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidInput("empty number list");
  return out;
}

struct EnsembleFlags {
  std::string scenario;
  std::optional<int> ma, mb, me, trials, threads;
  std::optional<std::uint64_t> seed;
  std::string constellation, methods, snrDb, out, format;

  void attach(CLI::App* cmd, bool scenarioRequired) {
    auto* opt = cmd->add_option("--scenario", scenario, "JSON scenario file");
    if (scenarioRequired) opt->required();
    opt->check(CLI::ExistingFile);
    cmd->add_option("--ma", ma, "Alice antennas");
    cmd->add_option("--mb", mb, "Bob antennas");
    cmd->add_option("--me", me, "Eve antennas");
    cmd->add_option("--trials", trials, "channel realizations");
    cmd->add_option("--seed", seed, "ensemble seed");
    cmd->add_option("--threads", threads, "worker threads (0 = SECRECY_THREADS or hardware)");
    cmd->add_option("--constellation", constellation, "bpsk, qpsk, 16qam, 64qam, gaussian, ...");
    cmd->add_option("--snr-db", snrDb, "start:stop:step or a single value");
    cmd->add_option("--out", out, "output file, '-' for stdout");
    cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }

  Scenario resolve() const {
    Scenario s;
    if (!scenario.empty()) {
      s = parseScenario(scenario);
    } else {
      s.ensemble = EnsembleSpec{};
    }
    const bool antennas = ma || mb || me;
    if (s.pair && (antennas || trials || seed)) throw InvalidInput("ensemble flags conflict with an explicit pair");
    if (s.ensemble) {
      if (ma) s.ensemble->ma = *ma;
      if (mb) s.ensemble->mb = *mb;
      if (me) s.ensemble->me = *me;
      if (trials) s.ensemble->trials = *trials;
      if (seed) s.ensemble->seed = *seed;
      s.ensemble->validate();
    }
    if (threads) s.threads = *threads;
    if (!constellation.empty()) {
      Constellation::fromName(constellation);
      s.constellation = constellation;
    }
    if (!methods.empty()) s.methods = parseMethodList(methods);
    if (!snrDb.empty()) s.snrDb = parseSnrGrid(snrDb);
    if (!out.empty()) s.outputPath = out;
    if (format == "json") s.format = OutputFormat::Json;
    if (format == "csv") s.format = OutputFormat::Csv;
    if (s.snrDb.empty()) throw InvalidInput("no SNR grid: pass --snr-db or set snr_db in the scenario");
    return s;
  }
};

int runSweepCommand(const Scenario& s, const std::string& command) {
  const auto outcome = runSweep(s, s.snrDb, command);
  emit(s.outputPath.string(), outcome.text);
  if (outcome.failures) {
    std::cerr << "secrecy " << command << ": " << outcome.failures << " solver failure(s); first: "
              << outcome.diagnostic << "\n";
    return kSolver;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secrecy-rate precoding and power allocation for MIMO wiretap channels"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "print build metadata");

  auto* gsvdCmd = app.add_subcommand("gsvd", "GSVD of a channel pair given as JSON matrix files");
  std::string hbPath, hePath, gsvdOut;
  bool full = false;
  std::optional<double> rankTol;
  gsvdCmd->add_option("--hb", hbPath, "Bob channel matrix file")->required()->check(CLI::ExistingFile);
  gsvdCmd->add_option("--he", hePath, "Eve channel matrix file")->required()->check(CLI::ExistingFile);
  gsvdCmd->add_flag("--full", full, "include the unitary factors and Omega");
  gsvdCmd->add_option("--rank-tol", rankTol, "relative singular-value threshold");
  gsvdCmd->add_option("--out", gsvdOut, "output file, '-' for stdout");

  auto* miCmd = app.add_subcommand("mi-table", "tabulate I (bits) and mmse against SNR");
  std::string miConst = "qpsk", miOut;
  double rhoMin = 1e-4, rhoMax = 1e4;
  int points = 513;
  miCmd->add_option("--constellation", miConst, "constellation label");
  miCmd->add_option("--rho-min", rhoMin, "smallest SNR (linear)");
  miCmd->add_option("--rho-max", rhoMax, "largest SNR (linear)");
  miCmd->add_option("--points", points, "log-spaced points");
  miCmd->add_option("--out", miOut, "output CSV, '-' for stdout");

  auto* allocCmd = app.add_subcommand("allocate", "power allocation for one channel pair");
  std::string allocScenario, allocConst, allocMethod, allocOut = "json";
  std::optional<double> powerDb, power;
  std::uint64_t trialIndex = 0;
  allocCmd->add_option("--scenario", allocScenario, "JSON scenario file")->required()->check(CLI::ExistingFile);
  allocCmd->add_option("--constellation", allocConst, "constellation label");
  auto* pdb = allocCmd->add_option("--power-db", powerDb, "total power in dB (unit noise)");
  allocCmd->add_option("--power", power, "total power (linear)")->excludes(pdb);
  allocCmd->add_option("--method", allocMethod, "dual, gaussian, uniform, low-snr, high-snr");
  allocCmd->add_option("--trial", trialIndex, "ensemble realization to allocate for");
  allocCmd->add_option("--out", allocOut, "json, csv, or an output file (.json or .csv)");

  auto* sweepCmd = app.add_subcommand("sweep", "SNR sweep defined by a scenario file");
  EnsembleFlags sweepFlags;
  sweepFlags.attach(sweepCmd, true);
  sweepCmd->add_option("--methods", sweepFlags.methods, "all or a comma-separated list");

  auto* ergCmd = app.add_subcommand("ergodic", "ergodic secrecy rate over an i.i.d. Rayleigh ensemble");
  EnsembleFlags ergFlags;
  ergFlags.attach(ergCmd, false);
  auto* ergMethods = ergCmd->add_option("--methods", ergFlags.methods, "all or a comma-separated list");
  ergCmd->add_option("--method", ergFlags.methods, "single method")->excludes(ergMethods);

  auto* pcCmd = app.add_subcommand("partial-csi", "ergodic rate with imperfect Eve CSI");
  EnsembleFlags pcFlags;
  pcFlags.attach(pcCmd, false);
  std::string sigmaList;
  std::optional<int> noiseTrials;
  std::optional<std::uint64_t> noiseSeed;
  pcCmd->add_option("--method", pcFlags.methods, "allocation method computed from the mean channel");
  pcCmd->add_option("--sigma-e2", sigmaList, "comma-separated Eve estimation-error variances");
  pcCmd->add_option("--noise-trials", noiseTrials, "Monte-Carlo draws of the error per realization");
  pcCmd->add_option("--noise-seed", noiseSeed, "error-draw seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (version) {
      std::cout << buildInfo();
      return kOk;
    }
    if (*gsvdCmd) {
      const ChannelPair pair{io::readMatrix(hbPath), io::readMatrix(hePath)};
      const auto g = rankTol ? gsvd(pair, *rankTol) : gsvd(pair);
      emit(gsvdOut, io::gsvdToJson(g, full).dump(2) + "\n");
      return kOk;
    }
    if (*miCmd) {
      emit(miOut, miTableCsv(Constellation::fromName(miConst), rhoMin, rhoMax, points));
      return kOk;
    }
    if (*allocCmd) {
      Scenario s = parseScenario(allocScenario);
      if (!allocConst.empty()) s.constellation = allocConst;
      if (!allocMethod.empty()) s.methods = {parseMethod(allocMethod)};
      if (powerDb) s.pt = dbToLinear(*powerDb);
      if (power) {
        if (!(*power > 0.0)) throw InvalidInput("--power must be positive");
        s.pt = *power;
      }
      if (!s.pt) throw InvalidInput("no power: pass --power-db or set power/power_db in the scenario");
      if (s.methods.size() != 1) throw InvalidInput("allocate evaluates exactly one method");
      const ChannelPair pair = s.pair ? *s.pair : drawChannelPair(*s.ensemble, trialIndex);
      const auto g = s.rankTol ? gsvd(pair, *s.rankTol) : gsvd(pair);
      const Constellation c = Constellation::fromName(s.constellation);
      SecrecyProblem prob{reduceToParallel(g), c, *s.pt};
      const Method m = s.methods[0];
      if (m == Method::HighSnr && c.isGaussian()) throw InvalidInput("highSNR needs a finite alphabet");
      const auto alloc = methodAllocation(prob.bank, c, m, prob.pt, s.solver);
      const double rate = methodRate(prob.bank, c, m, prob.pt, s.solver);
      const bool toFile = allocOut != "json" && allocOut != "csv";
      const bool csv = allocOut == "csv" || (toFile && allocOut.size() > 4 &&
                                             allocOut.compare(allocOut.size() - 4, 4, ".csv") == 0);
      std::string text;
      if (csv) {
        text = "# version=" + std::string(kVersion) + " command=allocate method=" + methodName(m) +
               " constellation=" + c.label() + " pt=" + io::num(prob.pt) + " mu=" + io::num(alloc.mu) +
               " rate_bits=" + io::num(rate) + "\nindex,kind,b2,e2,omega,p\n";
        auto row = [&](int i, const char* kind, double b2, double e2, double omega) {
          text += std::to_string(i) + "," + kind + "," + io::num(b2) + "," + io::num(e2) + "," + io::num(omega) +
                  "," + io::num(alloc.p[i]) + "\n";
        };
        for (const auto& ch : prob.bank.eveOnly) row(ch.index, "eve_only", 0.0, 1.0, 1.0 / ch.gainEve);
        for (const auto& ch : prob.bank.shared) row(ch.index, "shared", ch.b2, ch.e2, ch.omega);
        for (const auto& ch : prob.bank.bobOnly) row(ch.index, "bob_only", 1.0, 0.0, ch.omega);
      } else {
        text = io::allocationToJson(prob, alloc, rate).dump(2) + "\n";
      }
      emit(toFile ? allocOut : "-", text);
      return kOk;
    }
    if (*sweepCmd) return runSweepCommand(sweepFlags.resolve(), "sweep");
    if (*ergCmd) {
      Scenario s = ergFlags.resolve();
      if (!s.sigmaE2.empty()) throw InvalidInput("the scenario asks for partial CSI; use partial-csi");
      return runSweepCommand(s, "ergodic");
    }
    if (*pcCmd) {
      Scenario s = pcFlags.resolve();
      if (!sigmaList.empty()) s.sigmaE2 = splitNumbers(sigmaList);
      if (s.sigmaE2.empty()) throw InvalidInput("no sigma_e2: pass --sigma-e2");
      for (double x : s.sigmaE2)
        if (!(x >= 0.0)) throw InvalidInput("--sigma-e2 values must be >= 0");
      if (noiseTrials) s.uncertainty.noiseTrials = *noiseTrials;
      if (noiseSeed) s.uncertainty.seed = *noiseSeed;
      s.uncertainty.validate();
      return runSweepCommand(s, "partial-csi");
    }
    std::cout << app.help();
    return kInvalid;
  } catch (const InvalidInput& e) {
    std::cerr << "secrecy: " << e.what() << "\n";
    return kInvalid;
  } catch (const SolverError& e) {
    std::cerr << "secrecy: solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "secrecy: " << e.what() << "\n";
    return kIo;
  }
}
