#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "secrecy/ergodic.hpp"
#include "secrecy/io.hpp"

namespace secrecy {

enum class OutputFormat { Csv, Json };

struct Scenario {
  std::filesystem::path source;
  std::optional<ChannelPair> pair;  // exactly one of pair / ensemble
  std::optional<EnsembleSpec> ensemble;
  std::filesystem::path hbPath, hePath;
  std::optional<double> rankTol;

  std::string constellation = "qpsk";
  std::vector<Method> methods{Method::Dual};
  std::optional<double> pt;  // linear, allocate only
  std::vector<double> snrDb;
  SolverConfig solver{};
  int threads = 0;

  std::vector<double> sigmaE2;  // non-empty selects the partial-CSI evaluator
  UncertaintyModel uncertainty{};

  std::filesystem::path outputPath;
  OutputFormat format = OutputFormat::Csv;
};

inline std::vector<Method> allMethods() {
  return {Method::Dual, Method::GaussianWF, Method::Uniform, Method::LowSnr, Method::HighSnr};
}

// "all" or a comma-separated list; duplicates collapse, order is kept.
inline std::vector<Method> parseMethodList(const std::string& text) {
  if (text == "all") return allMethods();
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parseMethod(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw InvalidInput("empty method list");
  return out;
}

// "a:b:step" inclusive, or a single value "a". Points are a + i*step, snapped to 1e-9.
inline std::vector<double> parseSnrGrid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0' || !std::isfinite(v)) throw InvalidInput("bad SNR grid '" + text + "'");
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw InvalidInput("SNR grid must be 'start:stop:step', got '" + text + "'");
  const double a = parts[0], b = parts[1], step = parts[2];
  if (!(step > 0.0)) throw InvalidInput("SNR grid step must be positive");
  if (b < a) throw InvalidInput("SNR grid stop is below start");
  const long n = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
  if (n > 100000) throw InvalidInput("SNR grid has too many points");
  std::vector<double> out;
  for (long i = 0; i < n; ++i) out.push_back(std::round((a + i * step) * 1e9) / 1e9);
  return out;
}

namespace detail {

class FieldReader {
 public:
  FieldReader(const std::string& text, std::string name) : text_(text), name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw InvalidInput(name_ + ":" + std::to_string(line(field)) + ": field '" + field + "': " + msg);
  }

  // Line of the first `"key":` occurrence; 1 when absent.
  int line(const std::string& field) const {
    const std::string leaf = field.substr(field.rfind('.') == std::string::npos ? 0 : field.rfind('.') + 1);
    const std::string needle = "\"" + leaf + "\"";
    for (std::size_t pos = text_.find(needle); pos != std::string::npos; pos = text_.find(needle, pos + 1)) {
      std::size_t q = pos + needle.size();
      while (q < text_.size() && std::isspace(static_cast<unsigned char>(text_[q]))) ++q;
      if (q < text_.size() && text_[q] == ':') return io::lineAt(text_, pos);
    }
    return 1;
  }

  void allowOnly(const io::json& obj, const std::string& prefix, const std::set<std::string>& keys) const {
    for (const auto& [k, v] : obj.items())
      if (!keys.count(k)) fail(prefix + k, "unknown field");
  }

  double number(const io::json& v, const std::string& field) const {
    if (!v.is_number()) fail(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(field, "must be finite");
    return x;
  }

  double positive(const io::json& v, const std::string& field) const {
    const double x = number(v, field);
    if (!(x > 0.0)) fail(field, "must be positive");
    return x;
  }

  long integer(const io::json& v, const std::string& field, long lo) const {
    if (!v.is_number_integer()) fail(field, "expected an integer");
    const long x = v.get<long>();
    if (x < lo) fail(field, "must be >= " + std::to_string(lo));
    return x;
  }

  std::string string(const io::json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const io::json& v, const std::string& field) const {
    if (!v.is_boolean()) fail(field, "expected true or false");
    return v.get<bool>();
  }

 private:
  const std::string& text_;
  std::string name_;
};

}  // namespace detail

inline Scenario parseScenarioText(const std::string& text, const std::filesystem::path& source) {
  namespace fs = std::filesystem;
  const std::string name = source.string();
  const io::json root = io::parseJsonText(text, name);
  detail::FieldReader rd(text, name);
  if (!root.is_object()) throw InvalidInput(name + ":1: scenario must be a JSON object");
  rd.allowOnly(root, "",
               {"ma", "mb", "me", "trials", "seed", "ensemble", "channels", "rank_tol", "constellation", "method",
                "methods", "power", "power_db", "snr_db", "solver", "threads", "partial_csi", "output"});

  Scenario s;
  s.source = source;
  const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");

  // Ensemble: either top-level ma/mb/me or an "ensemble" object.
  const bool flat = root.contains("ma") || root.contains("mb") || root.contains("me");
  if (flat && root.contains("ensemble")) rd.fail("ensemble", "give antenna counts either at top level or here");
  if (flat || root.contains("ensemble")) {
    const io::json& e = flat ? root : root["ensemble"];
    const std::string pre = flat ? "" : "ensemble.";
    if (!flat) {
      if (!e.is_object()) rd.fail("ensemble", "expected an object");
      rd.allowOnly(e, pre, {"ma", "mb", "me", "trials", "seed"});
    }
    EnsembleSpec spec;
    for (const char* key : {"ma", "mb", "me"})
      if (!e.contains(key)) rd.fail(pre + key, "required for an ensemble");
    spec.ma = static_cast<int>(rd.integer(e["ma"], pre + "ma", 1));
    spec.mb = static_cast<int>(rd.integer(e["mb"], pre + "mb", 1));
    spec.me = static_cast<int>(rd.integer(e["me"], pre + "me", 1));
    if (e.contains("trials")) spec.trials = static_cast<int>(rd.integer(e["trials"], pre + "trials", 1));
    if (e.contains("seed")) spec.seed = static_cast<std::uint64_t>(rd.integer(e["seed"], pre + "seed", 0));
    s.ensemble = spec;
  }
  if (!flat && !root.contains("ensemble"))
    for (const char* key : {"trials", "seed"})
      if (root.contains(key)) rd.fail(key, "only valid with an ensemble");

  if (root.contains("channels")) {
    const io::json& c = root["channels"];
    if (!c.is_object()) rd.fail("channels", "expected an object with hb and he");
    rd.allowOnly(c, "channels.", {"hb", "he"});
    for (const char* key : {"hb", "he"})
      if (!c.contains(key)) rd.fail(std::string("channels.") + key, "required");
    s.hbPath = base / rd.string(c["hb"], "channels.hb");
    s.hePath = base / rd.string(c["he"], "channels.he");
    for (const auto& [field, p] : {std::pair{"channels.hb", s.hbPath}, std::pair{"channels.he", s.hePath}})
      if (!fs::exists(p)) rd.fail(field, "file '" + p.string() + "' does not exist");
    ChannelPair pair{io::readMatrix(s.hbPath), io::readMatrix(s.hePath)};
    if (pair.hb.cols() != pair.he.cols()) rd.fail("channels", "hb and he need the same number of columns");
    s.pair = std::move(pair);
  }
  if (s.pair.has_value() == s.ensemble.has_value())
    throw InvalidInput(name + ":1: give exactly one channel source: 'channels' or an ensemble");
  if (root.contains("rank_tol")) s.rankTol = rd.positive(root["rank_tol"], "rank_tol");

  if (root.contains("constellation")) {
    s.constellation = rd.string(root["constellation"], "constellation");
    try {
      Constellation::fromName(s.constellation);
    } catch (const InvalidInput& e) {
      rd.fail("constellation", e.what());
    }
  }

  if (root.contains("method") && root.contains("methods")) rd.fail("methods", "give either method or methods");
  auto methodsFrom = [&](const io::json& v, const std::string& field) {
    try {
      if (v.is_string()) return parseMethodList(v.get<std::string>());
      if (!v.is_array()) rd.fail(field, "expected a string or an array of strings");
      std::string joined;
      for (const auto& m : v) joined += rd.string(m, field) + ",";
      return parseMethodList(joined);
    } catch (const InvalidInput& e) {
      if (std::string(e.what()).find("field '") != std::string::npos) throw;
      rd.fail(field, e.what());
    }
  };
  if (root.contains("method")) s.methods = methodsFrom(root["method"], "method");
  if (root.contains("methods")) s.methods = methodsFrom(root["methods"], "methods");

  if (root.contains("power") && root.contains("power_db")) rd.fail("power_db", "give either power or power_db");
  if (root.contains("power")) s.pt = rd.positive(root["power"], "power");
  if (root.contains("power_db")) s.pt = dbToLinear(rd.number(root["power_db"], "power_db"));

  if (root.contains("snr_db")) {
    const io::json& g = root["snr_db"];
    try {
      if (g.is_string()) {
        s.snrDb = parseSnrGrid(g.get<std::string>());
      } else if (g.is_array() && !g.empty()) {
        for (const auto& v : g) s.snrDb.push_back(rd.number(v, "snr_db"));
      } else if (g.is_number()) {
        s.snrDb = {rd.number(g, "snr_db")};
      } else {
        rd.fail("snr_db", "expected 'start:stop:step', a number or a non-empty array");
      }
    } catch (const InvalidInput& e) {
      if (std::string(e.what()).find("field '") != std::string::npos) throw;
      rd.fail("snr_db", e.what());
    }
  }

  if (root.contains("solver")) {
    const io::json& c = root["solver"];
    if (!c.is_object()) rd.fail("solver", "expected an object");
    rd.allowOnly(c, "solver.",
                 {"master", "alpha", "maxIters", "powerTol", "muTol", "rhoCap", "rootTol", "fallbackToBisection"});
    SolverConfig& cfg = s.solver;
    if (c.contains("master")) {
      const std::string m = rd.string(c["master"], "solver.master");
      if (m == "bisection") cfg.master = MasterUpdate::Bisection;
      else if (m == "subgradient") cfg.master = MasterUpdate::Subgradient;
      else rd.fail("solver.master", "expected 'bisection' or 'subgradient'");
    }
    if (c.contains("alpha")) cfg.alpha = rd.positive(c["alpha"], "solver.alpha");
    if (c.contains("maxIters")) cfg.maxIters = static_cast<int>(rd.integer(c["maxIters"], "solver.maxIters", 1));
    if (c.contains("powerTol")) cfg.powerTol = rd.positive(c["powerTol"], "solver.powerTol");
    if (c.contains("muTol")) cfg.muTol = rd.positive(c["muTol"], "solver.muTol");
    if (c.contains("rhoCap")) cfg.rhoCap = rd.positive(c["rhoCap"], "solver.rhoCap");
    if (c.contains("rootTol")) cfg.rootTol = rd.positive(c["rootTol"], "solver.rootTol");
    if (c.contains("fallbackToBisection"))
      cfg.fallbackToBisection = rd.boolean(c["fallbackToBisection"], "solver.fallbackToBisection");
    try {
      cfg.validate();
    } catch (const InvalidInput& e) {
      rd.fail("solver", e.what());
    }
  }
  if (root.contains("threads")) s.threads = static_cast<int>(rd.integer(root["threads"], "threads", 0));

  if (root.contains("partial_csi")) {
    const io::json& c = root["partial_csi"];
    if (!c.is_object()) rd.fail("partial_csi", "expected an object");
    rd.allowOnly(c, "partial_csi.", {"sigma_e2", "noise_trials", "seed"});
    if (!c.contains("sigma_e2")) rd.fail("partial_csi.sigma_e2", "required");
    const io::json& v = c["sigma_e2"];
    if (v.is_array()) {
      for (const auto& x : v) s.sigmaE2.push_back(rd.number(x, "partial_csi.sigma_e2"));
    } else {
      s.sigmaE2.push_back(rd.number(v, "partial_csi.sigma_e2"));
    }
    if (s.sigmaE2.empty()) rd.fail("partial_csi.sigma_e2", "must not be empty");
    for (double x : s.sigmaE2)
      if (x < 0.0) rd.fail("partial_csi.sigma_e2", "must be >= 0");
    if (c.contains("noise_trials"))
      s.uncertainty.noiseTrials = static_cast<int>(rd.integer(c["noise_trials"], "partial_csi.noise_trials", 1));
    if (c.contains("seed"))
      s.uncertainty.seed = static_cast<std::uint64_t>(rd.integer(c["seed"], "partial_csi.seed", 0));
  }

  if (root.contains("output")) {
    const io::json& o = root["output"];
    if (!o.is_object()) rd.fail("output", "expected an object");
    rd.allowOnly(o, "output.", {"path", "format"});
    if (o.contains("path")) s.outputPath = base / rd.string(o["path"], "output.path");
    if (o.contains("format")) {
      const std::string f = rd.string(o["format"], "output.format");
      if (f == "csv") s.format = OutputFormat::Csv;
      else if (f == "json") s.format = OutputFormat::Json;
      else rd.fail("output.format", "expected 'csv' or 'json'");
    }
  }
  return s;
}

inline Scenario parseScenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InvalidInput("scenario '" + path.string() + "' does not exist");
  return parseScenarioText(io::readText(path), path);
}

}  // namespace secrecy
