#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "secrecy/allocator.hpp"
#include "secrecy/error.hpp"
#include "secrecy/gsvd.hpp"

namespace secrecy::io {

using json = nlohmann::ordered_json;

// {"rows": R, "cols": C, "data": [[re, im], ...]} row-major; a bare number is a real entry.
inline CMatrix matrixFromJson(const json& j, const std::string& where = "matrix") {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object with rows, cols, data");
  for (const char* key : {"rows", "cols", "data"})
    if (!j.contains(key)) throw InvalidInput(where + ": missing field '" + key + "'");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw InvalidInput(where + ": rows and cols must be integers");
  const long rows = j["rows"].get<long>(), cols = j["cols"].get<long>();
  if (rows < 1 || cols < 1) throw InvalidInput(where + ": rows and cols must be positive");
  const json& data = j["data"];
  if (!data.is_array() || static_cast<long>(data.size()) != rows * cols)
    throw InvalidInput(where + ": data must hold rows*cols = " + std::to_string(rows * cols) + " entries");
  CMatrix m(rows, cols);
  for (long n = 0; n < rows * cols; ++n) {
    const json& e = data[n];
    cplx v;
    if (e.is_number()) {
      v = e.get<double>();
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      v = cplx(e[0].get<double>(), e[1].get<double>());
    } else {
      throw InvalidInput(where + ": data[" + std::to_string(n) + "] must be [re, im]");
    }
    m(n / cols, n % cols) = v;
  }
  if (!linalg::allFinite(m)) throw InvalidInput(where + ": non-finite entry");
  return m;
}

inline json matrixToJson(const CMatrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline std::string readText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int lineAt(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) line += text[i] == '\n';
  return line;
}

inline json parseJsonText(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(name + ":" + std::to_string(lineAt(text, e.byte ? e.byte - 1 : 0)) + ": malformed JSON (" +
                       e.what() + ")");
  }
}

inline CMatrix readMatrix(const std::filesystem::path& path) {
  return matrixFromJson(parseJsonText(readText(path), path.string()), path.string());
}

inline void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw InvalidInput("write failed for '" + path.string() + "'");
}

inline void writeMatrix(const std::filesystem::path& path, const CMatrix& m) {
  writeText(path, matrixToJson(m).dump(2) + "\n");
}

inline json bankToJson(const ParallelChannelBank& bank) {
  json eve = json::array(), shared = json::array(), bob = json::array();
  for (const auto& ch : bank.eveOnly) eve.push_back({{"index", ch.index}, {"gain_eve", ch.gainEve}});
  for (const auto& ch : bank.shared)
    shared.push_back({{"index", ch.index}, {"b2", ch.b2}, {"e2", ch.e2}, {"omega", ch.omega}});
  for (const auto& ch : bank.bobOnly) bob.push_back({{"index", ch.index}, {"omega", ch.omega}});
  return json{{"eve_only", eve}, {"shared", shared}, {"bob_only", bob}, {"null_dim", bank.nullDim}};
}

inline json gsvdToJson(const GsvdResult& g, bool full) {
  json j{{"ma", g.ma}, {"mb", g.mb},       {"me", g.me}, {"k", g.k},
         {"r", g.r},   {"s", g.s},         {"nu", g.nu}, {"b", g.db},
         {"e", g.de},  {"omega_diag", g.omegaDiag}, {"omega_offdiag", g.omegaOffDiagonal}};
  j["bank"] = bankToJson(reduceToParallel(g));
  if (full) {
    j["psi_a"] = matrixToJson(g.psiA);
    j["psi_b"] = matrixToJson(g.psiB);
    j["psi_e"] = matrixToJson(g.psiE);
    j["omega"] = matrixToJson(g.omega);
  }
  return j;
}

inline json allocationToJson(const SecrecyProblem& prob, const PowerAllocation& alloc, double rateBits) {
  json j{{"method", methodName(alloc.method)},
         {"constellation", prob.constellation.label()},
         {"pt", prob.pt},
         {"p", alloc.p},
         {"mu", alloc.mu},
         {"slack", alloc.slack},
         {"residual", alloc.residual},
         {"iterations", alloc.iterations},
         {"rate_bits", rateBits}};
  if (!alloc.master.empty()) j["master"] = alloc.master;
  j["bank"] = bankToJson(prob.bank);
  return j;
}

// Shortest decimal form that round-trips a double.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace secrecy::io
