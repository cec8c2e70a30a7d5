#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "secrecy/error.hpp"
#include "secrecy/linalg.hpp"

namespace secrecy {

enum class Family { BPSK, QPSK, QAM, PAM, Gaussian, Custom };

// Finite equiprobable alphabet with zero mean and unit average energy, or the Gaussian
// reference input. Square QAM, QPSK, PAM and BPSK are stored with their per-axis levels so
// the mutual information separates into independent real dimensions.
class Constellation {
public:
  static Constellation bpsk() { return pamLike(Family::BPSK, 2, "BPSK"); }

  static Constellation pam(int m) {
    if (m < 2) throw InvalidInput("PAM order must be at least 2");
    return pamLike(Family::PAM, m, "PAM(" + std::to_string(m) + ")");
  }

  static Constellation qpsk() { return qam(4); }

  static Constellation qam(int m) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    if (m < 4 || side * side != m) throw InvalidInput("QAM order must be a perfect square >= 4");
    Constellation c;
    c.family_ = m == 4 ? Family::QPSK : Family::QAM;
    c.label_ = m == 4 ? "QPSK" : "QAM" + std::to_string(m);
    c.axes_ = 2;
    c.axisLevels_ = pamLevels(side, 0.5);
    for (double im : c.axisLevels_)
      for (double re : c.axisLevels_) c.points_.emplace_back(re, im);
    c.finish();
    return c;
  }

  static Constellation gaussian() {
    Constellation c;
    c.family_ = Family::Gaussian;
    c.label_ = "Gaussian";
    return c;
  }

  // Arbitrary alphabet; rejected unless already zero mean and unit energy.
  static Constellation custom(std::vector<cplx> points, std::string label = "Custom") {
    if (points.size() < 2) throw InvalidInput("custom constellation needs at least two points");
    Constellation c;
    c.family_ = Family::Custom;
    c.label_ = std::move(label);
    c.points_ = std::move(points);
    cplx mean = 0.0;
    double energy = 0.0;
    for (auto p : c.points_) {
      mean += p;
      energy += std::norm(p);
    }
    mean /= static_cast<double>(c.points_.size());
    energy /= static_cast<double>(c.points_.size());
    if (std::abs(mean) > 1e-9 || std::abs(energy - 1.0) > 1e-9)
      throw InvalidInput("custom constellation must have zero mean and unit energy");
    bool real = std::all_of(c.points_.begin(), c.points_.end(), [](cplx p) { return p.imag() == 0.0; });
    if (real) {
      c.axes_ = 1;
      for (auto p : c.points_) c.axisLevels_.push_back(p.real());
    }
    c.finish();
    return c;
  }

  // Accepts bpsk, qpsk, 16qam/qam16, 64qam/qam64, pam4/pam(4), gaussian (case-insensitive).
  static Constellation fromName(std::string name) {
    std::string n;
    for (char ch : name)
      if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '(' && ch != ')')
        n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (n == "bpsk" || n == "2pam") return bpsk();
    if (n == "qpsk" || n == "4qam" || n == "qam4") return qpsk();
    if (n == "gaussian" || n == "gauss") return gaussian();
    auto numberAfter = [&](const std::string& prefix) -> int {
      if (n.rfind(prefix, 0) == 0) return std::atoi(n.c_str() + prefix.size());
      return 0;
    };
    auto numberBefore = [&](const std::string& suffix) -> int {
      if (n.size() > suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0)
        return std::atoi(n.substr(0, n.size() - suffix.size()).c_str());
      return 0;
    };
    if (int m = numberAfter("qam"); m > 0) return qam(m);
    if (int m = numberBefore("qam"); m > 0) return qam(m);
    if (int m = numberAfter("pam"); m > 0) return pam(m);
    if (int m = numberBefore("pam"); m > 0) return pam(m);
    throw InvalidInput("unknown constellation '" + name + "'");
  }

  Family family() const { return family_; }
  const std::string& label() const { return label_; }
  bool isGaussian() const { return family_ == Family::Gaussian; }
  const std::vector<cplx>& points() const { return points_; }
  int size() const { return static_cast<int>(points_.size()); }
  double minDistance() const { return minDistance_; }

  // ln M for finite alphabets, +inf for the Gaussian input.
  double logCardinality() const {
    return isGaussian() ? std::numeric_limits<double>::infinity() : std::log(static_cast<double>(size()));
  }

  // Separable structure: the alphabet is the product of `axes()` copies of axisLevels()
  // (real and imaginary part). Zero axes means no separable form.
  int axes() const { return axes_; }
  const std::vector<double>& axisLevels() const { return axisLevels_; }

  // Proper (circularly symmetric second moment E[s^2] = 0) alphabets share the Gaussian
  // low-SNR mmse slope; one-dimensional ones do not.
  bool secondOrderOptimal() const {
    if (isGaussian()) return true;
    cplx pseudo = 0.0;
    for (auto p : points_) pseudo += p * p;
    return std::abs(pseudo) / static_cast<double>(size()) < 1e-9;
  }

private:
  static std::vector<double> pamLevels(int m, double energy) {
    // Levels (2i - 1 - m) * step, step chosen for the requested average energy.
    const double step = std::sqrt(3.0 * energy / (static_cast<double>(m) * m - 1.0));
    std::vector<double> lv(m);
    for (int i = 0; i < m; ++i) lv[i] = (2.0 * (i + 1) - 1.0 - m) * step;
    return lv;
  }

  static Constellation pamLike(Family f, int m, std::string label) {
    Constellation c;
    c.family_ = f;
    c.label_ = std::move(label);
    c.axes_ = 1;
    c.axisLevels_ = pamLevels(m, 1.0);
    for (double v : c.axisLevels_) c.points_.emplace_back(v, 0.0);
    c.finish();
    return c;
  }

  void finish() {
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < points_.size(); ++i)
      for (size_t j = i + 1; j < points_.size(); ++j) d = std::min(d, std::abs(points_[i] - points_[j]));
    minDistance_ = d;
  }

  Family family_ = Family::Custom;
  std::string label_;
  std::vector<cplx> points_;
  std::vector<double> axisLevels_;
  int axes_ = 0;
  double minDistance_ = 0.0;
};

}  // namespace secrecy
