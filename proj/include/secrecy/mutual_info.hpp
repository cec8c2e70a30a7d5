#pragma once

// Mutual information I(rho) = I(s; sqrt(rho) s + n) and mmse(rho) for equiprobable alphabets,
// n ~ CN(0, 1). Values are in nats. dI/drho = mmse(rho).
//
// Separable alphabets (BPSK, PAM, QPSK, square QAM) reduce to one real axis observed in
// N(0, 1/2) noise: I = axes * I_axis and mmse = axes * mmse_axis.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

// Boost 1.74 pchip calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "secrecy/constellation.hpp"
#include "secrecy/error.hpp"
#include "secrecy/linalg.hpp"

namespace secrecy {

enum class QuadratureRule { Adaptive, GaussHermite };

struct QuadratureOptions {
  QuadratureRule rule = QuadratureRule::Adaptive;
  int hermiteOrder = 64;
  double relTol = 1e-12;
};

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight exp(-t^2); sum = sqrt(pi)
};

// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the Hermite recurrence.
inline GaussHermiteRule gaussHermite(int order) {
  if (order < 1) throw InvalidInput("Gauss-Hermite order must be positive");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) jac(i, i - 1) = jac(i - 1, i) = std::sqrt(i / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double sqrtPi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = sqrtPi * v0 * v0;
  }
  return rule;
}

namespace detail {

// Posterior quantities for transmitted level a_k observed as sqrt(rho) a_k + t with
// likelihood exp(-(y - sqrt(rho) a)^2). Returns log sum_j exp(x_j) (x_k = 0) and the
// estimation error a_k - E[a | y].
struct AxisPosterior {
  double logSum;
  double error;
};

inline AxisPosterior axisPosterior(const std::vector<double>& levels, int k, double sqrtRho, double t) {
  double maxX = 0.0;
  for (size_t j = 0; j < levels.size(); ++j) {
    const double delta = levels[k] - levels[j];
    const double x = -sqrtRho * delta * (sqrtRho * delta + 2.0 * t);
    maxX = std::max(maxX, x);
  }
  // rest excludes j = k so log1p keeps relative accuracy when every other term is tiny.
  const double self = std::exp(-maxX);
  double rest = 0.0, weighted = 0.0;
  for (size_t j = 0; j < levels.size(); ++j) {
    if (static_cast<int>(j) == k) continue;
    const double delta = levels[k] - levels[j];
    const double x = -sqrtRho * delta * (sqrtRho * delta + 2.0 * t);
    const double w = std::exp(x - maxX);
    rest += w;
    weighted += delta * w;
  }
  const double logSum = maxX == 0.0 ? std::log1p(rest) : maxX + std::log(self + rest);
  return {logSum, weighted / (self + rest)};
}

// E_t[f(t)] for t ~ N(0, 1/2), adaptive Gauss-Kronrod split at the decision midpoints.
template <class F>
double axisExpectationAdaptive(const std::vector<double>& levels, int k, double sqrtRho, double relTol, F f) {
  constexpr double span = 38.0;  // exp(-span^2) underflows
  std::vector<double> cuts{-span, 0.0, span};
  for (size_t j = 0; j < levels.size(); ++j) {
    if (static_cast<int>(j) == k) continue;
    const double c = -0.5 * sqrtRho * (levels[k] - levels[j]);
    if (c > -span && c < span) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto integrand = [&](double t) { return f(t) * std::exp(-t * t); };
  double total = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, cuts[i], cuts[i + 1], 15,
                                                                           relTol);
  return total / std::sqrt(std::numbers::pi);
}

template <class F>
double axisExpectationHermite(const GaussHermiteRule& gh, F f) {
  double total = 0.0;
  for (size_t i = 0; i < gh.nodes.size(); ++i) total += gh.weights[i] * f(gh.nodes[i]);
  return total / std::sqrt(std::numbers::pi);
}

struct AxisValues {
  double mi;
  double mmse;
};

inline AxisValues axisValues(const std::vector<double>& levels, double rho, const QuadratureOptions& opt,
                             const GaussHermiteRule* gh) {
  const int m = static_cast<int>(levels.size());
  const double sqrtRho = std::sqrt(rho);
  double meanLogSum = 0.0, meanErr2 = 0.0;
  for (int k = 0; k < m; ++k) {
    auto logSum = [&](double t) { return axisPosterior(levels, k, sqrtRho, t).logSum; };
    auto err2 = [&](double t) {
      const double e = axisPosterior(levels, k, sqrtRho, t).error;
      return e * e;
    };
    if (opt.rule == QuadratureRule::Adaptive) {
      meanLogSum += axisExpectationAdaptive(levels, k, sqrtRho, opt.relTol, logSum);
      meanErr2 += axisExpectationAdaptive(levels, k, sqrtRho, opt.relTol, err2);
    } else {
      meanLogSum += axisExpectationHermite(*gh, logSum);
      meanErr2 += axisExpectationHermite(*gh, err2);
    }
  }
  const double mi = std::log(static_cast<double>(m)) - meanLogSum / m;
  return {std::max(0.0, mi), meanErr2 / m};
}

// Tensor Gauss-Hermite over complex noise for alphabets without a separable form.
inline AxisValues complexValuesHermite(const std::vector<cplx>& pts, double rho, const GaussHermiteRule& gh) {
  const int m = static_cast<int>(pts.size());
  const double sqrtRho = std::sqrt(rho);
  std::vector<double> x(m);
  double meanLogSum = 0.0, meanErr2 = 0.0;
  for (int k = 0; k < m; ++k) {
    for (size_t a = 0; a < gh.nodes.size(); ++a) {
      for (size_t b = 0; b < gh.nodes.size(); ++b) {
        const cplx n(gh.nodes[a], gh.nodes[b]);
        double maxX = 0.0;
        for (int j = 0; j < m; ++j) {
          x[j] = std::norm(n) - std::norm(sqrtRho * (pts[k] - pts[j]) + n);
          maxX = std::max(maxX, x[j]);
        }
        const double self = std::exp(-maxX);
        double rest = 0.0;
        cplx weighted = 0.0;
        for (int j = 0; j < m; ++j) {
          if (j == k) continue;
          const double w = std::exp(x[j] - maxX);
          rest += w;
          weighted += (pts[k] - pts[j]) * w;
        }
        const double sum = self + rest;
        const double logSum = maxX == 0.0 ? std::log1p(rest) : maxX + std::log(sum);
        const double wq = gh.weights[a] * gh.weights[b];
        meanLogSum += wq * logSum;
        meanErr2 += wq * std::norm(weighted / sum);
      }
    }
  }
  const double norm = std::numbers::pi * m;
  return {std::max(0.0, std::log(static_cast<double>(m)) - meanLogSum / norm), meanErr2 / norm};
}

inline AxisValues directValues(const Constellation& c, double rho, const QuadratureOptions& opt) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInput("SNR must be finite and nonnegative");
  if (c.isGaussian()) return {std::log1p(rho), 1.0 / (1.0 + rho)};
  if (rho == 0.0) return {0.0, 1.0};
  std::unique_ptr<GaussHermiteRule> gh;
  if (opt.rule == QuadratureRule::GaussHermite || c.axes() == 0)
    gh = std::make_unique<GaussHermiteRule>(gaussHermite(opt.hermiteOrder));
  if (c.axes() == 0) return complexValuesHermite(c.points(), rho, *gh);
  const auto v = axisValues(c.axisLevels(), rho, opt, gh.get());
  return {c.axes() * v.mi, c.axes() * v.mmse};
}

}  // namespace detail

// Direct quadrature, no caching. Adaptive rule keeps relative accuracy in the high-SNR tail.
inline double directMutualInfo(const Constellation& c, double rho, const QuadratureOptions& opt = {}) {
  return detail::directValues(c, rho, opt).mi;
}

inline double directMmse(const Constellation& c, double rho, const QuadratureOptions& opt = {}) {
  return detail::directValues(c, rho, opt).mmse;
}

struct CurveOptions {
  double rhoMin = 1e-4;
  double rhoMax = 1e4;
  int points = 513;
  QuadratureOptions quadrature{};
};

// Tabulated curve on a log-spaced SNR grid.
struct MiCurve {
  std::string label;
  std::vector<double> grid;
  std::vector<double> mi;
  std::vector<double> mmse;
};

// Constellation plus its cached MI/MMSE curve. Immutable after construction.
//
// Between grid nodes I (Hermite, exact slopes) and ln(mmse) (monotone cubic) are interpolated
// in ln(rho); below
// the first node both are linear in rho through (0, 0) and (0, 1); above the last node mmse
// decays as exp(-(d^2/4) rho) and I is held.
class Alphabet {
public:
  explicit Alphabet(Constellation c, CurveOptions opt = {}) : c_(std::move(c)), opt_(opt) {
    if (c_.isGaussian()) return;
    if (opt_.points < 4 || !(opt_.rhoMin > 0.0) || !(opt_.rhoMax > opt_.rhoMin))
      throw InvalidInput("curve options: need >= 4 points on a positive increasing range");
    build();
  }

  // Process-wide cache keyed by label with default options.
  static std::shared_ptr<const Alphabet> shared(const Constellation& c) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const Alphabet>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(c.label());
    if (it != cache.end()) return it->second;
    auto a = std::make_shared<const Alphabet>(c);
    cache.emplace(c.label(), a);
    return a;
  }

  const Constellation& constellation() const { return c_; }
  const MiCurve& curve() const { return curve_; }
  bool isGaussian() const { return c_.isGaussian(); }

  double mutualInfo(double rho) const {
    checkRho(rho);
    if (c_.isGaussian()) return std::log1p(rho);
    if (rho == 0.0) return 0.0;
    const auto& g = curve_.grid;
    if (rho < g.front()) return curve_.mi.front() * rho / g.front();
    if (rho >= g.back()) return curve_.mi.back();
    return std::clamp((*miSpline_)(std::log(rho)), 0.0, c_.logCardinality());
  }

  double mmse(double rho) const {
    checkRho(rho);
    if (c_.isGaussian()) return 1.0 / (1.0 + rho);
    if (rho == 0.0) return 1.0;
    const auto& g = curve_.grid;
    if (rho < g.front()) return 1.0 + (curve_.mmse.front() - 1.0) * rho / g.front();
    if (rho >= tailStart_) {
      const double d = c_.minDistance();
      return tailValue_ * std::exp(-0.25 * d * d * (rho - tailStart_));
    }
    return std::clamp(std::exp((*logMmseSpline_)(std::log(rho))), 0.0, 1.0);
  }

  // rho * mmse(rho).
  double gFunction(double rho) const {
    checkRho(rho);
    return rho * mmse(rho);
  }

  // The unique rho with mmse(rho) = target; target = 1 gives 0.
  double mmseInverse(double target) const {
    if (!(target > 0.0) || target > 1.0) throw InvalidInput("mmseInverse: target must lie in (0, 1]");
    if (target == 1.0) return 0.0;
    if (c_.isGaussian()) return 1.0 / target - 1.0;
    double hi = 1.0;
    while (mmse(hi) > target) {
      hi *= 2.0;
      if (hi > 1e300) throw SolverError("mmseInverse: could not bracket target");
    }
    return bisect(target, 0.0, hi);
  }

  // Same as mmseInverse but saturates at rhoCap without searching beyond it.
  double mmseInverseCapped(double target, double rhoCap) const {
    if (!(target > 0.0) || target > 1.0) throw InvalidInput("mmseInverse: target must lie in (0, 1]");
    if (target == 1.0) return 0.0;
    if (mmse(rhoCap) >= target) return rhoCap;
    if (c_.isGaussian()) return std::min(rhoCap, 1.0 / target - 1.0);
    double hi = std::min(1.0, rhoCap);
    while (mmse(hi) > target) hi = std::min(2.0 * hi, rhoCap);
    return bisect(target, 0.0, hi);
  }

  // (b2/omega) mmse(b2 p/omega) - (e2/omega) mmse(e2 p/omega).
  double mmseDifference(double p, double b2, double e2, double omega) const {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("mmseDifference: power must be finite and >= 0");
    if (!(omega > 0.0)) throw InvalidInput("mmseDifference: omega must be positive");
    if (!(e2 >= 0.0) || !(e2 < b2) || b2 > 1.0) throw InvalidInput("mmseDifference: need 0 <= e2 < b2 <= 1");
    return (b2 / omega) * mmse(b2 * p / omega) - (e2 / omega) * mmse(e2 * p / omega);
  }

private:
  static void checkRho(double rho) {
    if (!(rho >= 0.0) || std::isnan(rho)) throw InvalidInput("SNR must be nonnegative");
  }

  double bisect(double target, double lo, double hi) const {
    // mmse strictly decreasing: keep mmse(lo) > target >= mmse(hi).
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mmse(mid) > target)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  void build() {
    const int n = opt_.points;
    curve_.label = c_.label();
    curve_.grid.resize(n);
    curve_.mi.resize(n);
    curve_.mmse.resize(n);
    const double l0 = std::log(opt_.rhoMin), l1 = std::log(opt_.rhoMax);
    for (int i = 0; i < n; ++i) {
      const double rho = std::exp(l0 + (l1 - l0) * i / (n - 1));
      curve_.grid[i] = rho;
      const auto v = detail::directValues(c_, rho, opt_.quadrature);
      curve_.mi[i] = v.mi;
      curve_.mmse[i] = v.mmse;
    }
    // Monotone cleanup against quadrature round-off near saturation.
    for (int i = 1; i < n; ++i) {
      curve_.mi[i] = std::max(curve_.mi[i], curve_.mi[i - 1]);
      curve_.mmse[i] = std::min(curve_.mmse[i], curve_.mmse[i - 1]);
    }

    // dI/d(ln rho) = rho * mmse(rho) is exact, so I uses Hermite data.
    std::vector<double> x(n), yi(n), dyi(n);
    for (int i = 0; i < n; ++i) {
      x[i] = std::log(curve_.grid[i]);
      yi[i] = curve_.mi[i];
      dyi[i] = curve_.grid[i] * curve_.mmse[i];
    }
    miSpline_ = std::make_shared<HermiteSpline>(std::vector<double>(x), std::move(yi), std::move(dyi));

    int last = n - 1;
    while (last > 0 && !(curve_.mmse[last] > 0.0)) --last;
    if (last < 3) throw SolverError("mmse table underflows too early for interpolation");
    std::vector<double> xm(x.begin(), x.begin() + last + 1), ym(last + 1);
    for (int i = 0; i <= last; ++i) ym[i] = std::log(curve_.mmse[i]);
    tailStart_ = curve_.grid[last];
    tailValue_ = curve_.mmse[last];
    logMmseSpline_ = std::make_shared<Spline>(std::move(xm), std::move(ym));
  }

  using Spline = boost::math::interpolators::pchip<std::vector<double>>;
  using HermiteSpline = boost::math::interpolators::cubic_hermite<std::vector<double>>;

  Constellation c_;
  CurveOptions opt_;
  MiCurve curve_;
  std::shared_ptr<HermiteSpline> miSpline_;
  std::shared_ptr<Spline> logMmseSpline_;
  double tailStart_ = 0.0;
  double tailValue_ = 0.0;
};

}  // namespace secrecy
