#pragma once

// Closed-form and asymptotic allocations. All powers are in the normalized variable p of
// the parallel bank (precoder power p / omega).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "secrecy/allocator.hpp"

namespace secrecy {

namespace detail {

// Positive root x of b2 e2 x^2 + (b2 + e2) x + 1 - level (b2 - e2) / omega = 0, level = 1/mu;
// zero when the water level does not exceed the base omega / (b2 - e2).
inline double gaussianSharedPower(double b2, double e2, double omega, double level) {
  if (!(b2 > e2)) return 0.0;
  const double gain = (b2 - e2) / omega;
  const double c = 1.0 - level * gain;
  if (c >= 0.0) return 0.0;
  const double a = b2 * e2, b = b2 + e2;
  const double x = -2.0 * c / (b + std::sqrt(b * b - 4.0 * a * c));
  return omega * x;
}

inline double gaussianBobPower(double omega, double level) { return std::max(0.0, level - omega); }

inline double gaussianTotal(const ParallelChannelBank& bank, double level) {
  double s = 0.0;
  for (const auto& ch : bank.shared) s += gaussianSharedPower(ch.b2, ch.e2, ch.omega, level);
  for (const auto& ch : bank.bobOnly) s += gaussianBobPower(ch.omega, level);
  return s;
}

inline PowerAllocation emptyAllocation(const ParallelChannelBank& bank, Method m) {
  PowerAllocation out;
  out.method = m;
  out.master = "closed-form";
  out.p.assign(bank.size(), 0.0);
  return out;
}

}  // namespace detail

// Secrecy water-filling for Gaussian input. The budget is always met when any channel is viable.
inline PowerAllocation gaussianAllocate(const ParallelChannelBank& bank, double pt) {
  if (!(pt > 0.0) || !std::isfinite(pt)) throw InvalidInput("gaussianAllocate: Pt must be finite and positive");
  bank.validate();
  auto out = detail::emptyAllocation(bank, Method::GaussianWF);
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& ch : bank.shared)
    if (viable(ch)) lo = std::min(lo, ch.omega / (ch.b2 - ch.e2));
  for (const auto& ch : bank.bobOnly) lo = std::min(lo, ch.omega);
  if (!std::isfinite(lo)) {
    out.slack = true;
    detail::finish(out, pt);
    return out;
  }
  double hi = lo + pt;
  while (detail::gaussianTotal(bank, hi) < pt) hi *= 2.0;
  int it = 0;
  for (; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (detail::gaussianTotal(bank, mid) < pt)
      lo = mid;
    else
      hi = mid;
  }
  const double level = hi;
  for (const auto& ch : bank.shared) out.p[ch.index] = detail::gaussianSharedPower(ch.b2, ch.e2, ch.omega, level);
  for (const auto& ch : bank.bobOnly) out.p[ch.index] = detail::gaussianBobPower(ch.omega, level);
  out.mu = 1.0 / level;
  out.iterations = it;
  detail::finish(out, pt);
  return out;
}

// Sum of log2((1 + b2 p/omega) / (1 + e2 p/omega)) plus log2(1 + p/omega) on Bob-only channels.
inline double gaussianRate(const ParallelChannelBank& bank, const PowerAllocation& alloc) {
  if (static_cast<int>(alloc.p.size()) != bank.size()) throw InvalidInput("gaussianRate: length mismatch");
  double r = 0.0;
  for (const auto& ch : bank.shared) {
    const double x = alloc.p[ch.index] / ch.omega;
    r += std::log1p(ch.b2 * x) - std::log1p(ch.e2 * x);
  }
  for (const auto& ch : bank.bobOnly) r += std::log1p(alloc.p[ch.index] / ch.omega);
  return r / std::numbers::ln2;
}

namespace detail {

// Stationarity under mmse(rho) ~ 1 - 2 rho (real-valued alphabets).
inline double lowSnrSharedPower(double b2, double e2, double omega, double mu) {
  if (!(b2 > e2)) return 0.0;
  return std::max(0.0, omega / (2.0 * (b2 + e2)) * (1.0 - mu * omega / (b2 - e2)));
}

inline double lowSnrTotal(const ParallelChannelBank& bank, double mu) {
  double s = 0.0;
  for (const auto& ch : bank.shared) s += lowSnrSharedPower(ch.b2, ch.e2, ch.omega, mu);
  for (const auto& ch : bank.bobOnly) s += lowSnrSharedPower(1.0, 0.0, ch.omega, mu);
  return s;
}

}  // namespace detail

// Second-order-optimal alphabets reuse Gaussian water-filling; real alphabets use the
// linearized stationarity, which may leave the budget slack.
inline PowerAllocation lowSnrAllocate(const ParallelChannelBank& bank, double pt, bool secondOrderOptimal) {
  if (secondOrderOptimal) {
    auto out = gaussianAllocate(bank, pt);
    out.method = Method::LowSnr;
    return out;
  }
  if (!(pt > 0.0) || !std::isfinite(pt)) throw InvalidInput("lowSnrAllocate: Pt must be finite and positive");
  bank.validate();
  auto out = detail::emptyAllocation(bank, Method::LowSnr);
  double mu = 0.0;
  if (detail::lowSnrTotal(bank, 0.0) <= pt) {
    out.slack = true;
  } else {
    double lo = 0.0, hi = detail::muCeiling(bank);
    for (int it = 0; it < 2000; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      if (detail::lowSnrTotal(bank, mid) > pt)
        lo = mid;
      else
        hi = mid;
      out.iterations = it + 1;
    }
    mu = hi;
  }
  for (const auto& ch : bank.shared) out.p[ch.index] = detail::lowSnrSharedPower(ch.b2, ch.e2, ch.omega, mu);
  for (const auto& ch : bank.bobOnly) out.p[ch.index] = detail::lowSnrSharedPower(1.0, 0.0, ch.omega, mu);
  out.mu = mu;
  detail::finish(out, pt);
  return out;
}

// Second-order expansion of the secrecy rate in nats, omega-free normalized form:
// sum (b2 - e2)(p - p^2) over shared channels plus sum (p - p^2) over Bob-only channels.
inline double lowSnrRate(const ParallelChannelBank& bank, const PowerAllocation& alloc) {
  if (static_cast<int>(alloc.p.size()) != bank.size()) throw InvalidInput("lowSnrRate: length mismatch");
  double r = 0.0;
  for (const auto& ch : bank.shared) {
    const double p = alloc.p[ch.index];
    if (viable(ch)) r += (ch.b2 - ch.e2) * (p - p * p);
  }
  for (const auto& ch : bank.bobOnly) {
    const double p = alloc.p[ch.index];
    r += p - p * p;
  }
  return r;
}

// mmse(rho) ~ K exp(-(d^2/4) rho).
struct HighSnrParams {
  double K = 1.0;
  double d = 0.0;
};

// Fixed-slope least squares for ln K over rho in [10, 100].
inline HighSnrParams fitHighSnr(const Constellation& c) {
  if (c.isGaussian()) throw InvalidInput("fitHighSnr: the Gaussian input has no exponential mmse tail");
  const double slope = 0.25 * c.minDistance() * c.minDistance();
  const int n = 91;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double rho = 10.0 + 90.0 * i / (n - 1);
    acc += std::log(directMmse(c, rho)) + slope * rho;
  }
  return {std::exp(acc / n), c.minDistance()};
}

// Balance b2 mmse(b2 p/omega) = e2 mmse(e2 p/omega) under the exponential tail:
// p = omega ln(b2/e2) / ((d^2/4)(b2 - e2)). Bob-only channels saturate at rhoCap.
inline PowerAllocation highSnrAllocate(const ParallelChannelBank& bank, const Constellation& c,
                                       double rhoCap = SolverConfig{}.rhoCap) {
  if (c.isGaussian()) throw InvalidInput("highSnrAllocate: needs a finite alphabet");
  bank.validate();
  auto out = detail::emptyAllocation(bank, Method::HighSnr);
  const double q = 0.25 * c.minDistance() * c.minDistance();
  for (const auto& ch : bank.shared) {
    if (!viable(ch)) continue;
    if (ch.e2 == 0.0)
      out.p[ch.index] = rhoCap * ch.omega / ch.b2;
    else
      out.p[ch.index] = ch.omega * std::log(ch.b2 / ch.e2) / (q * (ch.b2 - ch.e2));
  }
  for (const auto& ch : bank.bobOnly) out.p[ch.index] = rhoCap * ch.omega;
  out.slack = true;
  detail::finish(out, out.total());
  return out;
}

// r log2 M plus the exact shared-channel secrecy terms, in bits.
inline double highSnrRate(const ParallelChannelBank& bank, const Constellation& c, const PowerAllocation& alloc) {
  if (c.isGaussian()) throw InvalidInput("highSnrRate: needs a finite alphabet");
  if (static_cast<int>(alloc.p.size()) != bank.size()) throw InvalidInput("highSnrRate: length mismatch");
  const auto a = Alphabet::shared(c);
  const double bitsPerSymbol = c.logCardinality() / std::numbers::ln2;
  double r = bitsPerSymbol * static_cast<double>(bank.bobOnly.size());
  for (const auto& ch : bank.shared) {
    if (!viable(ch)) continue;
    if (ch.e2 == 0.0) {
      r += bitsPerSymbol;
      continue;
    }
    const double p = alloc.p[ch.index];
    r += (a->mutualInfo(ch.b2 * p / ch.omega) - a->mutualInfo(ch.e2 * p / ch.omega)) / std::numbers::ln2;
  }
  return r;
}

}  // namespace secrecy
