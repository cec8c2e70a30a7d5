#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace secrecy {

// Precondition violation on a public entry point (bad shape, NaN, out-of-domain value).
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not produce an answer (bracketing failed, redraw budget exhausted).
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Iterative master update ran out of iterations. Carries the best iterate seen so the
// caller can inspect or reuse it.
class ConvergenceError : public SolverError {
public:
  ConvergenceError(const std::string& what, std::vector<double> bestPower, double bestMu,
                   double residual, int iterations)
      : SolverError(what),
        bestPower_(std::move(bestPower)),
        bestMu_(bestMu),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& bestPower() const noexcept { return bestPower_; }
  double bestMu() const noexcept { return bestMu_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  std::vector<double> bestPower_;
  double bestMu_;
  double residual_;
  int iterations_;
};

}  // namespace secrecy
