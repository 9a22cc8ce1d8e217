#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lowrank {

/// Solver hyperparameters shared by every fit loop.
struct FitConfig {
  int rank = 1;            // target rank K
  double lambdaW = 0.0;    // ridge weight on the row-side factor
  double lambdaZ = 0.0;    // ridge weight on the column-side factor
  double step = 1e-2;      // gradient step size (descent solvers only)
  double tol = 1e-8;       // stopping threshold on the solver's native loss
  int maxIters = 100;
  std::uint64_t seed = 0;
  int threads = 1;         // parallelism for independent per-column/row solves
};

enum class StopReason { ToleranceMet, IterationCap };

inline std::string toString(StopReason r) {
  return r == StopReason::ToleranceMet ? "tolerance" : "iteration_cap";
}

/// Ordered per-iteration records emitted by every fit loop. `loss` is the
/// solver's native stopping quantity, measured after the iteration completed;
/// iterations count from 1. The loss at the initial factors is kept separately.
struct ConvergenceTrace {
  struct Record {
    int iter;
    double loss;
    double elapsedSeconds;
  };

  std::vector<Record> records;
  double initialLoss = 0.0;
  StopReason stopReason = StopReason::IterationCap;

  double finalLoss() const {
    return records.empty() ? initialLoss : records.back().loss;
  }
};

template <class Factors>
struct FitResult {
  Factors factors;
  ConvergenceTrace trace;
};

}  // namespace lowrank
