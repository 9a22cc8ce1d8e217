#pragma once

#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/fit.hpp"
#include "lowrank/types.hpp"

namespace lowrank::hadamard {

/// Factors of the model A ~ (C1*D1) o (C2*D2), all shapes tied to one
/// (M, N, K): C1, C2 are MxK and D1, D2 are KxN.
struct Factors {
  Matrix C1;
  Matrix D1;
  Matrix C2;
  Matrix D2;
};

struct Gradients {
  Matrix C1;
  Matrix D1;
  Matrix C2;
  Matrix D2;
};

using Result = FitResult<Factors>;

/// Residual-recompute policy for the four sequential steps of one iteration.
/// Recompute refreshes the residual before every factor's step; StalePerIter
/// evaluates it once per iteration and reuses it for all four steps.
enum class DeltaMode { Recompute, StalePerIter };

/// Squared Frobenius norm of (C1*D1) o (C2*D2) - A, restricted to observed
/// entries when a mask is given.
double loss(const Factors& f, const Matrix& A, const Mask* mask = nullptr);

/// All four gradients of the loss at f, sharing one residual evaluation.
Gradients fullGradients(const Factors& f, const Matrix& A);

/// Gradient of the loss with respect to column n of D1 (which == 1) or D2
/// (which == 2), optionally restricted to the observed rows `obs`.
Vector columnGradientD(const Factors& f, const Matrix& A, Index n, int which,
                       const std::vector<Index>* obs = nullptr);

/// Gradient with respect to row m of C1 or C2, optionally restricted to the
/// observed columns `obs`.
Vector rowGradientC(const Factors& f, const Matrix& A, Index m, int which,
                    const std::vector<Index>* obs = nullptr);

/// Seeded uniform [-1,1) factors scaled by 1/sqrt(K), drawn in the order
/// C1, C2, D1, D2.
Factors randomFactors(Index rows, Index cols, const FitConfig& cfg);

/// Alternating gradient descent: per iteration one step on each of C1, D1,
/// C2, D2 in that order. cfg.lambdaW / cfg.lambdaZ add an optional ridge term
/// (2*lambda*X) to the C / D gradients. Throws DivergenceDetected when the
/// loss exceeds 1e6x its initial value.
Result fit(const Matrix& A, const FitConfig& cfg, Factors init,
           DeltaMode mode = DeltaMode::Recompute);

/// Completion variant: per iteration, updates columns d1n and d2n for every
/// n, then rows c1m and c2m for every m, each against observed entries only.
Result fitMasked(const Matrix& A, const Mask& mask, const FitConfig& cfg,
                 Factors init);

}  // namespace lowrank::hadamard
