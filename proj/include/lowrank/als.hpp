#pragma once

#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/fit.hpp"
#include "lowrank/types.hpp"

namespace lowrank::als {

/// Factor pair of the rank-K model A ~ W*Z, with W (MxK) and Z (KxN).
struct Factors {
  Matrix W;
  Matrix Z;
};

using Result = FitResult<Factors>;

/// Exact minimizer of |W*Z - A|_F^2 + lambdaZ*|Z|_F^2 over Z:
/// (W'W + lambdaZ*I)^-1 W'A. With lambdaZ == 0 the normal-equations matrix
/// must be invertible (W full column rank), else SingularNormalEquations.
Matrix updateZ(const Matrix& W, const Matrix& A, double lambdaZ);

/// Mirror update: W' = (ZZ' + lambdaW*I)^-1 Z A'.
Matrix updateW(const Matrix& Z, const Matrix& A, double lambdaW);

/// Per-column solve restricted to the observed rows `obs`:
/// z = (W[obs,:]'W[obs,:] + lambdaZ*I)^-1 W[obs,:]' aCol[obs].
/// An empty observation set returns the zero vector when lambdaZ > 0 and
/// throws EmptyObservation when lambdaZ == 0.
Vector updateZColumnMasked(const Matrix& W, const Vector& aCol,
                           const std::vector<Index>& obs, double lambdaZ);

/// Per-row solve restricted to the observed columns `obs`:
/// w = (Z[:,obs]Z[:,obs]' + lambdaW*I)^-1 Z[:,obs] bRow[obs].
Vector updateWRowMasked(const Matrix& Z, const Vector& bRow,
                        const std::vector<Index>& obs, double lambdaW);

/// Seeded uniform [-1,1) factors (W drawn first, then Z, both row-major).
/// With requireFullRank, redraws up to 5 times until both factors have full
/// rank K, throwing PreconditionViolation if that fails.
Factors randomFactors(Index rows, Index cols, const FitConfig& cfg,
                      bool requireFullRank = false);

/// |W*Z - A|_F^2 + lambdaW*|W|_F^2 + lambdaZ*|Z|_F^2.
double regularizedObjective(const Matrix& A, const Factors& f, double lambdaW,
                            double lambdaZ);

/// Unregularized alternating least squares. Requires a square A, K < M,
/// lambdaW == lambdaZ == 0, and full-rank initial factors; the rank of each
/// updated factor is re-checked every half-step. Stops when |A - WZ|_F <= tol
/// or the iteration cap is hit; the trace records |A - WZ|_F.
Result fitPlain(const Matrix& A, const FitConfig& cfg, Factors init);

/// Ridge-regularized alternating least squares; requires lambdaW, lambdaZ > 0
/// and places no shape or rank conditions on A or the initial factors.
/// Stopping and trace quantity as in fitPlain.
Result fitRegularized(const Matrix& A, const FitConfig& cfg, Factors init);

/// Matrix completion: per iteration, solves all N columns of Z against the
/// observed rows, then all M rows of W against the observed columns. Stops on
/// the squared masked loss; the trace records that quantity.
Result fitMasked(const Matrix& A, const Mask& mask, const FitConfig& cfg,
                 Factors init);

}  // namespace lowrank::als
