#pragma once

#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/fit.hpp"
#include "lowrank/types.hpp"

namespace lowrank::khatri_rao {

/// Ordered factors of the model A ~ F1 (.) F2 (.) ... (.) Fk; all factors
/// share A's column count and their row counts multiply to A's row count.
using FactorList = std::vector<Matrix>;

using Result = FitResult<FactorList>;

/// Column j of the chained product F1 (.) ... (.) Fk, or the full product.
Matrix chainProduct(const FactorList& factors);

/// Row indices of column j of A that multiply w_ij when the middle factor of
/// B (.) W (.) C sits between an m1-row B and an m2-row C (W has n rows):
/// block p contributes rows p*(n*m2) + i*m2 + q for q in [0, m2).
std::vector<Index> gatherRows(Index m1, Index n, Index m2, Index i);

/// Closed-form update of the leading factor: b_ij = <c_j, a_ij> / <c_j, c_j>
/// with a_ij the (i, j) contiguous block of column j. A zero denominator
/// keeps the entry from `prev` (throws ZeroDenominator without one). With a
/// mask, each 1-D solve is restricted to the observed entries.
Matrix updateFirst(const Matrix& A, const Matrix& C, const Matrix* prev = nullptr,
                   const Mask* mask = nullptr);

/// Strided mirror: c_ij = <b_j, a~_ij> / <b_j, b_j> with a~_ij the rows
/// i, i+m2, i+2*m2, ... of column j.
Matrix updateLast(const Matrix& A, const Matrix& B, const Matrix* prev = nullptr,
                  const Mask* mask = nullptr);

/// Middle-factor update of B (.) W (.) C: for each (i, j), gathers the rows
/// multiplying w_ij (see gatherRows) and solves the scalar least-squares
/// problem against [b_1j c_j; ...; b_m1,j c_j].
Matrix updateMiddle(const Matrix& A, const Matrix& B, const Matrix& C,
                    const Matrix* prev = nullptr, const Mask* mask = nullptr);

/// |chain - A|_F^2, masked when a mask is given.
double loss(const Matrix& A, const FactorList& factors, const Mask* mask = nullptr);

/// Normalizes every column of every factor but the last to unit 2-norm with
/// its first nonzero entry positive, pushing the accumulated scale into the
/// last factor. The chained product is unchanged.
void canonicalize(FactorList& factors);

/// Seeded uniform [-1,1) factors with the given row counts, drawn in order.
FactorList randomFactors(const std::vector<Index>& rowCounts, Index cols,
                         const FitConfig& cfg);

/// Alternating exact 1-D minimization for the two-factor model; factors are
/// canonicalized after fitting. The trace records the squared (masked) loss.
Result fitPair(const Matrix& A, const FitConfig& cfg, FactorList init,
               const Mask* mask = nullptr);

/// Cyclic sweeps for k >= 2 factors: factor t is updated with the chained
/// product of its predecessors as B and of its successors as C (single-row
/// ones at the ends). Reduces to fitPair when k == 2.
Result fitCascade(const Matrix& A, const FitConfig& cfg, FactorList init,
                  const Mask* mask = nullptr);

}  // namespace lowrank::khatri_rao
