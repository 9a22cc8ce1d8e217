#pragma once

#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/types.hpp"

namespace lowrank {

/// Shared column partition for the partition-wise Khatri-Rao product: the
/// left factor is split into blocks of widths leftWidths, the right factor
/// into blocks of widths rightWidths. Both lists must have the same length.
struct PartitionSpec {
  std::vector<Index> leftWidths;
  std::vector<Index> rightWidths;
};

/// Entrywise product of two equally shaped matrices.
Matrix hadamardProduct(const Matrix& a, const Matrix& b);

/// Size cap (in entries) for materialized Kronecker products. Defaults to
/// 2^24 and can be overridden with the LOWRANK_SIZE_CAP environment variable.
Index kroneckerSizeCap();

/// Block product: block (i,j) of the result is a(i,j)*b; shape (IK)x(JL).
/// Throws OverflowGuard if the result would exceed `sizeCap` entries
/// (sizeCap < 0 means use kroneckerSizeCap()).
Matrix kroneckerProduct(const Matrix& a, const Matrix& b, Index sizeCap = -1);

/// Matching column-wise Kronecker product: column k of the result is the
/// Kronecker product of column k of a and column k of b; shape (IJ)xK.
Matrix khatriRaoProduct(const Matrix& a, const Matrix& b);

/// Blockwise Kronecker product over the shared column partition: block r of
/// the result is kron(A_r, B_r); the output has sum(M_r * N_r) columns.
Matrix partitionwiseKhatriRao(const Matrix& a, const Matrix& b, const PartitionSpec& spec);

/// Number of singular values exceeding relTol * sigma_max (zero matrix has
/// rank 0). relTol must lie in (0, 1).
int numericalRank(const Matrix& a, double relTol = 1e-9);

/// Kruskal rank: the largest r such that every set of r columns is linearly
/// independent (via numericalRank on each subset). Exhaustive over column
/// subsets; throws TooManyColumns above `maxCols`.
int kRank(const Matrix& a, double relTol = 1e-9, Index maxCols = 16);

/// Sum over observed entries (mask == 1) of (a - approx)^2. With an all-ones
/// mask this is the squared Frobenius norm of the difference.
double maskedFrobeniusLoss(const Matrix& a, const Matrix& approx, const Mask& mask);

}  // namespace lowrank
