#pragma once

#include "lowrank/errors.hpp"
#include "lowrank/fit.hpp"
#include "lowrank/types.hpp"

namespace lowrank::kronecker {

/// Uniform blocking of an MxN matrix into an m1 x n1 grid of m2 x n2 blocks;
/// requires m1*m2 == M and n1*n2 == N exactly.
struct Blocking {
  Index m1;
  Index m2;
  Index n1;
  Index n2;
};

/// Factors of the model A ~ B (x) C with B (m1 x n1) and C (m2 x n2).
struct Factors {
  Matrix B;
  Matrix C;
};

using Result = FitResult<Factors>;

void checkBlocking(const Blocking& s, Index rows, Index cols);

/// Contiguous block (i, j): rows [i*m2, (i+1)*m2), cols [j*n2, (j+1)*n2).
Matrix blockAt(const Matrix& A, const Blocking& s, Index i, Index j);

/// Strided block (i, j): the m1 x n1 matrix of rows i, i+m2, i+2*m2, ... and
/// cols j, j+n2, ... — the dual view in which block (i, j) of B (x) C is
/// c_ij * B.
Matrix stridedBlockAt(const Matrix& A, const Blocking& s, Index i, Index j);

/// Per-entry closed form b_ij = sum(A_ij o C) / sum(C o C), restricted to
/// observed entries when a mask is given. A masked block with no usable
/// denominator keeps the entry from `prev` (required in that case).
Matrix updateB(const Matrix& A, const Blocking& s, const Matrix& C,
               const Mask* mask = nullptr, const Matrix* prev = nullptr,
               int threads = 1);

/// Mirror update over strided blocks: c_ij = sum(A~_ij o B) / sum(B o B).
Matrix updateC(const Matrix& A, const Blocking& s, const Matrix& B,
               const Mask* mask = nullptr, const Matrix* prev = nullptr,
               int threads = 1);

/// Squared (masked) Frobenius loss |B (x) C - A|_F^2, computed blockwise
/// without materializing the product.
double loss(const Matrix& A, const Blocking& s, const Factors& f,
            const Mask* mask = nullptr);

/// Seeded uniform [-1,1) factors (B first, then C, both row-major).
Factors randomFactors(const Blocking& s, const FitConfig& cfg);

/// Alternating exact coordinate minimization: B then C per iteration, until
/// the squared (masked) loss reaches tol or the iteration cap.
Result fit(const Matrix& A, const Blocking& s, const FitConfig& cfg,
           Factors init, const Mask* mask = nullptr);

}  // namespace lowrank::kronecker
