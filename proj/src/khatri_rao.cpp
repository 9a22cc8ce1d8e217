#include "lowrank/khatri_rao.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "lowrank/matops.hpp"
#include "lowrank/rng.hpp"

namespace lowrank::khatri_rao {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Index checkDivides(Index rows, Index factorRows, const char* who) {
  if (factorRows <= 0 || rows % factorRows != 0)
    throw ShapeMismatch(std::string(who) + ": factor row count " +
                        std::to_string(factorRows) + " does not divide " +
                        std::to_string(rows));
  return rows / factorRows;
}

void checkFactors(const Matrix& A, const FactorList& factors) {
  if (factors.size() < 2)
    throw PreconditionViolation("khatri_rao: at least two factors required");
  Index rowProduct = 1;
  for (const Matrix& f : factors) {
    if (f.cols() != A.cols())
      throw ShapeMismatch("khatri_rao: factor column count differs from A");
    rowProduct *= f.rows();
  }
  if (rowProduct != A.rows())
    throw ShapeMismatch("khatri_rao: factor row counts do not multiply to A's");
}

}  // namespace

Matrix chainProduct(const FactorList& factors) {
  if (factors.empty()) throw PreconditionViolation("chainProduct: no factors");
  Matrix out = factors.front();
  for (std::size_t t = 1; t < factors.size(); ++t)
    out = khatriRaoProduct(out, factors[t]);
  return out;
}

std::vector<Index> gatherRows(Index m1, Index n, Index m2, Index i) {
  if (i < 0 || i >= n) throw IndexOutOfRange("gatherRows: row index out of range");
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(m1 * m2));
  for (Index p = 0; p < m1; ++p)
    for (Index q = 0; q < m2; ++q) rows.push_back(p * (n * m2) + i * m2 + q);
  return rows;
}

Matrix updateMiddle(const Matrix& A, const Matrix& B, const Matrix& C,
                    const Matrix* prev, const Mask* mask) {
  const Index N = A.cols();
  if (B.cols() != N || C.cols() != N)
    throw ShapeMismatch("updateMiddle: factor column counts differ from A");
  const Index m1 = B.rows(), m2 = C.rows();
  const Index n = checkDivides(A.rows(), m1 * m2, "updateMiddle");
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("updateMiddle: mask shape differs from A");
  if (prev != nullptr && (prev->rows() != n || prev->cols() != N))
    throw ShapeMismatch("updateMiddle: previous factor has the wrong shape");

  Matrix W(n, N);
  for (Index j = 0; j < N; ++j) {
    double fullDen = 0.0;
    if (mask == nullptr)
      for (Index p = 0; p < m1; ++p)
        for (Index q = 0; q < m2; ++q) {
          const double w = B(p, j) * C(q, j);
          fullDen += w * w;
        }
    for (Index i = 0; i < n; ++i) {
      double num = 0.0;
      double den = fullDen;
      if (mask == nullptr) {
        for (Index p = 0; p < m1; ++p)
          for (Index q = 0; q < m2; ++q)
            num += B(p, j) * C(q, j) * A(p * (n * m2) + i * m2 + q, j);
      } else {
        den = 0.0;
        for (Index p = 0; p < m1; ++p)
          for (Index q = 0; q < m2; ++q) {
            const Index r = p * (n * m2) + i * m2 + q;
            if ((*mask)(r, j) != 0) {
              const double w = B(p, j) * C(q, j);
              num += w * A(r, j);
              den += w * w;
            }
          }
      }
      if (den == 0.0) {
        if (prev == nullptr)
          throw ZeroDenominator("updateMiddle: zero gather vector at (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                ") and no previous value");
        W(i, j) = (*prev)(i, j);
      } else {
        W(i, j) = num / den;
      }
    }
  }
  return W;
}

Matrix updateFirst(const Matrix& A, const Matrix& C, const Matrix* prev,
                   const Mask* mask) {
  const Index N = A.cols();
  if (C.cols() != N)
    throw ShapeMismatch("updateFirst: C column count differs from A");
  const Index m2 = C.rows();
  const Index m1 = checkDivides(A.rows(), m2, "updateFirst");
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("updateFirst: mask shape differs from A");
  if (prev != nullptr && (prev->rows() != m1 || prev->cols() != N))
    throw ShapeMismatch("updateFirst: previous factor has the wrong shape");

  Matrix B(m1, N);
  for (Index j = 0; j < N; ++j) {
    double fullDen = 0.0;
    if (mask == nullptr)
      for (Index q = 0; q < m2; ++q) fullDen += C(q, j) * C(q, j);
    for (Index i = 0; i < m1; ++i) {
      double num = 0.0;
      double den = fullDen;
      if (mask == nullptr) {
        for (Index q = 0; q < m2; ++q) num += C(q, j) * A(i * m2 + q, j);
      } else {
        den = 0.0;
        for (Index q = 0; q < m2; ++q)
          if ((*mask)(i * m2 + q, j) != 0) {
            num += C(q, j) * A(i * m2 + q, j);
            den += C(q, j) * C(q, j);
          }
      }
      if (den == 0.0) {
        if (prev == nullptr)
          throw ZeroDenominator("updateFirst: zero column c_" + std::to_string(j) +
                                " and no previous value");
        B(i, j) = (*prev)(i, j);
      } else {
        B(i, j) = num / den;
      }
    }
  }
  return B;
}

Matrix updateLast(const Matrix& A, const Matrix& B, const Matrix* prev,
                  const Mask* mask) {
  const Index N = A.cols();
  if (B.cols() != N)
    throw ShapeMismatch("updateLast: B column count differs from A");
  const Index m1 = B.rows();
  const Index m2 = checkDivides(A.rows(), m1, "updateLast");
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("updateLast: mask shape differs from A");
  if (prev != nullptr && (prev->rows() != m2 || prev->cols() != N))
    throw ShapeMismatch("updateLast: previous factor has the wrong shape");

  Matrix C(m2, N);
  for (Index j = 0; j < N; ++j) {
    double fullDen = 0.0;
    if (mask == nullptr)
      for (Index p = 0; p < m1; ++p) fullDen += B(p, j) * B(p, j);
    for (Index i = 0; i < m2; ++i) {
      double num = 0.0;
      double den = fullDen;
      if (mask == nullptr) {
        for (Index p = 0; p < m1; ++p) num += B(p, j) * A(i + p * m2, j);
      } else {
        den = 0.0;
        for (Index p = 0; p < m1; ++p)
          if ((*mask)(i + p * m2, j) != 0) {
            num += B(p, j) * A(i + p * m2, j);
            den += B(p, j) * B(p, j);
          }
      }
      if (den == 0.0) {
        if (prev == nullptr)
          throw ZeroDenominator("updateLast: zero column b_" + std::to_string(j) +
                                " and no previous value");
        C(i, j) = (*prev)(i, j);
      } else {
        C(i, j) = num / den;
      }
    }
  }
  return C;
}

double loss(const Matrix& A, const FactorList& factors, const Mask* mask) {
  checkFactors(A, factors);
  const Matrix chain = chainProduct(factors);
  if (mask == nullptr) return (chain - A).squaredNorm();
  return maskedFrobeniusLoss(A, chain, *mask);
}

void canonicalize(FactorList& factors) {
  if (factors.size() < 2) return;
  const Index N = factors.front().cols();
  Matrix& last = factors.back();
  for (Index j = 0; j < N; ++j) {
    double scale = 1.0;
    for (std::size_t t = 0; t + 1 < factors.size(); ++t) {
      auto col = factors[t].col(j);
      const double norm = col.norm();
      if (norm == 0.0) continue;
      col /= norm;
      double sign = 1.0;
      for (Index r = 0; r < col.size(); ++r)
        if (col(r) != 0.0) {
          sign = col(r) < 0.0 ? -1.0 : 1.0;
          break;
        }
      col *= sign;
      scale *= norm * sign;
    }
    last.col(j) *= scale;
  }
}

FactorList randomFactors(const std::vector<Index>& rowCounts, Index cols,
                         const FitConfig& cfg) {
  Rng rng(cfg.seed);
  FactorList factors;
  factors.reserve(rowCounts.size());
  for (Index r : rowCounts) factors.push_back(rng.uniformMatrix(r, cols));
  return factors;
}

Result fitPair(const Matrix& A, const FitConfig& cfg, FactorList init,
               const Mask* mask) {
  checkFactors(A, init);
  if (init.size() != 2)
    throw PreconditionViolation("fitPair: exactly two factors required");
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("fitPair: mask shape differs from A");

  Result res{std::move(init), {}};
  FactorList& f = res.factors;
  const auto start = Clock::now();
  res.trace.initialLoss = loss(A, f, mask);
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    f[0] = updateFirst(A, f[1], &f[0], mask);
    f[1] = updateLast(A, f[0], &f[1], mask);
    current = loss(A, f, mask);
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  canonicalize(res.factors);
  return res;
}

Result fitCascade(const Matrix& A, const FitConfig& cfg, FactorList init,
                  const Mask* mask) {
  checkFactors(A, init);
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("fitCascade: mask shape differs from A");

  Result res{std::move(init), {}};
  FactorList& f = res.factors;
  const std::size_t k = f.size();
  const Matrix onesRow = Matrix::Ones(1, A.cols());
  const auto start = Clock::now();
  res.trace.initialLoss = loss(A, f, mask);
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    for (std::size_t t = 0; t < k; ++t) {
      // Regroup neighbors: predecessors play the leading role, successors the
      // trailing one; single-row ones at the ends.
      Matrix B = onesRow;
      for (std::size_t u = 0; u < t; ++u)
        B = u == 0 ? f[u] : khatriRaoProduct(B, f[u]);
      Matrix C = onesRow;
      for (std::size_t u = t + 1; u < k; ++u)
        C = u == t + 1 ? f[u] : khatriRaoProduct(C, f[u]);
      f[t] = updateMiddle(A, B, C, &f[t], mask);
    }
    current = loss(A, f, mask);
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  canonicalize(res.factors);
  return res;
}

}  // namespace lowrank::khatri_rao
