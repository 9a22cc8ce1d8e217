#include "lowrank/kronecker.hpp"

#include <chrono>
#include <string>

#include "lowrank/parallel.hpp"
#include "lowrank/rng.hpp"

namespace lowrank::kronecker {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

}  // namespace

void checkBlocking(const Blocking& s, Index rows, Index cols) {
  if (s.m1 <= 0 || s.m2 <= 0 || s.n1 <= 0 || s.n2 <= 0 ||
      s.m1 * s.m2 != rows || s.n1 * s.n2 != cols)
    throw PartitionMismatch("kronecker: blocking " + std::to_string(s.m1) + "x" +
                            std::to_string(s.m2) + "," + std::to_string(s.n1) +
                            "x" + std::to_string(s.n2) + " does not tile " +
                            std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix blockAt(const Matrix& A, const Blocking& s, Index i, Index j) {
  checkBlocking(s, A.rows(), A.cols());
  if (i < 0 || i >= s.m1 || j < 0 || j >= s.n1)
    throw IndexOutOfRange("blockAt: block index out of range");
  return A.block(i * s.m2, j * s.n2, s.m2, s.n2);
}

Matrix stridedBlockAt(const Matrix& A, const Blocking& s, Index i, Index j) {
  checkBlocking(s, A.rows(), A.cols());
  if (i < 0 || i >= s.m2 || j < 0 || j >= s.n2)
    throw IndexOutOfRange("stridedBlockAt: block index out of range");
  Matrix out(s.m1, s.n1);
  for (Index p = 0; p < s.m1; ++p)
    for (Index q = 0; q < s.n1; ++q) out(p, q) = A(i + p * s.m2, j + q * s.n2);
  return out;
}

Matrix updateB(const Matrix& A, const Blocking& s, const Matrix& C,
               const Mask* mask, const Matrix* prev, int threads) {
  checkBlocking(s, A.rows(), A.cols());
  if (C.rows() != s.m2 || C.cols() != s.n2)
    throw ShapeMismatch("updateB: C does not match the blocking");
  if (mask == nullptr) {
    double den = 0.0;
    for (Index p = 0; p < s.m2; ++p)
      for (Index q = 0; q < s.n2; ++q) den += C(p, q) * C(p, q);
    if (den == 0.0) throw ZeroDenominator("updateB: C is the zero matrix");
    Matrix B(s.m1, s.n1);
    parallelFor(s.m1 * s.n1, threads, [&](Index e) {
      const Index i = e / s.n1, j = e % s.n1;
      double num = 0.0;
      for (Index p = 0; p < s.m2; ++p)
        for (Index q = 0; q < s.n2; ++q)
          num += A(i * s.m2 + p, j * s.n2 + q) * C(p, q);
      B(i, j) = num / den;
    });
    return B;
  }

  Matrix B(s.m1, s.n1);
  parallelFor(s.m1 * s.n1, threads, [&](Index e) {
    const Index i = e / s.n1, j = e % s.n1;
    double num = 0.0, den = 0.0;
    for (Index p = 0; p < s.m2; ++p)
      for (Index q = 0; q < s.n2; ++q)
        if ((*mask)(i * s.m2 + p, j * s.n2 + q) != 0) {
          num += A(i * s.m2 + p, j * s.n2 + q) * C(p, q);
          den += C(p, q) * C(p, q);
        }
    if (den == 0.0) {
      if (prev == nullptr)
        throw ZeroDenominator("updateB: block (" + std::to_string(i) + "," +
                              std::to_string(j) +
                              ") has no usable observations and no previous value");
      B(i, j) = (*prev)(i, j);
    } else {
      B(i, j) = num / den;
    }
  });
  return B;
}

Matrix updateC(const Matrix& A, const Blocking& s, const Matrix& B,
               const Mask* mask, const Matrix* prev, int threads) {
  checkBlocking(s, A.rows(), A.cols());
  if (B.rows() != s.m1 || B.cols() != s.n1)
    throw ShapeMismatch("updateC: B does not match the blocking");
  if (mask == nullptr) {
    double den = 0.0;
    for (Index p = 0; p < s.m1; ++p)
      for (Index q = 0; q < s.n1; ++q) den += B(p, q) * B(p, q);
    if (den == 0.0) throw ZeroDenominator("updateC: B is the zero matrix");
    Matrix C(s.m2, s.n2);
    parallelFor(s.m2 * s.n2, threads, [&](Index e) {
      const Index i = e / s.n2, j = e % s.n2;
      double num = 0.0;
      for (Index p = 0; p < s.m1; ++p)
        for (Index q = 0; q < s.n1; ++q)
          num += A(i + p * s.m2, j + q * s.n2) * B(p, q);
      C(i, j) = num / den;
    });
    return C;
  }

  Matrix C(s.m2, s.n2);
  parallelFor(s.m2 * s.n2, threads, [&](Index e) {
    const Index i = e / s.n2, j = e % s.n2;
    double num = 0.0, den = 0.0;
    for (Index p = 0; p < s.m1; ++p)
      for (Index q = 0; q < s.n1; ++q)
        if ((*mask)(i + p * s.m2, j + q * s.n2) != 0) {
          num += A(i + p * s.m2, j + q * s.n2) * B(p, q);
          den += B(p, q) * B(p, q);
        }
    if (den == 0.0) {
      if (prev == nullptr)
        throw ZeroDenominator("updateC: block (" + std::to_string(i) + "," +
                              std::to_string(j) +
                              ") has no usable observations and no previous value");
      C(i, j) = (*prev)(i, j);
    } else {
      C(i, j) = num / den;
    }
  });
  return C;
}

double loss(const Matrix& A, const Blocking& s, const Factors& f,
            const Mask* mask) {
  checkBlocking(s, A.rows(), A.cols());
  double sum = 0.0;
  for (Index i = 0; i < s.m1; ++i)
    for (Index j = 0; j < s.n1; ++j)
      for (Index p = 0; p < s.m2; ++p)
        for (Index q = 0; q < s.n2; ++q) {
          const Index r = i * s.m2 + p, c = j * s.n2 + q;
          if (mask != nullptr && (*mask)(r, c) == 0) continue;
          const double d = A(r, c) - f.B(i, j) * f.C(p, q);
          sum += d * d;
        }
  return sum;
}

Factors randomFactors(const Blocking& s, const FitConfig& cfg) {
  Rng rng(cfg.seed);
  Factors f;
  f.B = rng.uniformMatrix(s.m1, s.n1);
  f.C = rng.uniformMatrix(s.m2, s.n2);
  return f;
}

Result fit(const Matrix& A, const Blocking& s, const FitConfig& cfg,
           Factors init, const Mask* mask) {
  checkBlocking(s, A.rows(), A.cols());
  if (mask != nullptr && !sameShape(A, *mask))
    throw ShapeMismatch("kronecker::fit: mask shape differs from A");
  if (init.B.rows() != s.m1 || init.B.cols() != s.n1 ||
      init.C.rows() != s.m2 || init.C.cols() != s.n2)
    throw ShapeMismatch("kronecker::fit: init factors do not match the blocking");

  Result res{std::move(init), {}};
  Factors& f = res.factors;
  const auto start = Clock::now();
  res.trace.initialLoss = loss(A, s, f, mask);
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    f.B = updateB(A, s, f.C, mask, &f.B, cfg.threads);
    f.C = updateC(A, s, f.B, mask, &f.C, cfg.threads);
    current = loss(A, s, f, mask);
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

}  // namespace lowrank::kronecker
