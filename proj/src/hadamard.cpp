#include "lowrank/hadamard.hpp"

#include <chrono>
#include <cstddef>

#include "lowrank/matops.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/rng.hpp"

namespace lowrank::hadamard {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void checkShapes(const Factors& f, const Matrix& A) {
  const Index M = A.rows(), N = A.cols(), K = f.C1.cols();
  if (f.C1.rows() != M || f.C2.rows() != M || f.C2.cols() != K ||
      f.D1.rows() != K || f.D2.rows() != K || f.D1.cols() != N ||
      f.D2.cols() != N)
    throw ShapeMismatch("hadamard: factor shapes inconsistent with A");
}

void checkWhich(int which) {
  if (which != 1 && which != 2)
    throw IndexOutOfRange("hadamard: factor selector must be 1 or 2");
}

}  // namespace

double loss(const Factors& f, const Matrix& A, const Mask* mask) {
  checkShapes(f, A);
  const Matrix approx = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2);
  if (mask == nullptr) return (approx - A).squaredNorm();
  return maskedFrobeniusLoss(A, approx, *mask);
}

Gradients fullGradients(const Factors& f, const Matrix& A) {
  checkShapes(f, A);
  const Matrix P1 = f.C1 * f.D1;
  const Matrix P2 = f.C2 * f.D2;
  const Matrix delta = P1.cwiseProduct(P2) - A;
  const Matrix d2 = delta.cwiseProduct(P2);  // residual weighted by the other factor
  const Matrix d1 = delta.cwiseProduct(P1);
  return {2.0 * d2 * f.D1.transpose(), 2.0 * f.C1.transpose() * d2,
          2.0 * d1 * f.D2.transpose(), 2.0 * f.C2.transpose() * d1};
}

Vector columnGradientD(const Factors& f, const Matrix& A, Index n, int which,
                       const std::vector<Index>* obs) {
  checkShapes(f, A);
  checkWhich(which);
  if (n < 0 || n >= A.cols())
    throw IndexOutOfRange("columnGradientD: column index out of range");
  const Matrix& C = which == 1 ? f.C1 : f.C2;
  const Matrix& otherC = which == 1 ? f.C2 : f.C1;
  const Matrix& otherD = which == 1 ? f.D2 : f.D1;
  const Vector d = which == 1 ? f.D1.col(n) : f.D2.col(n);
  if (obs == nullptr) {
    const Vector aOther = otherC * otherD.col(n);
    return 2.0 * C.transpose() *
           (((C * d).cwiseProduct(aOther) - A.col(n)).cwiseProduct(aOther));
  }
  const Index K = C.cols();
  if (obs->empty()) return Vector::Zero(K);
  Matrix Co(static_cast<Index>(obs->size()), K);
  Vector ao(static_cast<Index>(obs->size()));
  Vector aOther(static_cast<Index>(obs->size()));
  for (std::size_t r = 0; r < obs->size(); ++r) {
    const Index m = (*obs)[r];
    Co.row(static_cast<Index>(r)) = C.row(m);
    ao(static_cast<Index>(r)) = A(m, n);
    aOther(static_cast<Index>(r)) = otherC.row(m) * otherD.col(n);
  }
  return 2.0 * Co.transpose() *
         (((Co * d).cwiseProduct(aOther) - ao).cwiseProduct(aOther));
}

Vector rowGradientC(const Factors& f, const Matrix& A, Index m, int which,
                    const std::vector<Index>* obs) {
  checkShapes(f, A);
  checkWhich(which);
  if (m < 0 || m >= A.rows())
    throw IndexOutOfRange("rowGradientC: row index out of range");
  const Matrix& D = which == 1 ? f.D1 : f.D2;
  const Matrix& otherC = which == 1 ? f.C2 : f.C1;
  const Matrix& otherD = which == 1 ? f.D2 : f.D1;
  const Vector c = which == 1 ? f.C1.row(m).transpose() : f.C2.row(m).transpose();
  if (obs == nullptr) {
    const Vector bOther = (otherC.row(m) * otherD).transpose();
    return 2.0 * D *
           (((D.transpose() * c).cwiseProduct(bOther) - A.row(m).transpose())
                .cwiseProduct(bOther));
  }
  const Index K = D.rows();
  if (obs->empty()) return Vector::Zero(K);
  Matrix Dp(K, static_cast<Index>(obs->size()));
  Vector bp(static_cast<Index>(obs->size()));
  Vector bOther(static_cast<Index>(obs->size()));
  for (std::size_t cidx = 0; cidx < obs->size(); ++cidx) {
    const Index n = (*obs)[cidx];
    Dp.col(static_cast<Index>(cidx)) = D.col(n);
    bp(static_cast<Index>(cidx)) = A(m, n);
    bOther(static_cast<Index>(cidx)) = otherC.row(m) * otherD.col(n);
  }
  return 2.0 * Dp *
         (((Dp.transpose() * c).cwiseProduct(bOther) - bp).cwiseProduct(bOther));
}

Factors randomFactors(Index rows, Index cols, const FitConfig& cfg) {
  Rng rng(cfg.seed);
  const Index K = cfg.rank;
  const double scale = 1.0 / std::sqrt(static_cast<double>(K));
  Factors f;
  f.C1 = rng.uniformMatrix(rows, K, scale);
  f.C2 = rng.uniformMatrix(rows, K, scale);
  f.D1 = rng.uniformMatrix(K, cols, scale);
  f.D2 = rng.uniformMatrix(K, cols, scale);
  return f;
}

Result fit(const Matrix& A, const FitConfig& cfg, Factors init, DeltaMode mode) {
  checkShapes(init, A);
  if (cfg.step < 0.0) throw PreconditionViolation("hadamard::fit: negative step size");

  Result res{std::move(init), {}};
  Factors& f = res.factors;
  const auto start = Clock::now();
  res.trace.initialLoss = loss(f, A);
  double current = res.trace.initialLoss;
  const double eta = cfg.step;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    Matrix delta = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2) - A;
    const bool refresh = mode == DeltaMode::Recompute;

    f.C1 -= eta * (2.0 * delta.cwiseProduct(f.C2 * f.D2) * f.D1.transpose() +
                   2.0 * cfg.lambdaW * f.C1);
    if (refresh) delta = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2) - A;

    f.D1 -= eta * (2.0 * f.C1.transpose() * delta.cwiseProduct(f.C2 * f.D2) +
                   2.0 * cfg.lambdaZ * f.D1);
    if (refresh) delta = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2) - A;

    f.C2 -= eta * (2.0 * delta.cwiseProduct(f.C1 * f.D1) * f.D2.transpose() +
                   2.0 * cfg.lambdaW * f.C2);
    if (refresh) delta = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2) - A;

    f.D2 -= eta * (2.0 * f.C2.transpose() * delta.cwiseProduct(f.C1 * f.D1) +
                   2.0 * cfg.lambdaZ * f.D2);

    current = loss(f, A);
    res.trace.records.push_back({iter, current, seconds(start)});
    if (current > 1e6 * res.trace.initialLoss)
      throw DivergenceDetected("hadamard::fit: loss exceeded 1e6x initial; reduce the step size");
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

Result fitMasked(const Matrix& A, const Mask& mask, const FitConfig& cfg,
                 Factors init) {
  checkShapes(init, A);
  if (!sameShape(A, mask))
    throw ShapeMismatch("hadamard::fitMasked: mask shape differs from A");
  if (cfg.step < 0.0)
    throw PreconditionViolation("hadamard::fitMasked: negative step size");

  std::vector<std::vector<Index>> colObs(static_cast<std::size_t>(A.cols()));
  std::vector<std::vector<Index>> rowObs(static_cast<std::size_t>(A.rows()));
  for (Index m = 0; m < A.rows(); ++m)
    for (Index n = 0; n < A.cols(); ++n)
      if (mask(m, n) != 0) {
        colObs[static_cast<std::size_t>(n)].push_back(m);
        rowObs[static_cast<std::size_t>(m)].push_back(n);
      }

  Result res{std::move(init), {}};
  Factors& f = res.factors;
  const auto start = Clock::now();
  res.trace.initialLoss = loss(f, A, &mask);
  double current = res.trace.initialLoss;
  const double eta = cfg.step;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    // Columns are independent given C1, C2 (and rows given D1, D2): each task
    // touches only its own column (row) of the D (C) factors.
    parallelFor(A.cols(), cfg.threads, [&](Index n) {
      const auto& obs = colObs[static_cast<std::size_t>(n)];
      f.D1.col(n) -= eta * (columnGradientD(f, A, n, 1, &obs) +
                            2.0 * cfg.lambdaZ * f.D1.col(n));
      f.D2.col(n) -= eta * (columnGradientD(f, A, n, 2, &obs) +
                            2.0 * cfg.lambdaZ * f.D2.col(n));
    });
    parallelFor(A.rows(), cfg.threads, [&](Index m) {
      const auto& obs = rowObs[static_cast<std::size_t>(m)];
      f.C1.row(m) -= eta * (rowGradientC(f, A, m, 1, &obs) +
                            2.0 * cfg.lambdaW * f.C1.row(m).transpose())
                               .transpose();
      f.C2.row(m) -= eta * (rowGradientC(f, A, m, 2, &obs) +
                            2.0 * cfg.lambdaW * f.C2.row(m).transpose())
                               .transpose();
    });
    current = loss(f, A, &mask);
    res.trace.records.push_back({iter, current, seconds(start)});
    if (current > 1e6 * res.trace.initialLoss)
      throw DivergenceDetected("hadamard::fitMasked: loss exceeded 1e6x initial; reduce the step size");
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

}  // namespace lowrank::hadamard
