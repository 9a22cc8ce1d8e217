#include "lowrank/als.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <string>

#include "lowrank/matops.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/rng.hpp"

namespace lowrank::als {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Solves (G + lambda*I) X = rhs for a symmetric positive semidefinite G.
// Never forms an explicit inverse. With lambda == 0 a rank-deficient or
// badly conditioned G raises SingularNormalEquations.
Matrix solveNormalEquations(Matrix G, double lambda, const Matrix& rhs) {
  if (lambda != 0.0) G.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success)
    throw SingularNormalEquations("normal-equations matrix is not positive definite");
  if (lambda == 0.0) {
    const auto d = llt.matrixLLT().diagonal();
    const double dmin = d.minCoeff(), dmax = d.maxCoeff();
    if (!(dmin > 0.0) || (dmin / dmax) * (dmin / dmax) < 1e-14)
      throw SingularNormalEquations("normal-equations matrix is numerically singular");
  }
  return llt.solve(rhs);
}

std::vector<std::vector<Index>> observedRowsPerColumn(const Mask& mask) {
  std::vector<std::vector<Index>> obs(static_cast<std::size_t>(mask.cols()));
  for (Index n = 0; n < mask.cols(); ++n)
    for (Index m = 0; m < mask.rows(); ++m)
      if (mask(m, n) != 0) obs[static_cast<std::size_t>(n)].push_back(m);
  return obs;
}

std::vector<std::vector<Index>> observedColsPerRow(const Mask& mask) {
  std::vector<std::vector<Index>> obs(static_cast<std::size_t>(mask.rows()));
  for (Index m = 0; m < mask.rows(); ++m)
    for (Index n = 0; n < mask.cols(); ++n)
      if (mask(m, n) != 0) obs[static_cast<std::size_t>(m)].push_back(n);
  return obs;
}

void checkFactorShapes(const Matrix& A, const Factors& f, int rank) {
  if (f.W.rows() != A.rows() || f.Z.cols() != A.cols() ||
      f.W.cols() != rank || f.Z.rows() != rank)
    throw ShapeMismatch("ALS: factor shapes do not match A and the target rank");
}

}  // namespace

Matrix updateZ(const Matrix& W, const Matrix& A, double lambdaZ) {
  if (W.rows() != A.rows())
    throw ShapeMismatch("updateZ: W and A row counts differ");
  return solveNormalEquations(W.transpose() * W, lambdaZ, W.transpose() * A);
}

Matrix updateW(const Matrix& Z, const Matrix& A, double lambdaW) {
  if (Z.cols() != A.cols())
    throw ShapeMismatch("updateW: Z and A column counts differ");
  Matrix Wt = solveNormalEquations(Z * Z.transpose(), lambdaW, Z * A.transpose());
  return Wt.transpose();
}

Vector updateZColumnMasked(const Matrix& W, const Vector& aCol,
                           const std::vector<Index>& obs, double lambdaZ) {
  if (aCol.size() != W.rows())
    throw ShapeMismatch("updateZColumnMasked: column length does not match W");
  const Index K = W.cols();
  if (obs.empty()) {
    if (lambdaZ == 0.0)
      throw EmptyObservation("updateZColumnMasked: no observed rows and no ridge");
    return Vector::Zero(K);
  }
  Matrix Wo(static_cast<Index>(obs.size()), K);
  Vector ao(static_cast<Index>(obs.size()));
  for (std::size_t r = 0; r < obs.size(); ++r) {
    Wo.row(static_cast<Index>(r)) = W.row(obs[r]);
    ao(static_cast<Index>(r)) = aCol(obs[r]);
  }
  return solveNormalEquations(Wo.transpose() * Wo, lambdaZ, Wo.transpose() * ao);
}

Vector updateWRowMasked(const Matrix& Z, const Vector& bRow,
                        const std::vector<Index>& obs, double lambdaW) {
  if (bRow.size() != Z.cols())
    throw ShapeMismatch("updateWRowMasked: row length does not match Z");
  const Index K = Z.rows();
  if (obs.empty()) {
    if (lambdaW == 0.0)
      throw EmptyObservation("updateWRowMasked: no observed columns and no ridge");
    return Vector::Zero(K);
  }
  Matrix Zp(K, static_cast<Index>(obs.size()));
  Vector bp(static_cast<Index>(obs.size()));
  for (std::size_t c = 0; c < obs.size(); ++c) {
    Zp.col(static_cast<Index>(c)) = Z.col(obs[c]);
    bp(static_cast<Index>(c)) = bRow(obs[c]);
  }
  return solveNormalEquations(Zp * Zp.transpose(), lambdaW, Zp * bp);
}

Factors randomFactors(Index rows, Index cols, const FitConfig& cfg,
                      bool requireFullRank) {
  Rng rng(cfg.seed);
  const Index K = cfg.rank;
  for (int attempt = 0; attempt < 5; ++attempt) {
    Factors f{rng.uniformMatrix(rows, K), rng.uniformMatrix(K, cols)};
    if (!requireFullRank ||
        (numericalRank(f.W) == K && numericalRank(f.Z) == K))
      return f;
  }
  throw PreconditionViolation("randomFactors: could not draw full-rank factors");
}

double regularizedObjective(const Matrix& A, const Factors& f, double lambdaW,
                            double lambdaZ) {
  return (f.W * f.Z - A).squaredNorm() + lambdaW * f.W.squaredNorm() +
         lambdaZ * f.Z.squaredNorm();
}

Result fitPlain(const Matrix& A, const FitConfig& cfg, Factors init) {
  const Index M = A.rows(), N = A.cols(), K = cfg.rank;
  if (cfg.lambdaW != 0.0 || cfg.lambdaZ != 0.0)
    throw PreconditionViolation("fitPlain: requires lambdaW == lambdaZ == 0");
  if (M != N) throw PreconditionViolation("fitPlain: requires a square matrix");
  if (K >= M) throw PreconditionViolation("fitPlain: requires rank < size");
  checkFactorShapes(A, init, cfg.rank);
  if (numericalRank(init.W) != K || numericalRank(init.Z) != K)
    throw PreconditionViolation("fitPlain: initial factors must have full rank");

  Result res{std::move(init), {}};
  const auto start = Clock::now();
  auto loss = [&] { return (A - res.factors.W * res.factors.Z).norm(); };
  res.trace.initialLoss = loss();
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    res.factors.Z = updateZ(res.factors.W, A, 0.0);
    if (numericalRank(res.factors.Z) != K)
      throw PreconditionViolation("fitPlain: Z lost full rank after updating");
    res.factors.W = updateW(res.factors.Z, A, 0.0);
    if (numericalRank(res.factors.W) != K)
      throw PreconditionViolation("fitPlain: W lost full rank after updating");
    current = loss();
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

Result fitRegularized(const Matrix& A, const FitConfig& cfg, Factors init) {
  if (!(cfg.lambdaW > 0.0) || !(cfg.lambdaZ > 0.0))
    throw PreconditionViolation("fitRegularized: requires lambdaW, lambdaZ > 0");
  checkFactorShapes(A, init, cfg.rank);

  Result res{std::move(init), {}};
  const auto start = Clock::now();
  auto loss = [&] { return (A - res.factors.W * res.factors.Z).norm(); };
  res.trace.initialLoss = loss();
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    res.factors.Z = updateZ(res.factors.W, A, cfg.lambdaZ);
    res.factors.W = updateW(res.factors.Z, A, cfg.lambdaW);
    current = loss();
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

Result fitMasked(const Matrix& A, const Mask& mask, const FitConfig& cfg,
                 Factors init) {
  if (!sameShape(A, mask)) throw ShapeMismatch("fitMasked: mask shape differs from A");
  if (!(cfg.lambdaW > 0.0) || !(cfg.lambdaZ > 0.0))
    throw PreconditionViolation("fitMasked: requires lambdaW, lambdaZ > 0");
  checkFactorShapes(A, init, cfg.rank);

  const auto colObs = observedRowsPerColumn(mask);
  const auto rowObs = observedColsPerRow(mask);
  Result res{std::move(init), {}};
  const auto start = Clock::now();
  auto loss = [&] {
    return maskedFrobeniusLoss(A, res.factors.W * res.factors.Z, mask);
  };
  res.trace.initialLoss = loss();
  double current = res.trace.initialLoss;
  int iter = 0;
  while (current > cfg.tol && iter < cfg.maxIters) {
    ++iter;
    Factors& f = res.factors;
    parallelFor(A.cols(), cfg.threads, [&](Index n) {
      f.Z.col(n) = updateZColumnMasked(f.W, A.col(n),
                                       colObs[static_cast<std::size_t>(n)],
                                       cfg.lambdaZ);
    });
    parallelFor(A.rows(), cfg.threads, [&](Index m) {
      f.W.row(m) = updateWRowMasked(f.Z, A.row(m).transpose(),
                                    rowObs[static_cast<std::size_t>(m)],
                                    cfg.lambdaW)
                       .transpose();
    });
    current = loss();
    res.trace.records.push_back({iter, current, seconds(start)});
  }
  res.trace.stopReason =
      current <= cfg.tol ? StopReason::ToleranceMet : StopReason::IterationCap;
  return res;
}

}  // namespace lowrank::als
