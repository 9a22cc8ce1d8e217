#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lowrank/rng.hpp"
#include "lowrank/types.hpp"

namespace lowrank::testing {

inline Matrix randomMatrix(Rng& rng, Index rows, Index cols) {
  return rng.uniformMatrix(rows, cols);
}

/// Rank-r product of two uniform factors.
inline Matrix randomLowRank(Rng& rng, Index rows, Index cols, Index r) {
  return rng.uniformMatrix(rows, r) * rng.uniformMatrix(r, cols);
}

inline Matrix randomOrthogonal(Rng& rng, Index n) {
  const Matrix raw = rng.uniformMatrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(raw);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

/// Random matrix with singular values in [0.7, 1.5]: far from singular, so
/// inverse/pseudoinverse identities can be checked at tight absolute
/// tolerances.
inline Matrix wellConditioned(Rng& rng, Index rows, Index cols) {
  const Index k = std::min(rows, cols);
  const Matrix u = randomOrthogonal(rng, rows).leftCols(k);
  const Matrix v = randomOrthogonal(rng, cols).leftCols(k);
  Vector s(k);
  for (Index i = 0; i < k; ++i) s(i) = 0.7 + 0.8 * rng.uniform01();
  return u * s.asDiagonal() * v.transpose();
}

inline double maxAbsDiff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline Matrix pseudoInverse(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Vector inv(sv.size());
  const double cutoff = 1e-13 * sv(0);
  for (Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Central finite difference of f along one coordinate reached through get/set.
inline double centralDifference(const std::function<double()>& f, double& coord,
                                double h = 1e-6) {
  const double saved = coord;
  coord = saved + h;
  const double up = f();
  coord = saved - h;
  const double down = f();
  coord = saved;
  return (up - down) / (2.0 * h);
}

/// Entrywise gradient check: |ga - gf| <= tol * max(1, |ga|, |gf|).
inline bool gradientsClose(const Vector& analytic, const Vector& fd, double tol = 1e-5) {
  for (Index i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({1.0, std::abs(analytic(i)), std::abs(fd(i))});
    if (std::abs(analytic(i) - fd(i)) > tol * scale) return false;
  }
  return true;
}

/// Exact 1-D minimizer of a quadratic sampled at -1, 0, 1; an independent
/// route to scalar least-squares solutions.
inline double parabolaMinimizer(const std::function<double(double)>& f) {
  const double fm = f(-1.0), f0 = f(0.0), fp = f(1.0);
  const double curvature = fm + fp - 2.0 * f0;
  return (fm - fp) / (2.0 * curvature);
}

/// Index-formula Kronecker oracle, independent of the block-assignment path.
inline Matrix kroneckerOracle(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index p = 0; p < b.rows(); ++p)
        for (Index q = 0; q < b.cols(); ++q)
          out(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return out;
}

inline std::vector<Index> allIndices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

}  // namespace lowrank::testing
