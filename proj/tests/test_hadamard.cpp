#include <doctest.h>

#include <cmath>
#include <vector>

#include "lowrank/hadamard.hpp"
#include "lowrank/matops.hpp"
#include "test_helpers.hpp"

using namespace lowrank;
using namespace lowrank::testing;

namespace {

hadamard::Factors plantedFactors(Rng& rng, Index M, Index N, Index K) {
  return {rng.uniformMatrix(M, K), rng.uniformMatrix(K, N),
          rng.uniformMatrix(M, K), rng.uniformMatrix(K, N)};
}

Matrix productOf(const hadamard::Factors& f) {
  return (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2);
}

// The 4x4 witness with a single nonzero in an otherwise-zero row; its best
// rank-1 approximation keeps a large residual.
Matrix witnessMatrix() {
  Matrix A(4, 4);
  A << 1, 2, 3, 4,
       0, 5, 0, 0,
       4, 3, 2, 1,
       1, 1, 1, 1;
  return A;
}

}  // namespace

TEST_CASE("hadamard loss") {
  Rng rng(20);
  hadamard::Factors f = plantedFactors(rng, 5, 4, 2);
  const Matrix A = productOf(f);
  CHECK(hadamard::loss(f, A) == 0.0);

  // With the second product pinned to all-ones the loss is the plain
  // factorization loss of (C1, D1).
  hadamard::Factors ones = f;
  ones.C2 = Matrix::Ones(5, 2);
  ones.D2 = Matrix(Matrix::Ones(2, 4) * 0.5);
  const Matrix B = randomMatrix(rng, 5, 4);
  CHECK(hadamard::loss(ones, B) ==
        doctest::Approx((ones.C1 * ones.D1 - B).squaredNorm()).epsilon(1e-12));

  // Brute-force entrywise summation oracle, masked and unmasked.
  const Matrix approx = productOf(f);
  double direct = 0.0;
  Mask mask(5, 4);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) mask(i, j) = (i + j) % 2;
  double maskedDirect = 0.0;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) {
      const double d = approx(i, j) - B(i, j);
      direct += d * d;
      if (mask(i, j)) maskedDirect += d * d;
    }
  CHECK(hadamard::loss(f, B) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(hadamard::loss(f, B, &mask) == doctest::Approx(maskedDirect).epsilon(1e-14));

  CHECK_THROWS_AS(hadamard::loss(f, randomMatrix(rng, 4, 4)), ShapeMismatch);
}

TEST_CASE("fullGradients vanish at exact factors and reduce to the plain case") {
  Rng rng(21);
  hadamard::Factors f = plantedFactors(rng, 5, 4, 2);
  const Matrix A = productOf(f);
  const hadamard::Gradients g = hadamard::fullGradients(f, A);
  CHECK(g.C1.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.D1.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.C2.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.D2.cwiseAbs().maxCoeff() < 1e-10);

  // Pin the second product to all-ones while keeping all shapes at K = 2.
  hadamard::Factors ones = f;
  ones.C2 = Matrix::Zero(5, 2);
  ones.C2.col(0).setOnes();
  ones.D2 = Matrix::Zero(2, 4);
  ones.D2.row(0).setOnes();
  const Matrix B = randomMatrix(rng, 5, 4);
  const hadamard::Gradients g2 = hadamard::fullGradients(ones, B);
  const Matrix alsGradC = 2.0 * (ones.C1 * ones.D1 - B) * ones.D1.transpose();
  const Matrix alsGradD = 2.0 * ones.C1.transpose() * (ones.C1 * ones.D1 - B);
  CHECK(maxAbsDiff(g2.C1, alsGradC) < 1e-12);
  CHECK(maxAbsDiff(g2.D1, alsGradD) < 1e-12);
}

TEST_CASE("fullGradients match central finite differences") {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(2200 + seed);
    hadamard::Factors f = plantedFactors(rng, 5, 4, 2);
    const Matrix A = randomMatrix(rng, 5, 4);
    const hadamard::Gradients g = hadamard::fullGradients(f, A);
    const auto lossAt = [&] { return hadamard::loss(f, A); };

    const auto checkBlock = [&](Matrix& block, const Matrix& analytic) {
      Vector a(block.size()), fd(block.size());
      Index k = 0;
      for (Index i = 0; i < block.rows(); ++i)
        for (Index j = 0; j < block.cols(); ++j, ++k) {
          a(k) = analytic(i, j);
          fd(k) = centralDifference(lossAt, block(i, j));
        }
      CHECK(gradientsClose(a, fd));
    };
    checkBlock(f.C1, g.C1);
    checkBlock(f.D1, g.D1);
    checkBlock(f.C2, g.C2);
    checkBlock(f.D2, g.D2);
  }
}

TEST_CASE("column and row gradients") {
  Rng rng(22);
  hadamard::Factors f = plantedFactors(rng, 5, 4, 2);
  const Matrix exact = productOf(f);
  CHECK(hadamard::columnGradientD(f, exact, 1, 1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(hadamard::rowGradientC(f, exact, 2, 2).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix A = randomMatrix(rng, 5, 4);
  const auto allRows = allIndices(5);
  const auto allCols = allIndices(4);
  for (int which = 1; which <= 2; ++which) {
    CHECK((hadamard::columnGradientD(f, A, 2, which, &allRows) -
           hadamard::columnGradientD(f, A, 2, which))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((hadamard::rowGradientC(f, A, 3, which, &allCols) -
           hadamard::rowGradientC(f, A, 3, which))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  // Row gradients are column gradients of the transposed problem.
  hadamard::Factors ft{f.D1.transpose(), f.C1.transpose(), f.D2.transpose(),
                       f.C2.transpose()};
  for (Index m = 0; m < 5; ++m) {
    const Vector viaRow = hadamard::rowGradientC(f, A, m, 1);
    const Vector viaCol = hadamard::columnGradientD(ft, A.transpose(), m, 1);
    CHECK((viaRow - viaCol).cwiseAbs().maxCoeff() < 1e-12);
  }

  const std::vector<Index> empty;
  CHECK(hadamard::columnGradientD(f, A, 0, 1, &empty).isZero(0.0));
  CHECK(hadamard::rowGradientC(f, A, 0, 2, &empty).isZero(0.0));

  CHECK_THROWS_AS(hadamard::columnGradientD(f, A, 9, 1), IndexOutOfRange);
  CHECK_THROWS_AS(hadamard::columnGradientD(f, A, 0, 3), IndexOutOfRange);
  CHECK_THROWS_AS(hadamard::rowGradientC(f, A, -1, 1), IndexOutOfRange);
}

TEST_CASE("masked column and row gradients match finite differences") {
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(2300 + seed);
    hadamard::Factors f = plantedFactors(rng, 5, 4, 2);
    const Matrix A = randomMatrix(rng, 5, 4);
    Mask mask(5, 4);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 4; ++j) mask(i, j) = rng.uniform01() < 0.7 ? 1 : 0;
    std::vector<std::vector<Index>> colObs(4), rowObs(5);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 4; ++j)
        if (mask(i, j)) {
          colObs[static_cast<std::size_t>(j)].push_back(i);
          rowObs[static_cast<std::size_t>(i)].push_back(j);
        }
    const auto lossAt = [&] { return hadamard::loss(f, A, &mask); };

    for (Index n = 0; n < 4; ++n)
      for (int which = 1; which <= 2; ++which) {
        const Vector g =
            hadamard::columnGradientD(f, A, n, which, &colObs[static_cast<std::size_t>(n)]);
        Matrix& D = which == 1 ? f.D1 : f.D2;
        Vector fd(g.size());
        for (Index k = 0; k < g.size(); ++k)
          fd(k) = centralDifference(lossAt, D(k, n));
        CHECK(gradientsClose(g, fd));
      }
    for (Index m = 0; m < 5; ++m)
      for (int which = 1; which <= 2; ++which) {
        const Vector g =
            hadamard::rowGradientC(f, A, m, which, &rowObs[static_cast<std::size_t>(m)]);
        Matrix& C = which == 1 ? f.C1 : f.C2;
        Vector fd(g.size());
        for (Index k = 0; k < g.size(); ++k)
          fd(k) = centralDifference(lossAt, C(m, k));
        CHECK(gradientsClose(g, fd));
      }
  }
}

TEST_CASE("fit drives a planted target down and honors the step size") {
  FitConfig cfg;
  cfg.rank = 1;
  cfg.step = 0.1;
  cfg.tol = 0.0;
  cfg.maxIters = 20000;
  cfg.seed = 6001;

  Rng rng(6001);
  hadamard::Factors truth = plantedFactors(rng, 4, 4, 1);
  const Matrix A = productOf(truth);
  hadamard::Factors init = hadamard::randomFactors(4, 4, cfg);
  FitConfig stopping = cfg;
  stopping.tol = 1e-6 * hadamard::loss(init, A);
  const hadamard::Result res = hadamard::fit(A, stopping, init);
  CHECK(res.trace.finalLoss() < 1e-6 * res.trace.initialLoss);
  CHECK((res.trace.stopReason == StopReason::ToleranceMet));

  // The fitted product stays within the rank budget of the construction.
  CHECK(numericalRank(productOf(res.factors)) <= 1);

  // Zero step: nothing moves, the trace is constant.
  FitConfig zero = cfg;
  zero.step = 0.0;
  zero.maxIters = 5;
  const hadamard::Result frozen = hadamard::fit(A, zero, init);
  CHECK(maxAbsDiff(frozen.factors.C1, init.C1) == 0.0);
  CHECK(maxAbsDiff(frozen.factors.D2, init.D2) == 0.0);
  for (const auto& rec : frozen.trace.records)
    CHECK(rec.loss == frozen.trace.initialLoss);

  FitConfig wild = cfg;
  wild.step = 10.0;
  wild.maxIters = 1000;
  CHECK_THROWS_AS(hadamard::fit(A, wild, init), DivergenceDetected);

  FitConfig negative = cfg;
  negative.step = -1.0;
  CHECK_THROWS_AS(hadamard::fit(A, negative, init), PreconditionViolation);
}

TEST_CASE("stale-residual mode reproduces the literal per-iteration update") {
  Rng rng(24);
  hadamard::Factors f0 = plantedFactors(rng, 4, 3, 2);
  const Matrix A = randomMatrix(rng, 4, 3);
  FitConfig cfg;
  cfg.rank = 2;
  cfg.step = 0.01;
  cfg.tol = 0.0;
  cfg.maxIters = 1;

  const hadamard::Result stale =
      hadamard::fit(A, cfg, f0, hadamard::DeltaMode::StalePerIter);

  // Hand-rolled single iteration with one residual shared by all four steps.
  hadamard::Factors f = f0;
  const double eta = cfg.step;
  const Matrix delta = (f.C1 * f.D1).cwiseProduct(f.C2 * f.D2) - A;
  f.C1 -= eta * 2.0 * delta.cwiseProduct(f.C2 * f.D2) * f.D1.transpose();
  f.D1 -= eta * 2.0 * f.C1.transpose() * delta.cwiseProduct(f.C2 * f.D2);
  f.C2 -= eta * 2.0 * delta.cwiseProduct(f.C1 * f.D1) * f.D2.transpose();
  f.D2 -= eta * 2.0 * f.C2.transpose() * delta.cwiseProduct(f.C1 * f.D1);
  CHECK(maxAbsDiff(stale.factors.C1, f.C1) == 0.0);
  CHECK(maxAbsDiff(stale.factors.D1, f.D1) == 0.0);
  CHECK(maxAbsDiff(stale.factors.C2, f.C2) == 0.0);
  CHECK(maxAbsDiff(stale.factors.D2, f.D2) == 0.0);

  // The refreshed-residual default takes a different path on generic data.
  const hadamard::Result fresh = hadamard::fit(A, cfg, f0, hadamard::DeltaMode::Recompute);
  CHECK(maxAbsDiff(fresh.factors.D2, stale.factors.D2) > 0.0);
}

TEST_CASE("fitMasked with an all-ones mask equals an unmasked rank-one sweep") {
  Rng rng(25);
  hadamard::Factors init = plantedFactors(rng, 5, 4, 2);
  const Matrix A = randomMatrix(rng, 5, 4);
  const Mask mask = onesMask(5, 4);

  FitConfig cfg;
  cfg.rank = 2;
  cfg.step = 0.02;
  cfg.tol = 0.0;
  cfg.maxIters = 3;
  const hadamard::Result masked = hadamard::fitMasked(A, mask, cfg, init);

  hadamard::Factors f = init;
  for (int it = 0; it < cfg.maxIters; ++it) {
    for (Index n = 0; n < 4; ++n) {
      f.D1.col(n) -= cfg.step * hadamard::columnGradientD(f, A, n, 1);
      f.D2.col(n) -= cfg.step * hadamard::columnGradientD(f, A, n, 2);
    }
    for (Index m = 0; m < 5; ++m) {
      f.C1.row(m) -= cfg.step * hadamard::rowGradientC(f, A, m, 1).transpose();
      f.C2.row(m) -= cfg.step * hadamard::rowGradientC(f, A, m, 2).transpose();
    }
  }
  CHECK(maxAbsDiff(masked.factors.C1, f.C1) < 1e-12);
  CHECK(maxAbsDiff(masked.factors.D1, f.D1) < 1e-12);
  CHECK(maxAbsDiff(masked.factors.C2, f.C2) < 1e-12);
  CHECK(maxAbsDiff(masked.factors.D2, f.D2) < 1e-12);
}

TEST_CASE("fitMasked completes a planted Hadamard target") {
  FitConfig cfg;
  cfg.rank = 2;
  cfg.step = 0.02;
  cfg.tol = 1e-10;
  cfg.maxIters = 20000;
  cfg.seed = 6100;

  Rng rng(6100);
  hadamard::Factors truth = plantedFactors(rng, 16, 16, 2);
  const Matrix A = productOf(truth);
  Mask mask(16, 16);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) mask(i, j) = rng.uniform01() < 0.7 ? 1 : 0;

  const hadamard::Result res =
      hadamard::fitMasked(A, mask, cfg, hadamard::randomFactors(16, 16, cfg));
  const Matrix approx = productOf(res.factors);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j)
      if (mask(i, j) == 0) {
        num += (A(i, j) - approx(i, j)) * (A(i, j) - approx(i, j));
        den += A(i, j) * A(i, j);
      }
  CHECK(std::sqrt(num / den) < 1e-2);
}

TEST_CASE("fitMasked with a zero iteration budget returns the init") {
  Rng rng(26);
  hadamard::Factors init = plantedFactors(rng, 4, 4, 2);
  const Matrix A = randomMatrix(rng, 4, 4);
  FitConfig cfg;
  cfg.rank = 2;
  cfg.maxIters = 0;
  cfg.tol = 1e-12;
  const hadamard::Result res = hadamard::fitMasked(A, onesMask(4, 4), cfg, init);
  CHECK(maxAbsDiff(res.factors.C1, init.C1) == 0.0);
  CHECK(maxAbsDiff(res.factors.D2, init.D2) == 0.0);
  CHECK(res.trace.records.empty());
  CHECK((res.trace.stopReason == StopReason::IterationCap));
}

TEST_CASE("a single-nonzero-row target defeats rank-1 Hadamard factors") {
  const Matrix A = witnessMatrix();
  for (int seed = 0; seed < 10; ++seed) {
    FitConfig cfg;
    cfg.rank = 1;
    cfg.step = 0.01;
    cfg.tol = 1e-3;
    cfg.maxIters = 2000;
    cfg.seed = 6200 + static_cast<std::uint64_t>(seed);
    const hadamard::Result res =
        hadamard::fit(A, cfg, hadamard::randomFactors(4, 4, cfg));
    CHECK(res.trace.finalLoss() > 1e-3);
    CHECK((res.trace.stopReason == StopReason::IterationCap));
  }
}
