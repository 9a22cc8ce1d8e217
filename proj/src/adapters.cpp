#include "lowrank/adapters.hpp"

#include <algorithm>
#include <string>

#include "lowrank/khatri_rao.hpp"
#include "lowrank/matops.hpp"
#include "lowrank/rng.hpp"

namespace lowrank::adapters {

std::string toString(Kind k) {
  switch (k) {
    case Kind::LoRA: return "lora";
    case Kind::LoHA: return "loha";
    case Kind::LoKr: return "lokr";
    case Kind::LoKrFactored: return "lokr-factored";
    case Kind::LoKH: return "lokh";
  }
  return "?";
}

Kind kindFromString(const std::string& name) {
  if (name == "lora") return Kind::LoRA;
  if (name == "loha") return Kind::LoHA;
  if (name == "lokr") return Kind::LoKr;
  if (name == "lokr-factored") return Kind::LoKrFactored;
  if (name == "lokh") return Kind::LoKH;
  throw ShapeAlgebraError("unknown adapter kind: " + name);
}

namespace {

void requireFactorCount(const Spec& spec, std::size_t count) {
  if (spec.factors.size() != count)
    throw ShapeAlgebraError(toString(spec.kind) + ": expected " +
                            std::to_string(count) + " factors, got " +
                            std::to_string(spec.factors.size()));
}

}  // namespace

void validate(const Spec& spec) {
  const Index m = spec.baseW.rows(), n = spec.baseW.cols();
  if (spec.bias.size() != m)
    throw ShapeAlgebraError("bias length does not match the base row count");
  const auto& f = spec.factors;
  switch (spec.kind) {
    case Kind::LoRA:
      requireFactorCount(spec, 2);
      if (f[0].rows() != m || f[1].cols() != n || f[0].cols() != f[1].rows())
        throw ShapeAlgebraError("lora: B (m x r) and A (r x n) required");
      break;
    case Kind::LoHA:
      requireFactorCount(spec, 4);
      if (f[0].rows() != m || f[2].rows() != m || f[1].cols() != n ||
          f[3].cols() != n || f[0].cols() != f[1].rows() ||
          f[2].cols() != f[3].rows() || f[0].cols() != f[2].cols())
        throw ShapeAlgebraError("loha: two (m x rb)(rb x n) pairs with a shared rb required");
      break;
    case Kind::LoKr:
      requireFactorCount(spec, 2);
      if (f[0].rows() * f[1].rows() != m || f[0].cols() * f[1].cols() != n)
        throw ShapeAlgebraError("lokr: factor shapes must tile the base shape");
      break;
    case Kind::LoKrFactored:
      requireFactorCount(spec, 3);
      if (f[1].cols() != f[2].rows() || f[0].rows() * f[1].rows() != m ||
          f[0].cols() * f[2].cols() != n)
        throw ShapeAlgebraError("lokr-factored: A (x) (C*D) must tile the base shape");
      break;
    case Kind::LoKH: {
      if (f.size() < 2) throw ShapeAlgebraError("lokh: at least two factors required");
      Index rowProduct = 1;
      const Index rb = f[0].rows();
      for (const Matrix& fac : f) {
        if (fac.cols() != n)
          throw ShapeAlgebraError("lokh: every factor needs the base column count");
        if (fac.rows() != rb)
          throw ShapeAlgebraError("lokh: factors must share one row count");
        rowProduct *= fac.rows();
      }
      if (rowProduct != m)
        throw ShapeAlgebraError("lokh: factor row counts must multiply to the base row count");
      break;
    }
  }
}

Matrix materializeDelta(const Spec& spec) {
  validate(spec);
  const auto& f = spec.factors;
  switch (spec.kind) {
    case Kind::LoRA: return f[0] * f[1];
    case Kind::LoHA: return (f[0] * f[1]).cwiseProduct(f[2] * f[3]);
    case Kind::LoKr: return kroneckerProduct(f[0], f[1]);
    case Kind::LoKrFactored: return kroneckerProduct(f[0], f[1] * f[2]);
    case Kind::LoKH: return khatri_rao::chainProduct(f);
  }
  throw ShapeAlgebraError("materializeDelta: unreachable");
}

namespace {

// (A (x) B) x without materializing the product: reshape x row-major into an
// n1 x n2 matrix X, compute B X' A', and read the result out column-major.
Vector kroneckerApply(const Matrix& A, const Matrix& B, const Vector& x) {
  const Index n1 = A.cols(), n2 = B.cols();
  Matrix X(n1, n2);
  for (Index j = 0; j < n1; ++j)
    for (Index q = 0; q < n2; ++q) X(j, q) = x(j * n2 + q);
  const Matrix T = B * X.transpose() * A.transpose();  // m2 x m1
  Vector y(A.rows() * B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index p = 0; p < B.rows(); ++p) y(i * B.rows() + p) = T(p, i);
  return y;
}

Vector deltaApplyFactored(const Spec& spec, const Vector& x) {
  const auto& f = spec.factors;
  switch (spec.kind) {
    case Kind::LoRA: return f[0] * (f[1] * x);
    case Kind::LoHA: return (f[0] * f[1]).cwiseProduct(f[2] * f[3]) * x;
    case Kind::LoKr: return kroneckerApply(f[0], f[1], x);
    case Kind::LoKrFactored: return kroneckerApply(f[0], f[1] * f[2], x);
    case Kind::LoKH: {
      // Column j of the chain is the iterated Kronecker product of the
      // factors' j-th columns; the product-vector is its x_j-weighted sum.
      Vector y = Vector::Zero(spec.baseW.rows());
      for (Index j = 0; j < x.size(); ++j) {
        if (x(j) == 0.0) continue;
        Vector col = f[0].col(j);
        for (std::size_t t = 1; t < f.size(); ++t) {
          const Vector& next = f[t].col(j);
          Vector grown(col.size() * next.size());
          for (Index a = 0; a < col.size(); ++a)
            grown.segment(a * next.size(), next.size()) = col(a) * next;
          col = std::move(grown);
        }
        y += x(j) * col;
      }
      return y;
    }
  }
  throw ShapeAlgebraError("deltaApplyFactored: unreachable");
}

}  // namespace

Vector forward(const Spec& spec, const Vector& x) {
  validate(spec);
  if (x.size() != spec.baseW.cols())
    throw ShapeMismatch("forward: input length does not match the base columns");
  return spec.baseW * x + spec.bias + spec.alpha * deltaApplyFactored(spec, x);
}

Vector forwardMaterialized(const Spec& spec, const Vector& x) {
  validate(spec);
  if (x.size() != spec.baseW.cols())
    throw ShapeMismatch("forwardMaterialized: input length does not match the base columns");
  return spec.baseW * x + spec.bias + spec.alpha * (materializeDelta(spec) * x);
}

Report audit(const Spec& spec, Index measureEntryCap, Index kRankColsCap) {
  validate(spec);
  const Index m = spec.baseW.rows(), n = spec.baseW.cols();
  const auto& f = spec.factors;

  Report r;
  for (const Matrix& fac : f) r.trainableParams += fac.size();

  const auto cap = [](Index v, Index lo) { return static_cast<int>(std::min(v, lo)); };
  switch (spec.kind) {
    case Kind::LoRA:
      r.rankUpperBound = cap(f[0].cols(), std::min(m, n));
      break;
    case Kind::LoHA:
      r.rankUpperBound = cap(f[0].cols() * f[2].cols(), std::min(m, n));
      break;
    case Kind::LoKr:
      r.rankUpperBound = static_cast<int>(std::min(f[0].rows(), f[0].cols()) *
                                          std::min(f[1].rows(), f[1].cols()));
      break;
    case Kind::LoKrFactored:
      r.rankUpperBound = static_cast<int>(
          std::min(f[0].rows(), f[0].cols()) *
          std::min({f[1].rows(), f[1].cols(), f[2].cols()}));
      break;
    case Kind::LoKH: {
      Index bound = 1;
      for (const Matrix& fac : f) bound = std::min(bound * std::min(fac.rows(), n), m);
      r.rankUpperBound = cap(bound, std::min(m, n));
      break;
    }
  }

  if (spec.kind == Kind::LoKH && n <= kRankColsCap) {
    int kSum = 0, rankMax = 0;
    for (const Matrix& fac : f) {
      kSum += kRank(fac, 1e-9, kRankColsCap);
      rankMax = std::max(rankMax, numericalRank(fac));
    }
    r.kRankLowerBound = static_cast<int>(
        std::min<Index>(kSum - (static_cast<Index>(f.size()) - 1), n));
    r.rankLowerBound = rankMax;
  }

  if (m * n <= measureEntryCap)
    r.measuredRank = numericalRank(materializeDelta(spec));
  return r;
}

namespace {

Spec makeSpec(Kind kind, Matrix baseW, Vector bias, double alpha,
              const Shapes& shapes, std::uint64_t seed, bool zeroLeading) {
  const Index m = baseW.rows(), n = baseW.cols();
  Spec spec{kind, std::move(baseW), std::move(bias), alpha, {}};
  Rng rng(seed);
  const auto draw = [&](Index rows, Index cols, bool zero) {
    return zero ? Matrix(Matrix::Zero(rows, cols)) : rng.uniformMatrix(rows, cols);
  };
  switch (kind) {
    case Kind::LoRA:
      spec.factors.push_back(draw(m, shapes.rank, zeroLeading));
      spec.factors.push_back(draw(shapes.rank, n, false));
      break;
    case Kind::LoHA:
      spec.factors.push_back(draw(m, shapes.rank, zeroLeading));
      spec.factors.push_back(draw(shapes.rank, n, false));
      spec.factors.push_back(draw(m, shapes.rank, zeroLeading));
      spec.factors.push_back(draw(shapes.rank, n, false));
      break;
    case Kind::LoKr: {
      if (shapes.m1 <= 0 || shapes.n1 <= 0 || m % shapes.m1 != 0 || n % shapes.n1 != 0)
        throw ShapeAlgebraError("lokr: blocking does not tile the base shape");
      spec.factors.push_back(draw(shapes.m1, shapes.n1, zeroLeading));
      spec.factors.push_back(draw(m / shapes.m1, n / shapes.n1, false));
      break;
    }
    case Kind::LoKrFactored: {
      if (shapes.m1 <= 0 || shapes.n1 <= 0 || m % shapes.m1 != 0 || n % shapes.n1 != 0)
        throw ShapeAlgebraError("lokr-factored: blocking does not tile the base shape");
      spec.factors.push_back(draw(shapes.m1, shapes.n1, zeroLeading));
      spec.factors.push_back(draw(m / shapes.m1, shapes.rank, false));
      spec.factors.push_back(draw(shapes.rank, n / shapes.n1, false));
      break;
    }
    case Kind::LoKH:
      for (std::size_t t = 0; t < shapes.rows.size(); ++t)
        spec.factors.push_back(draw(shapes.rows[t], n, zeroLeading && t == 0));
      break;
  }
  validate(spec);
  return spec;
}

}  // namespace

Spec makeRandom(Kind kind, Matrix baseW, Vector bias, double alpha,
                const Shapes& shapes, std::uint64_t seed) {
  return makeSpec(kind, std::move(baseW), std::move(bias), alpha, shapes, seed, false);
}

Spec makeZeroInit(Kind kind, Matrix baseW, Vector bias, double alpha,
                  const Shapes& shapes, std::uint64_t seed) {
  return makeSpec(kind, std::move(baseW), std::move(bias), alpha, shapes, seed, true);
}

}  // namespace lowrank::adapters
