#pragma once

#include <cstdint>
#include <string>
#include <optional>
#include <vector>

#include "lowrank/errors.hpp"
#include "lowrank/types.hpp"

namespace lowrank::adapters {

enum class Kind { LoRA, LoHA, LoKr, LoKrFactored, LoKH };

std::string toString(Kind k);
Kind kindFromString(const std::string& name);

/// Frozen base layer plus the trainable factors of one adapter. Factor layout
/// by kind (m, n are the base shape):
///   LoRA:         {B (m x r),  A (r x n)}
///   LoHA:         {B1 (m x rb), A1 (rb x n), B2 (m x rb), A2 (rb x n)}
///   LoKr:         {A (m1 x n1), B (m2 x n2)}      with m1*m2 = m, n1*n2 = n
///   LoKrFactored: {A (m1 x n1), C (m2 x k), D (k x n2)}
///   LoKH:         {F1 .. Fq, each rb x n}         with rb^q = m
struct Spec {
  Kind kind;
  Matrix baseW;
  Vector bias;
  double alpha = 1.0;
  std::vector<Matrix> factors;
};

/// Parameter count and rank capacity of an adapter. Measured values are
/// filled only when the shapes are small enough to evaluate directly.
struct Report {
  long long trainableParams = 0;
  int rankUpperBound = 0;
  std::optional<int> kRankLowerBound;  // Khatri-Rao kinds only
  std::optional<int> rankLowerBound;   // Khatri-Rao kinds only
  std::optional<int> measuredRank;
};

/// Shape parameters for the factories below; only the fields a kind needs are
/// read (rank for LoRA/LoHA and the inner rank of LoKrFactored, m1/n1 for the
/// LoKr blocking, rows for LoKH).
struct Shapes {
  Index rank = 1;
  Index m1 = 1;
  Index n1 = 1;
  std::vector<Index> rows;
};

/// Throws ShapeAlgebraError unless the factor shapes close to an m x n delta.
void validate(const Spec& spec);

/// The materialized weight delta: BA, (B1A1) o (B2A2), A (x) B, A (x) (CD),
/// or the left-associated Khatri-Rao chain.
Matrix materializeDelta(const Spec& spec);

/// Base forward pass plus the adapter contribution, evaluated through the
/// factored fast path of each kind (never through the materialized delta).
Vector forward(const Spec& spec, const Vector& x);

/// Same contract as forward(), evaluated through materializeDelta().
Vector forwardMaterialized(const Spec& spec, const Vector& x);

/// Exact parameter counts plus rank-capacity bounds from the product rank
/// theorems; measures the delta's rank (and, for Khatri-Rao kinds, the factor
/// k-ranks) at desk scale.
Report audit(const Spec& spec, Index measureEntryCap = Index{1} << 20,
             Index kRankColsCap = 16);

/// Seeded factors, uniform on [-1,1), drawn in factor order.
Spec makeRandom(Kind kind, Matrix baseW, Vector bias, double alpha,
                const Shapes& shapes, std::uint64_t seed);

/// Zero-initialized adapter: the leading factor is zero (so the delta is
/// zero), the remaining factors are drawn as in makeRandom.
Spec makeZeroInit(Kind kind, Matrix baseW, Vector bias, double alpha,
                  const Shapes& shapes, std::uint64_t seed);

}  // namespace lowrank::adapters
