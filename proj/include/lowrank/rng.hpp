#pragma once

#include <cstdint>
#include <random>

#include "lowrank/types.hpp"

namespace lowrank {

/// Seeded random source with a pinned uint64 -> double mapping, so that the
/// same seed yields the same stream on every platform (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1), 53 bits of mantissa.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on [-1, 1).
  double uniformSigned() { return 2.0 * uniform01() - 1.0; }

  /// Matrix filled in row-major order with uniformSigned() draws.
  Matrix uniformMatrix(Index rows, Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = scale * uniformSigned();
    return m;
  }

  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lowrank
