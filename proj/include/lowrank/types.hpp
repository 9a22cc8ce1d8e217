#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace lowrank {

// Row-major storage throughout; all block/strided indexing in this library
// is defined against this order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Binary indicator of observed entries, same shape as its companion matrix.
/// Entries are exactly 0 or 1.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool sameShape(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

inline bool sameShape(const Matrix& a, const Mask& m) {
  return a.rows() == m.rows() && a.cols() == m.cols();
}

inline Mask onesMask(Index rows, Index cols) {
  return Mask::Constant(rows, cols, std::uint8_t{1});
}

}  // namespace lowrank
