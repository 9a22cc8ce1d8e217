#include "lowrank/matops.hpp"

#include <Eigen/SVD>

#include <cstdlib>
#include <numeric>
#include <string>

namespace lowrank {

namespace {

std::string shapeOf(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix hadamardProduct(const Matrix& a, const Matrix& b) {
  if (!sameShape(a, b))
    throw ShapeMismatch("hadamardProduct: " + shapeOf(a) + " vs " + shapeOf(b));
  return a.cwiseProduct(b);
}

Index kroneckerSizeCap() {
  static const Index cap = [] {
    if (const char* env = std::getenv("LOWRANK_SIZE_CAP")) {
      const long long v = std::atoll(env);
      if (v > 0) return static_cast<Index>(v);
    }
    return Index{1} << 24;
  }();
  return cap;
}

Matrix kroneckerProduct(const Matrix& a, const Matrix& b, Index sizeCap) {
  if (sizeCap < 0) sizeCap = kroneckerSizeCap();
  const Index rows = a.rows() * b.rows();
  const Index cols = a.cols() * b.cols();
  if (rows > 0 && cols > sizeCap / rows)
    throw OverflowGuard("kroneckerProduct: " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " exceeds size cap " +
                        std::to_string(sizeCap));
  Matrix out(rows, cols);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix khatriRaoProduct(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeMismatch("khatriRaoProduct: column counts differ, " + shapeOf(a) +
                        " vs " + shapeOf(b));
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index k = 0; k < a.cols(); ++k)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), k, b.rows(), 1) = a(i, k) * b.col(k);
  return out;
}

Matrix partitionwiseKhatriRao(const Matrix& a, const Matrix& b, const PartitionSpec& spec) {
  if (spec.leftWidths.size() != spec.rightWidths.size())
    throw PartitionMismatch("partitionwiseKhatriRao: width lists differ in length");
  const Index sumLeft = std::accumulate(spec.leftWidths.begin(), spec.leftWidths.end(), Index{0});
  const Index sumRight = std::accumulate(spec.rightWidths.begin(), spec.rightWidths.end(), Index{0});
  if (sumLeft != a.cols() || sumRight != b.cols())
    throw PartitionMismatch("partitionwiseKhatriRao: widths sum to " +
                            std::to_string(sumLeft) + "/" + std::to_string(sumRight) +
                            ", expected " + std::to_string(a.cols()) + "/" +
                            std::to_string(b.cols()));
  Index outCols = 0;
  for (std::size_t r = 0; r < spec.leftWidths.size(); ++r) {
    if (spec.leftWidths[r] <= 0 || spec.rightWidths[r] <= 0)
      throw PartitionMismatch("partitionwiseKhatriRao: widths must be positive");
    outCols += spec.leftWidths[r] * spec.rightWidths[r];
  }
  Matrix out(a.rows() * b.rows(), outCols);
  Index aCol = 0, bCol = 0, oCol = 0;
  for (std::size_t r = 0; r < spec.leftWidths.size(); ++r) {
    const Index wa = spec.leftWidths[r], wb = spec.rightWidths[r];
    out.block(0, oCol, out.rows(), wa * wb) =
        kroneckerProduct(a.middleCols(aCol, wa), b.middleCols(bCol, wb));
    aCol += wa;
    bCol += wb;
    oCol += wa * wb;
  }
  return out;
}

int numericalRank(const Matrix& a, double relTol) {
  if (!(relTol > 0.0 && relTol < 1.0))
    throw PreconditionViolation("numericalRank: relTol must be in (0,1)");
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  if (smax == 0.0) return 0;
  int rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > relTol * smax) ++rank;
  return rank;
}

int kRank(const Matrix& a, double relTol, Index maxCols) {
  const Index n = a.cols();
  if (n > maxCols)
    throw TooManyColumns("kRank: " + std::to_string(n) + " columns exceeds cap " +
                         std::to_string(maxCols));
  if (n == 0) return 0;

  // Largest r such that all size-r subsets are independent; subsets are
  // enumerated in lexicographic order and the search stops at the first
  // dependent one.
  std::vector<Index> pick;
  Matrix sub(a.rows(), n);
  for (Index r = 1; r <= n; ++r) {
    pick.assign(static_cast<std::size_t>(r), 0);
    std::iota(pick.begin(), pick.end(), Index{0});
    bool allIndependent = true;
    while (true) {
      for (Index c = 0; c < r; ++c) sub.col(c) = a.col(pick[static_cast<std::size_t>(c)]);
      if (numericalRank(sub.leftCols(r), relTol) < r) {
        allIndependent = false;
        break;
      }
      // next lexicographic combination
      Index i = r - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - r + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (Index c = i + 1; c < r; ++c)
        pick[static_cast<std::size_t>(c)] = pick[static_cast<std::size_t>(c - 1)] + 1;
    }
    if (!allIndependent) return static_cast<int>(r - 1);
  }
  return static_cast<int>(n);
}

double maskedFrobeniusLoss(const Matrix& a, const Matrix& approx, const Mask& mask) {
  if (!sameShape(a, approx) || !sameShape(a, mask))
    throw ShapeMismatch("maskedFrobeniusLoss: shapes differ");
  double sum = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (mask(i, j) != 0) {
        const double d = a(i, j) - approx(i, j);
        sum += d * d;
      }
  return sum;
}

}  // namespace lowrank
