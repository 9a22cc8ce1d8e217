#include "lowrank/csv_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace lowrank {

namespace {

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool isNanToken(std::string_view s) {
  if (s.size() < 3) return false;
  std::string_view tail = s;
  if (tail.front() == '+' || tail.front() == '-') tail.remove_prefix(1);
  if (tail.size() != 3) return false;
  const auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  return lower(tail[0]) == 'n' && lower(tail[1]) == 'a' && lower(tail[2]) == 'n';
}

}  // namespace

CsvMatrix loadMatrixCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);

  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint8_t>> observed;
  std::string line;
  Index row = 0;
  while (std::getline(in, line)) {
    std::vector<double> vrow;
    std::vector<std::uint8_t> orow;
    std::size_t begin = 0;
    Index col = 0;
    while (true) {
      const std::size_t comma = line.find(',', begin);
      const std::string_view raw(line.data() + begin,
                                 (comma == std::string::npos ? line.size() : comma) - begin);
      const std::string_view cell = trimmed(raw);
      if (cell.empty() || isNanToken(cell)) {
        vrow.push_back(0.0);
        orow.push_back(0);
      } else {
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
          throw UnparsableCell(path + ": row " + std::to_string(row) + ", col " +
                               std::to_string(col) + ": '" + std::string(cell) + "'");
        vrow.push_back(v);
        orow.push_back(1);
      }
      ++col;
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
    if (!values.empty() && vrow.size() != values.front().size())
      throw RaggedRows(path + ": row " + std::to_string(row) + " has " +
                       std::to_string(vrow.size()) + " cells, expected " +
                       std::to_string(values.front().size()));
    values.push_back(std::move(vrow));
    observed.push_back(std::move(orow));
    ++row;
  }
  if (values.empty()) throw Error(path + ": no rows");

  CsvMatrix out;
  out.values.resize(static_cast<Index>(values.size()), static_cast<Index>(values.front().size()));
  out.mask.resize(out.values.rows(), out.values.cols());
  for (Index i = 0; i < out.values.rows(); ++i)
    for (Index j = 0; j < out.values.cols(); ++j) {
      out.values(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out.mask(i, j) = observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  return out;
}

void saveMatrixCsv(const std::string& path, const Matrix& values, const Mask* mask) {
  if (mask != nullptr && !sameShape(values, *mask))
    throw ShapeMismatch("saveMatrixCsv: mask shape differs from the matrix");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  char buf[64];
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      if (mask != nullptr && (*mask)(i, j) == 0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace lowrank
