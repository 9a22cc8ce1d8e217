#pragma once

#include <string>

#include "lowrank/errors.hpp"
#include "lowrank/types.hpp"

namespace lowrank {

struct CsvMatrix {
  Matrix values;
  Mask mask;

  bool fullyObserved() const {
    return mask.size() == static_cast<Index>(mask.cast<int>().sum());
  }
};

/// Reads a rectangular CSV of decimal floats. Empty cells and NaN cells are
/// missing: they become 0.0 in the matrix and 0 in the mask. Ragged rows and
/// unparsable cells are reported with their coordinates.
CsvMatrix loadMatrixCsv(const std::string& path);

/// Writes values with 17 significant digits so a load reproduces them
/// bit-exactly; cells with mask 0 are written empty.
void saveMatrixCsv(const std::string& path, const Matrix& values,
                   const Mask* mask = nullptr);

}  // namespace lowrank
