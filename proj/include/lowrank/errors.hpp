#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct PartitionMismatch : Error {
  using Error::Error;
};

/// Thrown before materializing a product whose entry count exceeds the
/// configured size cap.
struct OverflowGuard : Error {
  using Error::Error;
};

struct TooManyColumns : Error {
  using Error::Error;
};

/// Normal-equations matrix is numerically singular; the unregularized
/// closed-form update requires the fixed factor to have full rank.
struct SingularNormalEquations : Error {
  using Error::Error;
};

struct EmptyObservation : Error {
  using Error::Error;
};

struct PreconditionViolation : Error {
  using Error::Error;
};

struct DivergenceDetected : Error {
  using Error::Error;
};

struct ZeroDenominator : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct ShapeAlgebraError : Error {
  using Error::Error;
};

struct RaggedRows : Error {
  using Error::Error;
};

struct UnparsableCell : Error {
  using Error::Error;
};

}  // namespace lowrank
