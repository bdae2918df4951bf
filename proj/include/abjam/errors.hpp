#pragma once
// Error types shared across the library.  Everything derives from
// abjam::Error so callers can catch one base; the subtypes exist because
// tests (and the CLI) want to tell misuse apart from numerical breakdown.

#include <stdexcept>
#include <string>

namespace abjam {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// mismatched or invalid shapes/sizes passed to an operation
struct DimensionError : Error {
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// matrix numerically singular (tiny elimination pivot / vanishing determinant)
struct SingularMatrixError : Error {
  explicit SingularMatrixError(const std::string& what) : Error(what) {}
};

// bad configuration or experiment specification
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// a pilot class ended up with no samples, or inputs degenerate in a way
// that makes an estimator undefined
struct DegenerateInputError : Error {
  explicit DegenerateInputError(const std::string& what) : Error(what) {}
};

// non-finite value appeared where the math guarantees finite ones
struct NumericFaultError : Error {
  explicit NumericFaultError(const std::string& what) : Error(what) {}
};

}  // namespace abjam
