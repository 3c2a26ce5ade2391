#pragma once

#include <stdexcept>
#include <string>

namespace covfmm {

//
// Error taxonomy shared by the whole library.  The command line tool maps
// ArgumentError to exit code 2 and every other Error to exit code 3.
//

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad sizes, ranges, unknown keys, malformed inputs
struct ArgumentError : Error {
  using Error::Error;
};

// degenerate geometry or values outside the modelled domain
struct DomainError : Error {
  using Error::Error;
};

// violated precondition on an otherwise well-formed value (e.g. a matrix
// that was promised symmetric and is not)
struct ContractViolation : Error {
  using Error::Error;
};

// numerical breakdown: overflow, non-convergence, invalid results
struct NumericalError : Error {
  using Error::Error;
};

// Cholesky/eigen breakdown on matrices that must be positive definite.
// pivot is the index of the first non-positive pivot (or -1 if unknown).
struct DefinitenessError : NumericalError {
  DefinitenessError(const std::string& what, long pivot_index)
      : NumericalError(what + " (pivot " + std::to_string(pivot_index) + ")"),
        pivot(pivot_index) {}
  long pivot = -1;
};

// I/O and container format problems
struct SerializationError : Error {
  using Error::Error;
};

}  // namespace covfmm
