#pragma once

#include <stdexcept>
#include <string>

namespace dote {

// Error hierarchy. Everything derives from std::runtime_error so callers that
// only care about "something failed" can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

// Raised when a computed quantity violates a numerical contract, e.g. a
// claimed-real inverse transform with a large imaginary residue.
struct NumericalError : Error {
  using Error::Error;
};

struct InvalidCall : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

}  // namespace dote
