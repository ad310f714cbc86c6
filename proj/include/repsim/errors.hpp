#pragma once

#include <stdexcept>
#include <string>

namespace repsim {

// Root of every error thrown by the library. The CLI maps each subclass to a
// fixed exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Inputs for which a measure is undefined (zero trace, zero norm).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

// Round-off outside the tolerated band, decomposition failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed input files or unreadable/unwritable paths.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace repsim
