#pragma once

#include <stdexcept>
#include <string>

namespace klio {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural problems: mismatched grids, invalid masses, malformed files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failures: unnormalizable policy rows, non-PD intermediates.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Solver did not reach the requested tolerance (carries no iterate; the
// solver API returns a status instead of throwing whenever it can).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace klio
