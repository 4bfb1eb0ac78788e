#pragma once

#include <stdexcept>
#include <string>

namespace wprop {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

// Histogram masses that do not sum to one.
class NormalizationError : public InputError {
 public:
  using InputError::InputError;
};

// Mismatched grids, dimensions or vector lengths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Graph structure unsuitable for the requested operation (e.g. disconnected).
class StructureError : public Error {
 public:
  using Error::Error;
};

// Linear solver failed to reach the requested residual.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// A theorem hypothesis (e.g. positive invertibility margin) does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// A result violates a property that holds exactly in theory.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wprop
