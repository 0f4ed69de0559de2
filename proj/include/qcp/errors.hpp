#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcp {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad file, wrong dimension, bad range).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed or an internal consistency check did not hold.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  explicit NumericalError(const std::string& what) : Error(what) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Raised when a segment is perfectly distinguishable (gamma_k = 1) and the
/// problem has to be split at that segment before a strategy can be built.
class SplitRequired : public Error {
 public:
  SplitRequired(const std::string& what, std::size_t segment)
      : Error(what), segment_(segment) {}

  /// One-based index of the first perfectly distinguishable segment.
  std::size_t segment() const noexcept { return segment_; }

 private:
  std::size_t segment_;
};

}  // namespace qcp
