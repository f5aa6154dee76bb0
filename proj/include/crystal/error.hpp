#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crystal {

/// Shortest readable form of a number for error messages.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Base class of every error raised by the solvers.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong sizes, non-positive spacing, bad config values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Similarity exponent outside the range where the radial kernel is nonnegative.
class RangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ModeError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Closed-form kernel requested for a dimension where only quadrature applies.
class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

/// Fixed-point or continuation iteration ran out of iterations.
/// Carries the sup-norm defect recorded at every iteration.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Adaptive time stepping shrank the step below the representable floor.
class StepUnderflow : public Error {
 public:
  using Error::Error;
};

}  // namespace crystal
