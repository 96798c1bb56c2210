#ifndef TNU_ERRORS_HPP
#define TNU_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tnu {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument: bad dimension, tolerance, a0 out of range and so on.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Degrees of freedom outside the range where the functional is defined.
class NuOutOfRange : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A matrix expected to be symmetric positive definite is not.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// A parameter map left its valid image (e.g. extract() yielding a singular Sigma).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Floating-point failure inside an iteration that is impossible in exact arithmetic.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

/// The scale equation F(mu, sigma) = 1/(nu+1) has no positive root at the given mu.
class NoPositiveSolution : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace tnu

#endif  // TNU_ERRORS_HPP
