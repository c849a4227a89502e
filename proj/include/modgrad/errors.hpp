#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace modgrad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation outside the domain of an operation (ln of a non-positive value,
/// division by zero, point outside the box D, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the axis-aligned box of a field.
class OutsideDomain : public DomainError {
 public:
  using DomainError::DomainError;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterative numeric kernel did not reach its tolerance.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature hit its subdivision limit; carries the partial estimate.
class QuadratureFailure : public NumericFailure {
 public:
  QuadratureFailure(const std::string& what, double partial)
      : NumericFailure(what), partial_(partial) {}
  double partial_estimate() const noexcept { return partial_; }

 private:
  double partial_;
};

}  // namespace modgrad
