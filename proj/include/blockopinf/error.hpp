#pragma once

#include <stdexcept>
#include <string>

namespace bopinf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A vector or matrix has an unusable dimension (empty, zero-sized).
class InvalidDimensionError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An input value lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quantity needed for normalization is zero (constant group, all-zero spectrum, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a diverging integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Too few samples for the requested stencil or fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file. `offset` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Bad configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// FOM integration produced a non-finite state.
class BlowUpError : public NumericError {
 public:
  BlowUpError(const std::string& what, long step) : NumericError(what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace bopinf
