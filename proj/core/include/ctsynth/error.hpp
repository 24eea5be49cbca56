#pragma once

#include <stdexcept>
#include <string>

namespace ctsynth {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or element counts.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong object state (consumed tape, missing gradient).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (log of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (non-scalar loss, non-deterministic f).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or malformed file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem read/write failure or truncated input.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctsynth
