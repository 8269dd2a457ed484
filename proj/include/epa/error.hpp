#pragma once

#include <stdexcept>
#include <string>

namespace epa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Field with NaN/inf samples was passed to an operation.
class InvalidFieldError : public Error {
 public:
  using Error::Error;
};

/// Two fields live on different grids.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside the accepted domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The primitive of a function with nonzero mean was requested.
class MeanViolationError : public Error {
 public:
  using Error::Error;
};

/// Evaluation of the singular kernel at the origin.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Density reached (or started at) a non-positive value.
class VacuumError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared while advancing the solution.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace epa
