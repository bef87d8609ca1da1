#pragma once

#include <stdexcept>
#include <string>

namespace ulmc {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Configuration text failed validation; message carries the field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A covariance (or other SPD input) is numerically singular.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Exact-law machinery was asked to handle a non-quadratic potential.
class NotQuadraticError : public Error {
 public:
  using Error::Error;
};

/// The target does not expose a Hessian.
class MissingHessianError : public Error {
 public:
  using Error::Error;
};

/// Update matrix has spectral radius >= 1; no stationary law exists.
class NonContractiveError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf propagation or loss of positive definiteness at runtime.
class NumericsError : public Error {
 public:
  using Error::Error;
};

}  // namespace ulmc
