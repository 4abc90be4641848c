#pragma once

#include <stdexcept>
#include <string>

namespace shadowbl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input has the wrong shape (vector length, matrix rows/cols).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on values was violated (c outside (0,1), tau <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite could not be factored.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// The self-consistent market equilibrium has no real solution.
class NoEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// Newton iteration hit a Jacobian that stayed singular after regularization.
class SingularJacobianError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A risk cap below the minimum attainable risk.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double min_risk)
      : Error(what), min_risk_(min_risk) {}
  double min_risk() const noexcept { return min_risk_; }

 private:
  double min_risk_;
};

}  // namespace shadowbl
