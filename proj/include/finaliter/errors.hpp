#pragma once

#include <stdexcept>
#include <string>

namespace finaliter {

/// Vector length disagrees with the set, oracle or instance it is used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite values or a numerical procedure that did not reach its target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The adversarial oracle was queried where no non-trivial piece is active.
class OffTrajectoryError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Too few samples for an estimate (for example, a tail fit with under two usable bins).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace finaliter
