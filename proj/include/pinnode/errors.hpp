#pragma once

#include <stdexcept>
#include <string>

namespace pinnode {

/// Invalid user input: unknown preset, malformed config, bad flag values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an API precondition (mismatched sizes, foreign tape handles).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A computation produced NaN/Inf or blew past a divergence guard.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long iteration = -1, double time = 0.0)
      : std::runtime_error(what), iteration_(iteration), time_(time) {}

  long iteration() const noexcept { return iteration_; }
  double time() const noexcept { return time_; }

 private:
  long iteration_;
  double time_;
};

/// Adaptive integrator could not keep the step size above its floor.
class StiffnessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pinnode
