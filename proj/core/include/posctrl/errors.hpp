#pragma once

#include <stdexcept>
#include <string>

namespace posctrl {

/// Thrown when an input's shape is inconsistent with the rest of the data
/// (mismatched matrix dimensions, partition sizes, vector lengths, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Machine-readable classification of numerical solver failures.
enum class SolverFailure {
  InfiniteValue,           ///< value iteration diverged; the instance has unbounded cost
  NoConvergence,           ///< iteration limit reached before the tolerance was met
  NoStabilizingGain,       ///< no feasible gain yields a Schur-stable closed loop
  InsufficientExcitation,  ///< correlation matrix too ill-conditioned to invert reliably
  LpInfeasible,            ///< linear program has an empty feasible set
  LpUnbounded,             ///< linear program is unbounded
  TooManyGains,            ///< gain-set enumeration would exceed the configured cap
};

/// Human-readable name of a SolverFailure value.
const char* to_string(SolverFailure failure);

/// Thrown by numerical routines; carries the failure classification so
/// callers (e.g. the adaptive controller) can react per category.
class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFailure kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  SolverFailure kind() const noexcept { return kind_; }

 private:
  SolverFailure kind_;
};

}  // namespace posctrl
