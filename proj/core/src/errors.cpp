#include "posctrl/errors.hpp"

namespace posctrl {

const char* to_string(SolverFailure kind) {
  switch (kind) {
    case SolverFailure::InfiniteValue: return "InfiniteValue";
    case SolverFailure::NoConvergence: return "NoConvergence";
    case SolverFailure::NoStabilizingGain: return "NoStabilizingGain";
    case SolverFailure::InsufficientExcitation: return "InsufficientExcitation";
    case SolverFailure::LpInfeasible: return "LpInfeasible";
    case SolverFailure::LpUnbounded: return "LpUnbounded";
    case SolverFailure::TooManyGains: return "TooManyGains";
  }
  return "UnknownFailure";
}

}  // namespace posctrl
