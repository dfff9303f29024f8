#pragma once

#include <cstdint>
#include <string>

#include "posctrl/dp.hpp"
#include "posctrl/problem.hpp"

namespace posctrl {

/// Exponentially weighted correlation statistics of the closed-loop data
/// stream z = [x; u], x+ = next state. Fixed O((n+m)^2) footprint no matter
/// how many samples were absorbed.
struct CorrelationState {
  Matrix Sigma;     ///< (n+m) x (n+m), seeded positive definite
  Matrix SigmaBar;  ///< n x (n+m), seeded zero
  double lambda = 1.0;
  long t = 0;
};

/// Fresh statistics: Sigma = sigma0_scale * I, SigmaBar = 0.
CorrelationState make_correlation_state(int n, int m, double lambda = 1.0,
                                        double sigma0_scale = 1e-6);

/// One sample: Sigma <- lambda*Sigma + z z^T, SigmaBar <- lambda*SigmaBar + x_next z^T.
/// Rejects non-finite inputs. O((n+m)^2).
void update(CorrelationState& state, const Vector& x_prev, const Vector& u_prev,
            const Vector& x_next);

/// Least-squares dynamics consistent with the statistics: [Ahat Bhat] = SigmaBar * Sigma^{-1}.
struct ImpliedModel {
  Matrix Ahat;
  Matrix Bhat;
};

/// Raised when Sigma is too ill-conditioned for a trustworthy solve; carries
/// the condition-number estimate that tripped the cap.
class InsufficientExcitationError : public SolverError {
 public:
  InsufficientExcitationError(const std::string& message, double condition_estimate)
      : SolverError(SolverFailure::InsufficientExcitation, message),
        condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Solves Sigma [Ahat Bhat]^T = SigmaBar^T by factorization (no explicit
/// inverse); n and m are read off SigmaBar's shape. Throws
/// InsufficientExcitationError when cond(Sigma) exceeds cond_cap or the
/// solve residual is untrustworthy.
ImpliedModel implied_model(const CorrelationState& state, double cond_cap = 1e12);

/// The data-driven iteration operator Sigma^{-1} SigmaBar^T ((n+m) x n);
/// equals model_operator of the implied dynamics. Same excitation guard as
/// implied_model.
Matrix data_operator(const CorrelationState& state, double cond_cap = 1e12);

/// Output of the data-driven solvers: the q-parameter fixed point for the
/// data operator, its gain, and the induced value estimate p_t = [I K^T] q.
struct DataDrivenSolution {
  QParameter q;
  GainMatrix K;
  Vector p_t;
};

/// Fixed-point iteration on the q-parameter with the data operator, from
/// q = 0 (or a warm start). Divergence means the implied model is not
/// stabilizable within the gain set; reported as NoStabilizingGain.
DataDrivenSolution solve_data_driven(const CorrelationState& state,
                                     const PositiveProblem& problem,
                                     const SolveSettings& settings = {},
                                     const QParameter* warm_start = nullptr,
                                     double cond_cap = 1e12);

/// LP route to the same fixed point (cross-check of solve_data_driven).
DataDrivenSolution solve_data_driven_lp(const CorrelationState& state,
                                        const PositiveProblem& problem,
                                        long max_pivots = 200000,
                                        double cond_cap = 1e12);

/// Deviation between the true dynamics and the implied model, measured as
///   lhs = ||E^T||_inf ||A^T - [I 0] Sigma^{-1} SigmaBar^T||_inf
///       + ||B^T - [0 I] Sigma^{-1} SigmaBar^T||_inf
/// (max absolute row sums). Requires the true model, so this is a test and
/// monitoring facility, not something the controller can evaluate online.
struct MisspecDiagnostics {
  double lhs = 0.0;
  double rho = 0.0;
  bool satisfied = false;
  Matrix Atilde;  ///< Ahat - A
  Matrix Btilde;  ///< Bhat - B
};

MisspecDiagnostics misspec_condition(const CorrelationState& state,
                                     const PositiveProblem& problem_truth, double rho,
                                     double cond_cap = 1e12);

}  // namespace posctrl
