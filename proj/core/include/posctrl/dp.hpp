#pragma once

#include <optional>

#include "posctrl/problem.hpp"

namespace posctrl {

/// Convergence knobs shared by all fixed-point solvers.
struct SolveSettings {
  double tol = 1e-10;             ///< infinity-norm successive-difference stop
  int max_iter = 100000;          ///< iteration cap
  double divergence_bound = 1e12; ///< iterate norm beyond which the value is declared infinite
};

/// Solution of the algebraic optimality equation in the p-parameter.
struct PValue {
  Vector p;
  int iterations = 0;
  double residual = 0.0;  ///< infinity-norm defect of the fixed-point equation
};

/// Solution object in the q-parameter, split as q = [qx; qu].
struct QParameter {
  Vector qx;  ///< length n
  Vector qu;  ///< length m, partitioned like r

  Vector stacked() const {
    Vector q(qx.size() + qu.size());
    q << qx, qu;
    return q;
  }
};

/// Thrown when the iteration cap is hit; carries the last iterate so
/// callers can inspect how far the solver got.
class NoConvergenceError : public SolverError {
 public:
  NoConvergenceError(const std::string& message, Vector last_iterate)
      : SolverError(SolverFailure::NoConvergence, message),
        last_iterate_(std::move(last_iterate)) {}
  const Vector& last_iterate() const { return last_iterate_; }

 private:
  Vector last_iterate_;
};

/// One sweep of the p-parameter value iteration:
///   p' = s + A^T p + sum_i min{(r_i + B_i^T p) entries, 0} E_i.
Vector p_iterate_once(const PositiveProblem& problem, const Vector& p);

/// Runs the p-parameter value iteration from p = 0 until the successive
/// difference drops below settings.tol. Throws SolverError{InfiniteValue}
/// past the divergence bound and NoConvergenceError at the iteration cap.
PValue solve_p(const PositiveProblem& problem, const SolveSettings& settings = {});

/// Optimal gain read off a solved p: block i actuates row argmin_j of
/// r_i + B_i^T p when that minimum is negative, else stays off. Ties break
/// to the lowest row index.
GainMatrix extract_gain(const PositiveProblem& problem, const Vector& p);

/// Gain rule applied directly to the qu part of a q-parameter (same rule
/// as extract_gain, since qu plays r + B^T p).
GainMatrix gain_from_qu(const PositiveProblem& problem, const Vector& qu);

/// Projection p = [I K^T] q with K induced by qu's block minima.
Vector p_from_q(const PositiveProblem& problem, const QParameter& q);

/// The model-based operator [A B]^T mapping p to (q - [s; r]).
Matrix model_operator(const PositiveProblem& problem);

/// One sweep of the q-parameter iteration with an arbitrary (n+m) x n
/// operator M (the model [A B]^T or its data-driven estimate):
///   q' = M [I K^T] q + [s; r],  K from qu's block minima.
QParameter q_iterate_once(const PositiveProblem& problem, const Matrix& op,
                          const QParameter& q);

/// Fixed point of the q-iteration for the given operator, from q = 0 (or a
/// warm start). Divergence and iteration-cap semantics match solve_p.
struct QSolution {
  QParameter q;
  GainMatrix gain;
  int iterations = 0;
  double residual = 0.0;
};
QSolution solve_q_iteration(const PositiveProblem& problem, const Matrix& op,
                            const SolveSettings& settings = {},
                            const QParameter* warm_start = nullptr);

/// Model-based q-iteration (operator [A B]^T); equivalent to solve_p by
/// the exchange-of-minimization argument, and cross-checked in tests.
QSolution solve_q_model_based(const PositiveProblem& problem,
                              const SolveSettings& settings = {});

/// Infinity-norm defect of p against the algebraic optimality equation.
double bellman_residual(const PositiveProblem& problem, const Vector& p);

/// Independent oracle: enumerates the gain set, solves each stable closed
/// loop's linear cost equation p_K = s + K^T r + (A+BK)^T p_K, and returns
/// the elementwise-minimal value with its gain.
struct BruteForceResult {
  PValue value;
  GainMatrix gain;
  bool unique_argmin = false;  ///< exactly one gain attains the minimum within 1e-8
  int stable_gains = 0;
};
BruteForceResult brute_force_p(const PositiveProblem& problem,
                               std::size_t enumeration_cap = 1'000'000);

/// Linear-programming route to the q-parameter for a given operator:
/// maximizes 1^T y over sub-solutions of the fixed-point equation, with the
/// per-block correction amounts made explicit as LP variables, then
/// recovers q = M y + [s; r]. Agrees with solve_q_iteration within 1e-6
/// whenever the iteration converges.
QSolution solve_q_lp(const Matrix& op, const PositiveProblem& problem,
                     long max_pivots = 200000);

}  // namespace posctrl
