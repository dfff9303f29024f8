#include "posctrl/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace posctrl {

namespace {

/// Induced infinity norm: max absolute row sum.
double inf_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Condition estimate of the symmetric matrix Sigma via its eigenvalues;
/// +inf when the smallest eigenvalue is not safely positive.
double condition_estimate(const Matrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Shared excitation guard + factorized solve of Sigma X = SigmaBar^T,
/// so X^T = [Ahat Bhat]. Returns X ((n+m) x n).
Matrix solve_regression(const CorrelationState& state, double cond_cap) {
  const double cond = condition_estimate(state.Sigma);
  if (!(cond <= cond_cap))
    throw InsufficientExcitationError(
        "correlation matrix condition estimate " + std::to_string(cond) +
            " exceeds the cap; data is not persistently exciting",
        cond);
  const Matrix x = state.Sigma.ldlt().solve(state.SigmaBar.transpose());
  const double scale = inf_norm(state.SigmaBar);
  const double residual = inf_norm(x.transpose() * state.Sigma - state.SigmaBar);
  if (scale > 0.0 && residual > 1e-8 * scale)
    throw InsufficientExcitationError(
        "regression residual " + std::to_string(residual) +
            " too large relative to the statistics; solve untrustworthy",
        cond);
  return x;
}

}  // namespace

CorrelationState make_correlation_state(int n, int m, double lambda, double sigma0_scale) {
  if (n < 1 || m < 0) throw DimensionError("make_correlation_state: need n >= 1, m >= 0");
  if (!(lambda > 0.0) || lambda > 1.0)
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  if (!(sigma0_scale > 0.0))
    throw std::invalid_argument("initial correlation scale must be positive");
  CorrelationState state;
  state.Sigma = sigma0_scale * Matrix::Identity(n + m, n + m);
  state.SigmaBar = Matrix::Zero(n, n + m);
  state.lambda = lambda;
  state.t = 0;
  return state;
}

void update(CorrelationState& state, const Vector& x_prev, const Vector& u_prev,
            const Vector& x_next) {
  const int n = static_cast<int>(state.SigmaBar.rows());
  const int m = static_cast<int>(state.Sigma.rows()) - n;
  if (x_prev.size() != n || x_next.size() != n || u_prev.size() != m)
    throw DimensionError("update: sample dimensions do not match the statistics");
  if (!x_prev.allFinite() || !u_prev.allFinite() || !x_next.allFinite())
    throw std::invalid_argument("update: non-finite sample rejected");
  Vector z(n + m);
  z << x_prev, u_prev;
  state.Sigma = state.lambda * state.Sigma + z * z.transpose();
  state.SigmaBar = state.lambda * state.SigmaBar + x_next * z.transpose();
  ++state.t;
}

ImpliedModel implied_model(const CorrelationState& state, double cond_cap) {
  const int n = static_cast<int>(state.SigmaBar.rows());
  const Matrix x = solve_regression(state, cond_cap);
  ImpliedModel model;
  model.Ahat = x.topRows(n).transpose();
  model.Bhat = x.bottomRows(x.rows() - n).transpose();
  return model;
}

Matrix data_operator(const CorrelationState& state, double cond_cap) {
  return solve_regression(state, cond_cap);
}

namespace {

DataDrivenSolution package(const PositiveProblem& problem, QSolution&& sol) {
  DataDrivenSolution out;
  out.q = std::move(sol.q);
  out.K = std::move(sol.gain);
  out.p_t = p_from_q(problem, out.q);
  return out;
}

}  // namespace

DataDrivenSolution solve_data_driven(const CorrelationState& state,
                                     const PositiveProblem& problem,
                                     const SolveSettings& settings,
                                     const QParameter* warm_start, double cond_cap) {
  const Matrix op = data_operator(state, cond_cap);
  try {
    return package(problem, solve_q_iteration(problem, op, settings, warm_start));
  } catch (const SolverError& err) {
    if (err.kind() == SolverFailure::InfiniteValue)
      throw SolverError(SolverFailure::NoStabilizingGain,
                        "implied model is not stabilizable within the gain set");
    throw;
  }
}

DataDrivenSolution solve_data_driven_lp(const CorrelationState& state,
                                        const PositiveProblem& problem,
                                        long max_pivots, double cond_cap) {
  const Matrix op = data_operator(state, cond_cap);
  return package(problem, solve_q_lp(op, problem, max_pivots));
}

MisspecDiagnostics misspec_condition(const CorrelationState& state,
                                     const PositiveProblem& problem_truth, double rho,
                                     double cond_cap) {
  const int n = problem_truth.n();
  const int m = problem_truth.m();
  if (state.SigmaBar.rows() != n || state.Sigma.rows() != n + m)
    throw DimensionError("misspec_condition: statistics do not match the problem");
  const Matrix op = data_operator(state, cond_cap);
  MisspecDiagnostics diag;
  diag.rho = rho;
  diag.lhs = inf_norm(problem_truth.E.transpose()) *
                 inf_norm(problem_truth.A.transpose() - op.topRows(n)) +
             inf_norm(problem_truth.B.transpose() - op.bottomRows(m));
  diag.satisfied = diag.lhs <= rho;
  diag.Atilde = op.topRows(n).transpose() - problem_truth.A;
  diag.Btilde = op.bottomRows(m).transpose() - problem_truth.B;
  return diag;
}

}  // namespace posctrl
