#include "posctrl/dp.hpp"

#include <cmath>
#include <limits>

#include "posctrl/simplex.hpp"

namespace posctrl {

namespace {

/// Shared projection kernel: given the split parameter (qx, qu), apply the
/// per-block minimum rule and return the projected p together with the
/// selector it induces. Both value-iteration routes call this, so their
/// arithmetic order on the reduction is identical.
std::pair<Vector, std::vector<int>> project_block_min(const PositiveProblem& problem,
                                                      const Vector& qx,
                                                      const Vector& qu) {
  Vector p = qx;
  std::vector<int> selector(problem.partition.size(), -1);
  const auto offsets = problem.block_offsets();
  for (int i = 0; i < problem.n(); ++i) {
    const int width = problem.partition[i];
    if (width == 0) continue;
    int argmin = 0;
    for (int j = 1; j < width; ++j) {
      if (qu(offsets[i] + j) < qu(offsets[i] + argmin)) argmin = j;  // ties keep lowest index
    }
    const double value = qu(offsets[i] + argmin);
    if (value < 0.0) {
      selector[i] = argmin;
      p += value * problem.E.row(i).transpose();
    }
  }
  return {std::move(p), std::move(selector)};
}

}  // namespace

Vector p_iterate_once(const PositiveProblem& problem, const Vector& p) {
  const Vector qx = problem.s + problem.A.transpose() * p;
  const Vector qu = problem.r + problem.B.transpose() * p;
  return project_block_min(problem, qx, qu).first;
}

PValue solve_p(const PositiveProblem& problem, const SolveSettings& settings) {
  Vector p = Vector::Zero(problem.n());
  for (int k = 1; k <= settings.max_iter; ++k) {
    Vector next = p_iterate_once(problem, p);
    const double diff = (next - p).cwiseAbs().maxCoeff();
    if (next.cwiseAbs().maxCoeff() > settings.divergence_bound)
      throw SolverError(SolverFailure::InfiniteValue,
                        "p-iteration exceeded divergence bound; the problem has no finite value");
    p = std::move(next);
    if (diff <= settings.tol) {
      PValue out;
      out.p = p;
      out.iterations = k;
      out.residual = bellman_residual(problem, p);
      return out;
    }
  }
  throw NoConvergenceError("p-iteration hit the iteration cap", p);
}

GainMatrix gain_from_qu(const PositiveProblem& problem, const Vector& qu) {
  std::vector<int> selector(problem.partition.size(), -1);
  const auto offsets = problem.block_offsets();
  for (int i = 0; i < problem.n(); ++i) {
    const int width = problem.partition[i];
    if (width == 0) continue;
    int argmin = 0;
    for (int j = 1; j < width; ++j) {
      if (qu(offsets[i] + j) < qu(offsets[i] + argmin)) argmin = j;
    }
    if (qu(offsets[i] + argmin) < 0.0) selector[i] = argmin;
  }
  return make_gain(problem, selector);
}

GainMatrix extract_gain(const PositiveProblem& problem, const Vector& p) {
  return gain_from_qu(problem, problem.r + problem.B.transpose() * p);
}

Vector p_from_q(const PositiveProblem& problem, const QParameter& q) {
  return project_block_min(problem, q.qx, q.qu).first;
}

Matrix model_operator(const PositiveProblem& problem) {
  Matrix op(problem.n() + problem.m(), problem.n());
  op.topRows(problem.n()) = problem.A.transpose();
  op.bottomRows(problem.m()) = problem.B.transpose();
  return op;
}

QParameter q_iterate_once(const PositiveProblem& problem, const Matrix& op,
                          const QParameter& q) {
  const Vector p = project_block_min(problem, q.qx, q.qu).first;
  const Vector image = op * p;
  QParameter next;
  next.qx = image.head(problem.n()) + problem.s;
  next.qu = image.tail(problem.m()) + problem.r;
  return next;
}

QSolution solve_q_iteration(const PositiveProblem& problem, const Matrix& op,
                            const SolveSettings& settings,
                            const QParameter* warm_start) {
  if (op.rows() != problem.n() + problem.m() || op.cols() != problem.n())
    throw DimensionError("solve_q_iteration: operator must be (n+m) x n");
  QParameter q;
  if (warm_start != nullptr) {
    q = *warm_start;
  } else {
    q.qx = Vector::Zero(problem.n());
    q.qu = Vector::Zero(problem.m());
  }
  for (int k = 1; k <= settings.max_iter; ++k) {
    QParameter next = q_iterate_once(problem, op, q);
    const double diff = std::max((next.qx - q.qx).cwiseAbs().maxCoeff(),
                                 problem.m() > 0
                                     ? (next.qu - q.qu).cwiseAbs().maxCoeff()
                                     : 0.0);
    const double norm = std::max(next.qx.cwiseAbs().maxCoeff(),
                                 problem.m() > 0 ? next.qu.cwiseAbs().maxCoeff() : 0.0);
    if (norm > settings.divergence_bound)
      throw SolverError(SolverFailure::InfiniteValue,
                        "q-iteration exceeded divergence bound; no finite value for this operator");
    q = std::move(next);
    if (diff <= settings.tol) {
      QSolution out;
      out.q = q;
      out.gain = gain_from_qu(problem, q.qu);
      out.iterations = k;
      const QParameter check = q_iterate_once(problem, op, q);
      out.residual = std::max((check.qx - q.qx).cwiseAbs().maxCoeff(),
                              problem.m() > 0
                                  ? (check.qu - q.qu).cwiseAbs().maxCoeff()
                                  : 0.0);
      return out;
    }
  }
  throw NoConvergenceError("q-iteration hit the iteration cap", q.stacked());
}

QSolution solve_q_model_based(const PositiveProblem& problem,
                              const SolveSettings& settings) {
  return solve_q_iteration(problem, model_operator(problem), settings);
}

double bellman_residual(const PositiveProblem& problem, const Vector& p) {
  return (p_iterate_once(problem, p) - p).cwiseAbs().maxCoeff();
}

BruteForceResult brute_force_p(const PositiveProblem& problem,
                               std::size_t enumeration_cap) {
  const auto gains = enumerate_gains(problem, enumeration_cap);
  std::vector<std::pair<Vector, const GainMatrix*>> finite;
  for (const auto& gain : gains) {
    const Matrix closed_loop = problem.A + problem.B * gain.K;
    if (!is_stable(closed_loop)) continue;
    // Stationary cost of the fixed gain: p_K = s + K^T r + (A+BK)^T p_K.
    const Matrix lhs = Matrix::Identity(problem.n(), problem.n()) - closed_loop.transpose();
    const Vector rhs = problem.s + gain.K.transpose() * problem.r;
    finite.emplace_back(lhs.partialPivLu().solve(rhs), &gain);
  }
  if (finite.empty())
    throw SolverError(SolverFailure::NoStabilizingGain,
                      "no feasible gain stabilizes the closed loop");

  Vector pmin = finite.front().first;
  for (const auto& [pk, gain] : finite) pmin = pmin.cwiseMin(pk);

  const GainMatrix* best = nullptr;
  double best_excess = std::numeric_limits<double>::infinity();
  Vector best_p;
  int at_min = 0;
  for (const auto& [pk, gain] : finite) {
    const double excess = (pk - pmin).maxCoeff();
    if (excess <= 1e-8) ++at_min;
    if (excess < best_excess) {
      best_excess = excess;
      best = gain;
      best_p = pk;
    }
  }

  BruteForceResult result;
  result.value.p = best_p;
  result.value.iterations = 0;
  result.value.residual = bellman_residual(problem, best_p);
  result.gain = *best;
  result.unique_argmin = (at_min == 1);
  result.stable_gains = static_cast<int>(finite.size());
  return result;
}

QSolution solve_q_lp(const Matrix& op, const PositiveProblem& problem,
                     long max_pivots) {
  const int n = problem.n();
  const int m = problem.m();
  if (op.rows() != n + m || op.cols() != n)
    throw DimensionError("solve_q_lp: operator must be (n+m) x n");
  const auto offsets = problem.block_offsets();
  const Matrix rx = op.topRows(n);
  const Matrix ru = op.bottomRows(m);

  // Maximize 1^T y over sub-solutions y of the fixed-point equation:
  //   y + sum_i zeta_i E_i - Rx*y <= s,  zeta_i >= max(0, -(Ru y + r)_ij for all j),
  // written in equality form with slacks a (state rows) and tau (block rows).
  // Column layout: [ y (n) | zeta (n) | a (n) | tau (m) ]; the zeta block
  // multiplies the matrix whose columns are the budget vectors E_i.
  const int cols = 3 * n + m;
  Matrix A = Matrix::Zero(n + m, cols);
  Vector b(n + m);
  A.block(0, 0, n, n) = Matrix::Identity(n, n) - rx;
  A.block(0, n, n, n) = problem.E.transpose();
  A.block(0, 2 * n, n, n) = Matrix::Identity(n, n);
  b.head(n) = problem.s;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < problem.partition[i]; ++j) {
      const int row = n + offsets[i] + j;
      A.block(row, 0, 1, n) = ru.row(offsets[i] + j);
      A(row, n + i) = 1.0;
      A(row, 2 * n + n + offsets[i] + j) = -1.0;
      b(row) = -problem.r(offsets[i] + j);
    }
  }
  Vector c = Vector::Zero(cols);
  c.head(n).setConstant(-1.0);  // maximize 1^T y

  const LpResult lp = solve_lp_equality(A, b, c, max_pivots);
  const Vector y = lp.x.head(n);

  QSolution out;
  const Vector image = op * y;
  out.q.qx = image.head(n) + problem.s;
  out.q.qu = image.tail(m) + problem.r;
  out.gain = gain_from_qu(problem, out.q.qu);
  out.iterations = 0;
  out.residual = (p_from_q(problem, out.q) - y).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace posctrl
