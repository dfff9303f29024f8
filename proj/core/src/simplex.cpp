#include "posctrl/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace posctrl {

namespace {

constexpr double kPivotTol = 1e-11;     // entries below this are treated as zero pivots
constexpr double kReducedCostTol = 1e-9;

/// Classic dense tableau: rows = constraints, one extra objective row.
/// Column layout is caller-defined; basis[r] is the column basic in row r.
struct Tableau {
  Matrix body;              // (rows) x (cols + 1); last column is b
  Vector cost_row;          // length cols + 1; last entry is -objective
  std::vector<int> basis;

  int rows() const { return static_cast<int>(body.rows()); }
  int cols() const { return static_cast<int>(body.cols()) - 1; }

  void pivot(int row, int col) {
    body.row(row) /= body(row, col);
    for (int rr = 0; rr < rows(); ++rr) {
      if (rr == row) continue;
      const double factor = body(rr, col);
      if (factor != 0.0) body.row(rr) -= factor * body.row(row);
    }
    const double cfactor = cost_row(col);
    if (cfactor != 0.0) cost_row -= cfactor * body.row(row).transpose();
    basis[row] = col;
  }

  /// Bland's rule iteration until optimality; returns false on unbounded.
  bool optimize(long& pivot_budget) {
    while (true) {
      int entering = -1;
      for (int c = 0; c < cols(); ++c) {
        if (cost_row(c) < -kReducedCostTol) {
          entering = c;
          break;  // smallest-index entering column (Bland)
        }
      }
      if (entering < 0) return true;
      int leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int rr = 0; rr < rows(); ++rr) {
        const double a = body(rr, entering);
        if (a <= kPivotTol) continue;
        const double ratio = body(rr, cols()) / a;
        // Bland: strictly better ratio, or equal ratio with smaller basic index.
        if (ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && leaving >= 0 &&
             basis[rr] < basis[leaving])) {
          best_ratio = ratio;
          leaving = rr;
        }
      }
      if (leaving < 0) return false;  // unbounded descent direction
      pivot(leaving, entering);
      if (--pivot_budget <= 0)
        throw SolverError(SolverFailure::NoConvergence, "simplex pivot budget exhausted");
    }
  }
};

}  // namespace

LpResult solve_lp_equality(const Matrix& A, const Vector& b, const Vector& c,
                           long max_pivots) {
  const int rows = static_cast<int>(A.rows());
  const int cols = static_cast<int>(A.cols());
  if (b.size() != rows || c.size() != cols)
    throw DimensionError("solve_lp_equality: inconsistent shapes");

  if (rows == 0) {
    // Unconstrained over the nonnegative orthant: the origin is optimal
    // unless some coordinate has strictly negative cost.
    for (int j = 0; j < cols; ++j)
      if (c(j) < -kReducedCostTol)
        throw SolverError(SolverFailure::LpUnbounded, "objective unbounded below");
    LpResult result;
    result.x = Vector::Zero(cols);
    result.objective = 0.0;
    return result;
  }

  // --- Phase 1: find a basic feasible point with artificial variables. ---
  Tableau t;
  t.body.resize(rows, cols + rows + 1);
  t.body.leftCols(cols) = A;
  t.body.middleCols(cols, rows) = Matrix::Identity(rows, rows);
  t.body.col(cols + rows) = b;
  for (int rr = 0; rr < rows; ++rr) {
    if (t.body(rr, cols + rows) < 0.0) t.body.row(rr) = -t.body.row(rr);
  }
  // Sign flips negated some artificial entries; rebuild the identity block.
  t.body.middleCols(cols, rows) = Matrix::Identity(rows, rows);

  t.basis.resize(rows);
  for (int rr = 0; rr < rows; ++rr) t.basis[rr] = cols + rr;

  // Phase-1 objective: sum of artificials, expressed in nonbasic terms.
  t.cost_row = Vector::Zero(cols + rows + 1);
  for (int rr = 0; rr < rows; ++rr) t.cost_row -= t.body.row(rr).transpose();
  t.cost_row.segment(cols, rows).setZero();

  long budget = max_pivots;
  if (!t.optimize(budget))
    throw SolverError(SolverFailure::LpInfeasible, "phase 1 unbounded (numerical breakdown)");
  const double phase1 = -t.cost_row(cols + rows);
  if (phase1 > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff()))
    throw SolverError(SolverFailure::LpInfeasible,
                      "no feasible point (phase-1 objective " + std::to_string(phase1) + ")");

  // Drive any artificial still basic (at value ~0) out of the basis.
  std::vector<int> keep_rows;
  for (int rr = 0; rr < rows; ++rr) {
    if (t.basis[rr] < cols) {
      keep_rows.push_back(rr);
      continue;
    }
    int col = -1;
    for (int cc = 0; cc < cols; ++cc) {
      if (std::abs(t.body(rr, cc)) > kPivotTol) {
        col = cc;
        break;
      }
    }
    if (col >= 0) {
      t.pivot(rr, col);
      keep_rows.push_back(rr);
    }
    // else: the row is redundant (all-zero in original variables); drop it.
  }
  if (static_cast<int>(keep_rows.size()) != rows) {
    Matrix body(keep_rows.size(), t.body.cols());
    std::vector<int> basis(keep_rows.size());
    for (std::size_t k = 0; k < keep_rows.size(); ++k) {
      body.row(static_cast<int>(k)) = t.body.row(keep_rows[k]);
      basis[k] = t.basis[keep_rows[k]];
    }
    t.body.swap(body);
    t.basis = std::move(basis);
  }

  // --- Phase 2: original objective over original columns only. ---
  Tableau t2;
  t2.body.resize(t.rows(), cols + 1);
  t2.body.leftCols(cols) = t.body.leftCols(cols);
  t2.body.col(cols) = t.body.col(cols + rows);
  t2.basis = t.basis;
  t2.cost_row = Vector::Zero(cols + 1);
  t2.cost_row.head(cols) = c;
  for (int rr = 0; rr < t2.rows(); ++rr) {
    const double cb = c(t2.basis[rr]);
    if (cb != 0.0) t2.cost_row -= cb * t2.body.row(rr).transpose();
  }

  if (!t2.optimize(budget))
    throw SolverError(SolverFailure::LpUnbounded, "objective unbounded below");

  LpResult result;
  result.x = Vector::Zero(cols);
  for (int rr = 0; rr < t2.rows(); ++rr)
    result.x(t2.basis[rr]) = t2.body(rr, cols);
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace posctrl
