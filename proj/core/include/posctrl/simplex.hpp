#pragma once

#include "posctrl/problem.hpp"

namespace posctrl {

/// Solution of a linear program in standard equality form.
struct LpResult {
  Vector x;          ///< primal solution, length = cols(A)
  double objective;  ///< c^T x at the optimum
};

/// Minimizes c^T x subject to A x = b, x >= 0, by the dense two-phase
/// primal simplex method with Bland's anti-cycling rule. Suitable for the
/// small dense programs arising here (tens of rows/columns).
///
/// Throws SolverError{LpInfeasible} when phase 1 cannot reach zero,
/// SolverError{LpUnbounded} when a descent column has no blocking row, and
/// SolverError{NoConvergence} if the pivot budget is exhausted.
LpResult solve_lp_equality(const Matrix& A, const Vector& b, const Vector& c,
                           long max_pivots = 200000);

}  // namespace posctrl
