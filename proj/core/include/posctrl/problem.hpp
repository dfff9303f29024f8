#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "posctrl/errors.hpp"
#include "posctrl/rng.hpp"

namespace posctrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Instance of the constrained positive-system control problem: dynamics
/// x(t+1) = A x(t) + B u(t), stage cost s^T x + r^T u, and per-block input
/// budgets 1^T u_i <= E_i^T x with u >= 0. Row i of E is E_i^T; B and r are
/// column/entry partitioned into n blocks of widths partition[i].
struct PositiveProblem {
  Matrix A;                    ///< n x n state dynamics
  Matrix B;                    ///< n x m input dynamics, blocks B_i
  Matrix E;                    ///< n x n nonnegative budget matrix, row i = E_i^T
  Vector s;                    ///< length-n nonnegative state cost
  Vector r;                    ///< length-m nonnegative input cost
  std::vector<int> partition;  ///< block widths m_1..m_n (m_i >= 0)

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// Start offset of each input block, plus a trailing total (size n+1).
  std::vector<int> block_offsets() const;
};

/// Structural well-formedness: consistent shapes, partition summing to m,
/// finite entries. Throws DimensionError with the offending field named.
void check_dimensions(const PositiveProblem& problem);

/// Outcome of checking one standing assumption.
struct AssumptionCheck {
  bool passed = false;
  std::string detail;  ///< violating entry / margin when failed, empty otherwise
};

/// Result of validate(): the two standing assumptions, checked separately
/// from structural errors (which throw instead).
struct ValidationReport {
  AssumptionCheck nonnegative_data;   ///< E, s, r >= 0 entrywise
  AssumptionCheck closed_loop_positive;  ///< A + BK >= 0 for every K in the gain set
  AssumptionCheck budget_margin;      ///< s - Ebar^T r > 0 strictly (margin >= 1e-12)
  bool all_passed() const {
    return nonnegative_data.passed && closed_loop_positive.passed && budget_margin.passed;
  }
};

/// Checks the standing assumptions. Closed-loop positivity is verified by
/// the elementwise sufficient condition A + BK >= 0 over the whole
/// enumerated gain set; the strict budget inequality uses margin >= 1e-12
/// to avoid floating-point false passes.
ValidationReport validate(const PositiveProblem& problem,
                          std::size_t enumeration_cap = 1'000'000);

/// Extended constraint matrix: m x n, where row block i consists of m_i
/// copies of E_i^T. Satisfies (Ebar x)_ij = E_i^T x for every row j of
/// block i.
Matrix extended_constraint(const PositiveProblem& problem);

/// Feedback gain restricted to the finite feasible set: block K_i is either
/// zero ("off", selector -1) or has E_i^T in exactly one row (selector = the
/// 0-based row within the block).
struct GainMatrix {
  Matrix K;                   ///< m x n
  std::vector<int> selector;  ///< length n, -1 = off, else row index in [0, m_i)
};

/// Builds the gain for a given selector. Throws DimensionError on
/// out-of-range selector entries.
GainMatrix make_gain(const PositiveProblem& problem, const std::vector<int>& selector);

/// True iff K is a member of the feasible gain set (each block zero or
/// E_i^T in a single row) and matches its selector.
bool is_feasible_gain(const PositiveProblem& problem, const GainMatrix& gain,
                      double tol = 0.0);

/// All prod_i (m_i + 1) feasible gains in lexicographic selector order
/// (off before row 0 before row 1, ...; last block varies fastest).
/// Throws SolverError{TooManyGains} when the count exceeds `cap`.
std::vector<GainMatrix> enumerate_gains(const PositiveProblem& problem,
                                        std::size_t cap = 1'000'000);

/// Number of feasible gains, saturated at `cap` + 1 to signal overflow.
std::size_t gain_count(const PositiveProblem& problem,
                       std::size_t cap = 1'000'000);

/// Uniform draw over the selector space (equivalently, over the gain set);
/// each block independently uniform over its m_i + 1 options.
GainMatrix random_gain(const PositiveProblem& problem, Rng& rng);

/// Convenience overload with a one-shot seed.
GainMatrix random_gain(const PositiveProblem& problem, std::uint64_t seed);

/// Exact feasibility check of an input at a state: u >= -slack and
/// 1^T u_i <= E_i^T x + slack per block.
bool is_feasible_input(const PositiveProblem& problem, const Vector& x,
                       const Vector& u, double slack = 1e-12);

/// Spectral radius via dense eigenvalues.
double spectral_radius(const Matrix& M);

/// Schur stability with an explicit margin: rho(M) < threshold.
bool is_stable(const Matrix& M, double threshold = 1.0 - 1e-9);

}  // namespace posctrl
