#pragma once

#include <utility>
#include <vector>

#include "posctrl/problem.hpp"
#include "posctrl/rng.hpp"

namespace posctrl {

/// Stochastic-shortest-path instance with one absorbing zero-cost goal state.
///
/// States are 0-based: 0..n_states()-1 are transient, goal() == n_states() is
/// absorbing. T[i] is (n_states()+1) x a_i; column j is the successor
/// distribution of action j from state i (rows ordered transient states first,
/// goal last). c[i] holds the expected stage cost of each action.
struct SspInstance {
  std::vector<Matrix> T;
  std::vector<Vector> c;
  int i_init = 0;

  int n_states() const { return static_cast<int>(T.size()) - 1; }
  int goal() const { return n_states(); }
  int actions(int state) const { return static_cast<int>(T[state].cols()); }
};

/// Checks shapes, column-stochasticity (1e-12), cost nonnegativity, and that
/// the goal state is absorbing with zero cost. Throws DimensionError for
/// structural problems and std::invalid_argument for bad numerics.
void validate_ssp(const SspInstance& ssp);

/// Result of rewriting an SSP as a budget-constrained positive system.
struct SspConversion {
  PositiveProblem problem;
  std::vector<int> reference_action;       ///< cheapest action per state (lowest index on ties)
  std::vector<std::vector<int>> block_actions;  ///< input-block column -> original action index
};

/// Rewrites the SSP with the reference-action rule: per transient state the
/// cheapest action becomes the nominal dynamics column, every other action
/// becomes an input column holding the transition difference, state costs are
/// the reference costs, input costs the cost gaps, and E = I. Differences of
/// short decimal constants are computed in decimal so converted instances
/// match their printed values digit for digit.
SspConversion convert_detailed(const SspInstance& ssp);
PositiveProblem convert(const SspInstance& ssp);

/// Samples one transition; the returned cost is the expected stage cost of
/// the chosen action (costs are modeled as deterministic given the action).
std::pair<int, double> ssp_step(const SspInstance& ssp, int state, int action, Rng& rng);

/// Tabular Q-factors with per-(state, action) visit counts; the goal row is
/// pinned to zero.
struct QTable {
  std::vector<Vector> values;
  std::vector<std::vector<long>> visits;
};

QTable make_qtable(const SspInstance& ssp);

/// Stepsize schedule eta = eta0 / (1 + visits)^omega, evaluated with the
/// visit count prior to the update.
struct QLearningRule {
  double eta0 = 1.0;
  double omega = 0.8;
};

/// Q(state, action) <- (1 - eta) Q(state, action) + eta (cost + min_a Q(next, a)).
/// Increments the visit count; updates targeting the goal row are absorbed
/// (the row stays zero).
void q_learning_update(QTable& table, const SspInstance& ssp, int state, int action,
                       double cost, int next_state, const QLearningRule& rule);

/// Argmin action of the Q row (lowest index on ties).
int greedy_action(const QTable& table, int state);

struct SspSolution {
  Vector values;             ///< optimal cost-to-go, length n_states()+1, goal entry 0
  std::vector<int> policy;   ///< greedy action per transient state
  int iterations = 0;
  double residual = 0.0;
};

/// Value iteration on the SSP itself; independent of the positive-system
/// solvers so the two routes can be cross-checked. Throws when the instance
/// admits no proper policy (values diverge).
SspSolution exact_ssp_value(const SspInstance& ssp, double tol = 1e-12);

}  // namespace posctrl
