#pragma once

#include <string>
#include <utility>

#include "posctrl/estimator.hpp"
#include "posctrl/problem.hpp"
#include "posctrl/rng.hpp"
#include "posctrl/ssp.hpp"

namespace posctrl::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(POSCTRL_FIXTURE_DIR) + "/" + name;
}

/// Random proper SSP instance: 2..max_states transient states, 1..max_actions
/// actions per state, goal-reaching probability >= 0.1 from every
/// state-action pair (so every stationary policy is proper), and per-state
/// cost gaps summing to less than half the reference cost (so the converted
/// problem keeps a strict budget margin).
inline SspInstance random_ssp(Rng& rng, int max_states = 5, int max_actions = 4) {
  const int n = uniform_int(rng, 2, max_states);
  SspInstance ssp;
  ssp.T.resize(n + 1);
  ssp.c.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    const int actions = uniform_int(rng, 1, max_actions);
    Matrix T(n + 1, actions);
    for (int a = 0; a < actions; ++a) {
      const double goal_mass = uniform_real(rng, 0.1, 0.5);
      Vector w(n);
      for (int k = 0; k < n; ++k) w(k) = uniform_real(rng, 0.01, 1.0);
      const double total = w.sum();
      for (int k = 0; k < n; ++k) T(k, a) = w(k) / total * (1.0 - goal_mass);
      T(n, a) = goal_mass;
    }
    ssp.T[i] = std::move(T);
    const double base = uniform_real(rng, 1.0, 3.0);
    Vector costs(actions);
    costs(0) = base;
    for (int a = 1; a < actions; ++a)
      costs(a) = base + uniform_real(rng, 0.0, base / (2.0 * actions));
    ssp.c[i] = std::move(costs);
  }
  ssp.T[n] = Matrix::Zero(n + 1, 1);
  ssp.T[n](n, 0) = 1.0;
  ssp.c[n] = Vector::Zero(1);
  ssp.i_init = uniform_int(rng, 0, n - 1);
  return ssp;
}

/// Positive diagonal change of coordinates x' = D x. Every standing
/// assumption survives: closed loops become D (A + BK) D^{-1} (entrywise
/// sign and spectrum preserved), budgets become E_i^T D^{-1} x', and the
/// budget margin is scaled by D^{-1} > 0.
inline PositiveProblem rescale_states(const PositiveProblem& base, const Vector& d) {
  PositiveProblem out = base;
  const Matrix D = d.asDiagonal();
  const Matrix Dinv = d.cwiseInverse().asDiagonal();
  out.A = D * base.A * Dinv;
  out.B = D * base.B;
  out.E = base.E * Dinv;  // rows E_i^T -> E_i^T D^{-1}
  out.s = Dinv * base.s;
  return out;
}

/// Random valid problem instance (n <= max_states, m_i <= max_actions - 1):
/// a converted random SSP, optionally pushed off the E = I, uniform-s
/// special case by a random positive diagonal change of coordinates.
inline PositiveProblem random_problem(Rng& rng, int max_states = 5,
                                      int max_actions = 4, bool rescale = true) {
  const PositiveProblem base = convert(random_ssp(rng, max_states, max_actions));
  if (!rescale) return base;
  Vector d(base.n());
  for (int i = 0; i < base.n(); ++i) d(i) = uniform_real(rng, 0.5, 2.0);
  return rescale_states(base, d);
}

/// Correlation state whose implied operator equals the true [A B]^T exactly
/// (up to the linear solve): Sigma is a random PD matrix and SigmaBar is set
/// to [A B] Sigma, mimicking noise-free data in the forgetting-free case.
inline CorrelationState exact_data_state(const PositiveProblem& problem, Rng& rng) {
  const int n = problem.n();
  const int m = problem.m();
  Matrix G(n + m, n + m);
  for (int i = 0; i < n + m; ++i)
    for (int j = 0; j < n + m; ++j) G(i, j) = uniform_real(rng, -1.0, 1.0);
  CorrelationState state = make_correlation_state(n, m, 1.0, 1.0);
  state.Sigma = G * G.transpose() + 0.1 * Matrix::Identity(n + m, n + m);
  Matrix AB(n, n + m);
  AB.leftCols(n) = problem.A;
  AB.rightCols(m) = problem.B;
  state.SigmaBar = AB * state.Sigma;
  state.t = 1;
  return state;
}

/// Drives the plant from x0 = 1 with randomly scaled random-gain inputs
/// (always budget-feasible) and no disturbance, feeding every transition
/// into the correlation state. Long enough horizons persistently excite
/// all input channels.
inline CorrelationState simulate_exact_data(const PositiveProblem& problem, int steps,
                                            Rng& rng, double sigma0_scale = 1e-6) {
  CorrelationState state =
      make_correlation_state(problem.n(), problem.m(), 1.0, sigma0_scale);
  Vector x = Vector::Ones(problem.n());
  for (int t = 0; t < steps; ++t) {
    const GainMatrix gain = random_gain(problem, rng);
    const double scale = uniform_real(rng, 0.0, 1.0);
    const Vector u = scale * (gain.K * x);
    const Vector x_next = problem.A * x + problem.B * u;
    update(state, x, u, x_next);
    x = x_next;
    if (x.cwiseAbs().maxCoeff() < 1e-6) x = Vector::Ones(problem.n());
  }
  return state;
}

}  // namespace posctrl::testing
