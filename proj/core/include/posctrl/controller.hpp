#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "posctrl/estimator.hpp"
#include "posctrl/problem.hpp"
#include "posctrl/rng.hpp"

namespace posctrl {

/// Whether the epsilon-greedy coin is tossed at every step or once per
/// episode (a random gain then drives the whole episode).
enum class ExploreUnit { per_step, per_episode };

struct ControllerConfig {
  double eps0 = 0.05;             ///< initial exploration probability
  double alpha = 0.99;            ///< per-episode decay: eps = eps0 * alpha^h
  int recompute_period = 1;       ///< steps between gain recomputations
  double lambda = 1.0;            ///< forgetting factor of the statistics
  double sigma0_scale = 1e-6;     ///< initial correlation matrix scale
  std::uint64_t seed = 0;         ///< recorded for config round-trips; streams are external
  ExploreUnit explore_unit = ExploreUnit::per_step;
  SolveSettings solve;
  double cond_cap = 1e12;
};

/// Certainty-equivalent adaptive policy: accumulates correlation statistics,
/// periodically re-solves the data-driven fixed point for a new gain, and
/// explores by occasionally swapping in a uniformly random feasible gain
/// (which keeps every action inside the input budget by construction).
///
/// Single-threaded use; all randomness comes through the explicitly passed
/// generator, so a fixed seed reproduces the action sequence bit for bit.
class AdaptiveController {
 public:
  AdaptiveController(PositiveProblem problem, ControllerConfig config);

  /// Current exploration probability eps0 * alpha^episode.
  double epsilon() const;

  /// Tosses the per-episode exploration coin (no-op for per-step mode).
  /// Call at the start of each episode before the first act().
  void begin_episode(Rng& rng);

  /// Picks the gain for this step (exploration or current estimate) and
  /// returns u = K x together with the gain actually used. Rejects negative
  /// state entries.
  std::pair<Vector, GainMatrix> act(const Vector& x, Rng& rng);

  /// Absorbs one transition into the statistics; every recompute_period
  /// steps, re-solves the data-driven equation and swaps in the new gain.
  /// Solver failures leave the gain unchanged and are only counted
  /// (degraded mode) — the control loop never sees them.
  void observe(const Vector& x_prev, const Vector& u_prev, const Vector& x_next);

  /// Closes the episode: increments h (decaying epsilon). Statistics and the
  /// current gain carry over; resetting the plant is the caller's job.
  void end_episode();

  const PositiveProblem& problem() const { return problem_; }
  const ControllerConfig& config() const { return config_; }
  const CorrelationState& state() const { return state_; }
  const GainMatrix& current_gain() const { return current_gain_; }
  int episode() const { return episode_; }
  long steps() const { return steps_; }
  long solver_failures() const { return solver_failures_; }

  /// Most recent successful data-driven solve, if any (basis of the deployed
  /// gain and of the value estimate p_t).
  const std::optional<DataDrivenSolution>& last_solution() const { return last_solution_; }

 private:
  void recompute_gain();

  PositiveProblem problem_;
  ControllerConfig config_;
  CorrelationState state_;
  GainMatrix current_gain_;
  std::optional<DataDrivenSolution> last_solution_;
  int episode_ = 0;
  long steps_ = 0;
  long solver_failures_ = 0;
  bool episode_exploring_ = false;
  GainMatrix episode_gain_;
};

}  // namespace posctrl
