#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "posctrl/certify.hpp"
#include "posctrl/controller.hpp"
#include "posctrl/dp.hpp"
#include "posctrl/problem.hpp"
#include "posctrl/rng.hpp"
#include "posctrl/ssp.hpp"

namespace posctrl {

/// Additive per-step disturbance on the plant state.
struct DisturbanceSpec {
  enum class Kind { none, uniform };
  Kind kind = Kind::none;
  double lo = 0.0;
  double hi = 0.0;
};

/// Draws one disturbance vector (componentwise i.i.d. for the uniform kind).
Vector sample_disturbance(const DisturbanceSpec& spec, int n, Rng& rng);

/// Tabular Q-learning baseline knobs (stepsize schedule + its own
/// epsilon-decreasing exploration).
struct BaselineConfig {
  double eta0 = 1.0;
  double omega = 0.8;
  double eps0 = 0.05;
  double alpha = 0.99;
};

struct ExperimentConfig {
  std::string instance_path;            ///< SSP or positive-system JSON
  std::string algorithm = "adaptive";   ///< adaptive | qlearning | optimal
  int episodes = 100;                   ///< H
  int max_episode_len = 1000;           ///< per-episode step cap
  double termination_threshold = 0.05;  ///< episode ends when ||x||_inf drops below
  DisturbanceSpec disturbance;
  int runs = 20;
  std::uint64_t seed = 1;               ///< base seed; run r uses seed ^ r
  ControllerConfig controller;
  BaselineConfig baseline;
  std::optional<double> rho_monitor;    ///< track the misspecification condition at this rho
  std::optional<Vector> x0;             ///< defaults to the SSP start-state indicator
};

/// Loaded instance plus the solved reference policy shared by all runs.
struct ExperimentInstance {
  PositiveProblem problem;
  std::optional<SspInstance> ssp;       ///< present when the instance file was an SSP
  Vector x0;
  PValue optimal_value;
  GainMatrix optimal_gain;
  std::optional<SspSolution> ssp_optimal;
};

/// Loads the instance file (auto-detecting SSP vs. positive-system JSON),
/// converts if needed, resolves x0, and solves for the reference policy.
ExperimentInstance prepare_instance(const ExperimentConfig& config);

/// Raised when a simulated state leaves the representable range.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One simulated episode. Step samples are only stored when requested (the
/// regret loops don't need them; certification replays do).
struct EpisodeResult {
  std::vector<StepSample> steps;
  double cost = 0.0;
  int length = 0;
  bool reached_threshold = false;
  Vector x_final;
};

/// Simulates x+ = A x + B u + w under the adaptive controller, feeding every
/// transition back into its statistics. Ends when ||x||_inf <= delta or
/// after t_max steps; accumulates s^T x + r^T u.
EpisodeResult run_episode_adaptive(const PositiveProblem& problem,
                                   AdaptiveController& controller, const Vector& x0,
                                   const DisturbanceSpec& disturbance, double delta,
                                   int t_max, Rng& explore_rng, Rng& noise_rng,
                                   bool record_steps = false);

/// Same plant loop under a fixed gain (no learning, no exploration).
EpisodeResult run_episode_gain(const PositiveProblem& problem, const GainMatrix& gain,
                               const Vector& x0, const DisturbanceSpec& disturbance,
                               double delta, int t_max, Rng& noise_rng,
                               bool record_steps = false);

/// Episode cost of the optimal policy under an independent disturbance
/// stream; the per-episode reference term of the regret.
double optimal_reference_cost(const PositiveProblem& problem, const GainMatrix& optimal_gain,
                              const Vector& x0, const DisturbanceSpec& disturbance,
                              double delta, int t_max, Rng& noise_rng);

/// Per-run episode series.
struct RunRecord {
  std::vector<double> episode_cost;
  std::vector<double> reference_cost;
  std::vector<double> regret;          ///< cumulative: R(h) = sum_{h' <= h} (cost - reference)
  std::vector<double> condition_lhs;   ///< empty unless monitored
  std::vector<std::uint8_t> condition_ok;
  long solver_failures = 0;
  bool excluded = false;
  std::string exclusion_reason;
};

struct AggregateSeries {
  std::vector<double> mean;
  std::vector<double> ci_lo;  ///< mean - 1.96 * std / sqrt(runs)
  std::vector<double> ci_hi;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  AggregateSeries regret;                 ///< across included runs
  std::vector<double> condition_mean_lhs; ///< per episode, empty unless monitored
  std::vector<double> condition_fraction; ///< fraction of included runs satisfying
  int excluded_runs = 0;
};

/// Runs the configured algorithm for `runs` independent seeds (in parallel;
/// run r draws all its streams from seed ^ r) and aggregates mean and 95%
/// confidence band in run-index order. Blown-up runs are excluded and
/// counted.
ExperimentResult regret_experiment(const ExperimentConfig& config);
ExperimentResult regret_experiment(const ExperimentConfig& config,
                                   const ExperimentInstance& instance);

/// 17-significant-digit decimal form used by every CSV emitter.
std::string format_number(double value);

/// regret.csv: episode, then mean/ci_lo/ci_hi column triple per labeled
/// result, in the order given.
void write_regret_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const ExperimentResult*>>& results);

/// condition.csv: episode, lhs (mean across runs), satisfied (fraction).
void write_condition_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// trajectory.csv: t, state entries, input entries, stage cost.
void write_trajectory_csv(const std::filesystem::path& path, const PositiveProblem& problem,
                          const EpisodeResult& episode);

}  // namespace posctrl
