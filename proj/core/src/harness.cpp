#include "posctrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "posctrl/estimator.hpp"
#include "posctrl/json_io.hpp"

namespace posctrl {

namespace {

// Stream identifiers so every random purpose gets an independent generator
// derived from the per-run seed.
constexpr std::uint64_t kStreamExplore = 0;
constexpr std::uint64_t kStreamPlantNoise = 1;
constexpr std::uint64_t kStreamReference = 2;
constexpr std::uint64_t kStreamActions = 3;
constexpr std::uint64_t kStreamTransitions = 4;
constexpr std::uint64_t kStreamSspReference = 5;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Vector sample_disturbance(const DisturbanceSpec& spec, int n, Rng& rng) {
  if (spec.kind == DisturbanceSpec::Kind::none) return Vector::Zero(n);
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = uniform_real(rng, spec.lo, spec.hi);
  return w;
}

ExperimentInstance prepare_instance(const ExperimentConfig& config) {
  ExperimentInstance instance;
  std::ifstream in(config.instance_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open instance file " + config.instance_path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (looks_like_ssp(text)) {
    instance.ssp = ssp_from_json(text);
    instance.problem = convert(*instance.ssp);
    instance.ssp_optimal = exact_ssp_value(*instance.ssp);
  } else {
    instance.problem = problem_from_json(text);
  }

  const ValidationReport report = validate(instance.problem);
  if (!report.all_passed()) {
    std::string detail;
    for (const AssumptionCheck* check :
         {&report.nonnegative_data, &report.closed_loop_positive, &report.budget_margin})
      if (!check->passed) {
        detail = check->detail;
        break;
      }
    throw ConfigError("instance violates the standing assumptions: " + detail);
  }

  if (config.x0) {
    if (config.x0->size() != instance.problem.n())
      throw ConfigError("x0 length does not match the instance dimension");
    instance.x0 = *config.x0;
  } else if (instance.ssp) {
    instance.x0 = Vector::Zero(instance.problem.n());
    instance.x0(instance.ssp->i_init) = 1.0;
  } else {
    throw ConfigError("x0 is required for positive-system instances");
  }

  instance.optimal_value = solve_p(instance.problem);
  instance.optimal_gain = extract_gain(instance.problem, instance.optimal_value.p);
  return instance;
}

namespace {

void check_state(const Vector& x, int step) {
  if (!x.allFinite() || inf_norm(x) > 1e100)
    throw SimulationError("state blew up at step " + std::to_string(step));
}

}  // namespace

EpisodeResult run_episode_adaptive(const PositiveProblem& problem,
                                   AdaptiveController& controller, const Vector& x0,
                                   const DisturbanceSpec& disturbance, double delta,
                                   int t_max, Rng& explore_rng, Rng& noise_rng,
                                   bool record_steps) {
  EpisodeResult result;
  Vector x = x0;
  int t = 0;
  while (true) {
    if (inf_norm(x) <= delta) {
      result.reached_threshold = true;
      break;
    }
    if (t >= t_max) break;
    auto [u, used] = controller.act(x, explore_rng);
    const Vector w = sample_disturbance(disturbance, problem.n(), noise_rng);
    if (record_steps) {
      StepSample sample;
      sample.x = x;
      sample.u = u;
      sample.eps_effect = u - controller.current_gain().K * x;
      sample.w = w;
      result.steps.push_back(std::move(sample));
    }
    const Vector x_next = problem.A * x + problem.B * u + w;
    check_state(x_next, t);
    result.cost += problem.s.dot(x) + problem.r.dot(u);
    controller.observe(x, u, x_next);
    x = x_next;
    ++t;
  }
  result.length = t;
  result.x_final = x;
  return result;
}

EpisodeResult run_episode_gain(const PositiveProblem& problem, const GainMatrix& gain,
                               const Vector& x0, const DisturbanceSpec& disturbance,
                               double delta, int t_max, Rng& noise_rng, bool record_steps) {
  EpisodeResult result;
  Vector x = x0;
  int t = 0;
  while (true) {
    if (inf_norm(x) <= delta) {
      result.reached_threshold = true;
      break;
    }
    if (t >= t_max) break;
    const Vector u = gain.K * x;
    const Vector w = sample_disturbance(disturbance, problem.n(), noise_rng);
    if (record_steps) {
      StepSample sample;
      sample.x = x;
      sample.u = u;
      sample.eps_effect = Vector::Zero(problem.m());
      sample.w = w;
      result.steps.push_back(std::move(sample));
    }
    const Vector x_next = problem.A * x + problem.B * u + w;
    check_state(x_next, t);
    result.cost += problem.s.dot(x) + problem.r.dot(u);
    x = x_next;
    ++t;
  }
  result.length = t;
  result.x_final = x;
  return result;
}

double optimal_reference_cost(const PositiveProblem& problem, const GainMatrix& optimal_gain,
                              const Vector& x0, const DisturbanceSpec& disturbance,
                              double delta, int t_max, Rng& noise_rng) {
  return run_episode_gain(problem, optimal_gain, x0, disturbance, delta, t_max, noise_rng)
      .cost;
}

namespace {

RunRecord run_adaptive(const ExperimentConfig& config, const ExperimentInstance& instance,
                       std::uint64_t run_seed) {
  Rng explore_rng = make_rng(derive_seed(run_seed, kStreamExplore));
  Rng noise_rng = make_rng(derive_seed(run_seed, kStreamPlantNoise));
  Rng reference_rng = make_rng(derive_seed(run_seed, kStreamReference));

  AdaptiveController controller(instance.problem, config.controller);
  RunRecord record;
  double cumulative = 0.0;
  for (int h = 0; h < config.episodes; ++h) {
    controller.begin_episode(explore_rng);
    const EpisodeResult episode = run_episode_adaptive(
        instance.problem, controller, instance.x0, config.disturbance,
        config.termination_threshold, config.max_episode_len, explore_rng, noise_rng);
    const double reference = optimal_reference_cost(
        instance.problem, instance.optimal_gain, instance.x0, config.disturbance,
        config.termination_threshold, config.max_episode_len, reference_rng);
    if (config.rho_monitor) {
      try {
        const MisspecDiagnostics diag = misspec_condition(
            controller.state(), instance.problem, *config.rho_monitor,
            config.controller.cond_cap);
        record.condition_lhs.push_back(diag.lhs);
        record.condition_ok.push_back(diag.satisfied ? 1 : 0);
      } catch (const InsufficientExcitationError&) {
        record.condition_lhs.push_back(std::numeric_limits<double>::quiet_NaN());
        record.condition_ok.push_back(0);
      }
    }
    controller.end_episode();
    cumulative += episode.cost - reference;
    record.episode_cost.push_back(episode.cost);
    record.reference_cost.push_back(reference);
    record.regret.push_back(cumulative);
  }
  record.solver_failures = controller.solver_failures();
  return record;
}

RunRecord run_optimal(const ExperimentConfig& config, const ExperimentInstance& instance,
                      std::uint64_t run_seed) {
  Rng noise_rng = make_rng(derive_seed(run_seed, kStreamPlantNoise));
  Rng reference_rng = make_rng(derive_seed(run_seed, kStreamReference));
  RunRecord record;
  double cumulative = 0.0;
  for (int h = 0; h < config.episodes; ++h) {
    const EpisodeResult episode = run_episode_gain(
        instance.problem, instance.optimal_gain, instance.x0, config.disturbance,
        config.termination_threshold, config.max_episode_len, noise_rng);
    const double reference = optimal_reference_cost(
        instance.problem, instance.optimal_gain, instance.x0, config.disturbance,
        config.termination_threshold, config.max_episode_len, reference_rng);
    cumulative += episode.cost - reference;
    record.episode_cost.push_back(episode.cost);
    record.reference_cost.push_back(reference);
    record.regret.push_back(cumulative);
  }
  return record;
}

RunRecord run_qlearning(const ExperimentConfig& config, const ExperimentInstance& instance,
                        std::uint64_t run_seed) {
  const SspInstance& ssp = *instance.ssp;
  const SspSolution& reference_solution = *instance.ssp_optimal;
  Rng action_rng = make_rng(derive_seed(run_seed, kStreamActions));
  Rng transition_rng = make_rng(derive_seed(run_seed, kStreamTransitions));
  Rng reference_rng = make_rng(derive_seed(run_seed, kStreamSspReference));

  QTable table = make_qtable(ssp);
  const QLearningRule rule{config.baseline.eta0, config.baseline.omega};
  RunRecord record;
  double cumulative = 0.0;
  for (int h = 0; h < config.episodes; ++h) {
    const double eps =
        config.baseline.eps0 * std::pow(config.baseline.alpha, static_cast<double>(h));
    double cost = 0.0;
    int state = ssp.i_init;
    for (int t = 0; t < config.max_episode_len && state != ssp.goal(); ++t) {
      const bool explore = uniform_real(action_rng, 0.0, 1.0) < eps;
      const int action = explore ? uniform_int(action_rng, 0, ssp.actions(state) - 1)
                                 : greedy_action(table, state);
      const auto [next_state, stage_cost] = ssp_step(ssp, state, action, transition_rng);
      q_learning_update(table, ssp, state, action, stage_cost, next_state, rule);
      cost += stage_cost;
      state = next_state;
    }
    double reference = 0.0;
    int ref_state = ssp.i_init;
    for (int t = 0; t < config.max_episode_len && ref_state != ssp.goal(); ++t) {
      const int action = reference_solution.policy[ref_state];
      const auto [next_state, stage_cost] = ssp_step(ssp, ref_state, action, reference_rng);
      reference += stage_cost;
      ref_state = next_state;
    }
    cumulative += cost - reference;
    record.episode_cost.push_back(cost);
    record.reference_cost.push_back(reference);
    record.regret.push_back(cumulative);
  }
  return record;
}

RunRecord run_one(const ExperimentConfig& config, const ExperimentInstance& instance,
                  int run_index) {
  const std::uint64_t run_seed = config.seed ^ static_cast<std::uint64_t>(run_index);
  if (config.algorithm == "adaptive") return run_adaptive(config, instance, run_seed);
  if (config.algorithm == "qlearning") return run_qlearning(config, instance, run_seed);
  return run_optimal(config, instance, run_seed);
}

}  // namespace

ExperimentResult regret_experiment(const ExperimentConfig& config) {
  return regret_experiment(config, prepare_instance(config));
}

ExperimentResult regret_experiment(const ExperimentConfig& config,
                                   const ExperimentInstance& instance) {
  if (config.algorithm == "qlearning" && !instance.ssp)
    throw ConfigError("qlearning requires an SSP instance");
  if (config.algorithm != "adaptive" && config.algorithm != "qlearning" &&
      config.algorithm != "optimal")
    throw ConfigError("unknown algorithm \"" + config.algorithm + "\"");

  ExperimentResult result;
  result.runs.resize(config.runs);

  // Runs are independent; farm them out and keep results indexed by run so
  // the later reduction is order-deterministic.
  std::atomic<int> next_run{0};
  const unsigned workers = std::max(1u, std::min<unsigned>(
      std::thread::hardware_concurrency(), static_cast<unsigned>(config.runs)));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int r = next_run.fetch_add(1); r < config.runs; r = next_run.fetch_add(1)) {
        try {
          result.runs[r] = run_one(config, instance, r);
        } catch (const std::exception& err) {
          result.runs[r].excluded = true;
          result.runs[r].exclusion_reason = err.what();
        }
      }
    });
  }
  for (std::thread& thread : pool) thread.join();

  int included = 0;
  for (const RunRecord& record : result.runs)
    if (record.excluded)
      ++result.excluded_runs;
    else
      ++included;

  const int H = config.episodes;
  result.regret.mean.assign(H, std::numeric_limits<double>::quiet_NaN());
  result.regret.ci_lo.assign(H, std::numeric_limits<double>::quiet_NaN());
  result.regret.ci_hi.assign(H, std::numeric_limits<double>::quiet_NaN());
  const bool monitored = config.rho_monitor.has_value() && config.algorithm == "adaptive";
  if (monitored) {
    result.condition_mean_lhs.assign(H, std::numeric_limits<double>::quiet_NaN());
    result.condition_fraction.assign(H, 0.0);
  }
  if (included == 0) return result;

  for (int h = 0; h < H; ++h) {
    double sum = 0.0;
    for (const RunRecord& record : result.runs)
      if (!record.excluded) sum += record.regret[h];
    const double mean = sum / included;
    double var = 0.0;
    for (const RunRecord& record : result.runs)
      if (!record.excluded) var += (record.regret[h] - mean) * (record.regret[h] - mean);
    const double std_dev = included > 1 ? std::sqrt(var / (included - 1)) : 0.0;
    const double half_width = 1.96 * std_dev / std::sqrt(static_cast<double>(included));
    result.regret.mean[h] = mean;
    result.regret.ci_lo[h] = mean - half_width;
    result.regret.ci_hi[h] = mean + half_width;

    if (monitored) {
      double lhs_sum = 0.0;
      int lhs_count = 0, ok_count = 0;
      for (const RunRecord& record : result.runs) {
        if (record.excluded) continue;
        if (std::isfinite(record.condition_lhs[h])) {
          lhs_sum += record.condition_lhs[h];
          ++lhs_count;
        }
        ok_count += record.condition_ok[h];
      }
      if (lhs_count > 0) result.condition_mean_lhs[h] = lhs_sum / lhs_count;
      result.condition_fraction[h] = static_cast<double>(ok_count) / included;
    }
  }
  return result;
}

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps line endings LF
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_regret_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, const ExperimentResult*>>& results) {
  if (results.empty()) throw DimensionError("write_regret_csv: no results given");
  const std::size_t H = results.front().second->regret.mean.size();
  for (const auto& [label, result] : results)
    if (result->regret.mean.size() != H)
      throw DimensionError("write_regret_csv: episode counts differ across results");

  std::ofstream out = open_csv(path);
  out << "episode";
  for (const auto& [label, result] : results)
    out << ",mean_" << label << ",ci_lo_" << label << ",ci_hi_" << label;
  out << "\n";
  for (std::size_t h = 0; h < H; ++h) {
    out << (h + 1);
    for (const auto& [label, result] : results)
      out << ',' << format_number(result->regret.mean[h]) << ','
          << format_number(result->regret.ci_lo[h]) << ','
          << format_number(result->regret.ci_hi[h]);
    out << "\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_condition_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  std::ofstream out = open_csv(path);
  out << "episode,lhs,satisfied\n";
  for (std::size_t h = 0; h < result.condition_mean_lhs.size(); ++h)
    out << (h + 1) << ',' << format_number(result.condition_mean_lhs[h]) << ','
        << format_number(result.condition_fraction[h]) << "\n";
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_trajectory_csv(const std::filesystem::path& path, const PositiveProblem& problem,
                          const EpisodeResult& episode) {
  std::ofstream out = open_csv(path);
  out << "t";
  for (int i = 0; i < problem.n(); ++i) out << ",x" << (i + 1);
  for (int j = 0; j < problem.m(); ++j) out << ",u" << (j + 1);
  out << ",cost\n";
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const StepSample& step = episode.steps[t];
    out << t;
    for (int i = 0; i < problem.n(); ++i) out << ',' << format_number(step.x(i));
    for (int j = 0; j < problem.m(); ++j) out << ',' << format_number(step.u(j));
    out << ',' << format_number(problem.s.dot(step.x) + problem.r.dot(step.u)) << "\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace posctrl
