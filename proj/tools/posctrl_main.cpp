#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "posctrl/certify.hpp"
#include "posctrl/controller.hpp"
#include "posctrl/dp.hpp"
#include "posctrl/estimator.hpp"
#include "posctrl/harness.hpp"
#include "posctrl/json_io.hpp"
#include "posctrl/problem.hpp"
#include "posctrl/ssp.hpp"

namespace {

using nlohmann::json;
using namespace posctrl;

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

json to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

/// Loads either instance flavor; SSPs are converted on the fly.
PositiveProblem load_instance_any(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (looks_like_ssp(text)) return convert(ssp_from_json(text));
  return problem_from_json(text);
}

struct SolveOptions {
  std::string instance;
  std::string method = "vi";
  std::string out;
};

int run_solve(const SolveOptions& opt) {
  const PositiveProblem problem = load_instance_any(opt.instance);
  json doc;
  if (opt.method == "vi") {
    const PValue value = solve_p(problem);
    const GainMatrix gain = extract_gain(problem, value.p);
    const QSolution q = solve_q_model_based(problem);
    doc["p"] = to_json(value.p);
    doc["iterations"] = value.iterations;
    doc["residual"] = value.residual;
    doc["q"] = {{"qx", to_json(q.q.qx)}, {"qu", to_json(q.q.qu)}};
    doc["K"] = to_json(gain.K);
    doc["selector"] = gain.selector;
  } else {
    const QSolution q = solve_q_lp(model_operator(problem), problem);
    doc["p"] = to_json(p_from_q(problem, q.q));
    doc["iterations"] = q.iterations;
    doc["residual"] = q.residual;
    doc["q"] = {{"qx", to_json(q.q.qx)}, {"qu", to_json(q.q.qu)}};
    doc["K"] = to_json(q.gain.K);
    doc["selector"] = q.gain.selector;
  }
  doc["method"] = opt.method;
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty())
    std::cout << text;
  else
    write_text(opt.out, text);
  return 0;
}

struct ConvertOptions {
  std::string ssp;
  std::string out;
};

int run_convert(const ConvertOptions& opt) {
  const SspInstance ssp = ssp_from_json(read_text(opt.ssp));
  const std::string text = problem_to_json(convert(ssp));
  if (opt.out.empty())
    std::cout << text;
  else
    write_text(opt.out, text);
  return 0;
}

struct RunOptions {
  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> episodes;
};

ExperimentConfig load_with_overrides(const RunOptions& opt) {
  ExperimentConfig cfg = load_experiment_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.runs) cfg.runs = *opt.runs;
  if (opt.episodes) cfg.episodes = *opt.episodes;
  return cfg;
}

int run_simulate(const RunOptions& opt) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  if (cfg.algorithm == "qlearning")
    throw ConfigError("simulate drives the plant-state algorithms (adaptive, optimal)");
  const ExperimentInstance instance = prepare_instance(cfg);
  const std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);

  Rng explore_rng = make_rng(derive_seed(cfg.seed, 0));
  Rng noise_rng = make_rng(derive_seed(cfg.seed, 1));

  std::optional<AdaptiveController> controller;
  if (cfg.algorithm == "adaptive") controller.emplace(instance.problem, cfg.controller);

  json condition_rows = json::array();
  EpisodeResult last_episode;
  double total_cost = 0.0;
  for (int h = 0; h < cfg.episodes; ++h) {
    const bool record = (h == cfg.episodes - 1);
    EpisodeResult episode;
    if (controller) {
      controller->begin_episode(explore_rng);
      episode = run_episode_adaptive(instance.problem, *controller, instance.x0,
                                     cfg.disturbance, cfg.termination_threshold,
                                     cfg.max_episode_len, explore_rng, noise_rng, record);
      controller->end_episode();
    } else {
      episode = run_episode_gain(instance.problem, instance.optimal_gain, instance.x0,
                                 cfg.disturbance, cfg.termination_threshold,
                                 cfg.max_episode_len, noise_rng, record);
    }
    total_cost += episode.cost;
    if (record) last_episode = std::move(episode);
  }

  write_trajectory_csv(out_dir / "trajectory.csv", instance.problem, last_episode);

  json summary;
  summary["algorithm"] = cfg.algorithm;
  summary["episodes"] = cfg.episodes;
  summary["total_cost"] = total_cost;
  summary["final_episode_cost"] = last_episode.cost;
  summary["final_episode_length"] = last_episode.length;
  summary["reached_threshold"] = last_episode.reached_threshold;
  if (controller) {
    summary["solver_failures"] = controller->solver_failures();
    save_correlation(controller->state(), out_dir / "correlation.json");
    if (cfg.rho_monitor) {
      try {
        const MisspecDiagnostics diag =
            misspec_condition(controller->state(), instance.problem, *cfg.rho_monitor,
                              cfg.controller.cond_cap);
        summary["condition"] = {{"lhs", diag.lhs},
                                {"rho", diag.rho},
                                {"satisfied", diag.satisfied}};
      } catch (const InsufficientExcitationError& err) {
        summary["condition"] = {{"error", err.what()}};
      }
    }
  }
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

json certification_block(const PositiveProblem& problem, const Vector& p, double rho) {
  json block;
  const double beta = tightest_beta(problem, p);
  block["beta"] = beta;
  block["rho"] = rho;
  if (rho * beta < 1.0) {
    const CertificationReport report = certification_constants(problem, p, beta, rho);
    block["applicable"] = true;
    block["alpha_check"] = report.alpha_check;
    block["alpha_hat"] = report.alpha_hat;
    block["theta"] = report.theta;
    if (report.gamma)
      block["gamma"] = *report.gamma;
    else
      block["gamma"] = nullptr;
  } else {
    block["applicable"] = false;
  }
  return block;
}

int run_benchmark(const RunOptions& opt) {
  const ExperimentConfig cfg = load_with_overrides(opt);
  const ExperimentInstance instance = prepare_instance(cfg);
  const std::filesystem::path out_dir(opt.out_dir);
  std::filesystem::create_directories(out_dir);

  std::vector<std::pair<std::string, ExperimentResult>> results;
  results.emplace_back(cfg.algorithm, regret_experiment(cfg, instance));
  // An SSP instance admits the tabular baseline; run it alongside the
  // adaptive policy so the regret curves land in one file.
  if (cfg.algorithm == "adaptive" && instance.ssp) {
    ExperimentConfig baseline_cfg = cfg;
    baseline_cfg.algorithm = "qlearning";
    results.emplace_back("qlearning", regret_experiment(baseline_cfg, instance));
  }

  std::vector<std::pair<std::string, const ExperimentResult*>> labeled;
  labeled.reserve(results.size());
  for (const auto& [label, result] : results) labeled.emplace_back(label, &result);
  write_regret_csv(out_dir / "regret.csv", labeled);

  const ExperimentResult& primary = results.front().second;
  if (!primary.condition_mean_lhs.empty())
    write_condition_csv(out_dir / "condition.csv", primary);

  json summary;
  summary["episodes"] = cfg.episodes;
  summary["runs"] = cfg.runs;
  json final_regret;
  json excluded;
  for (const auto& [label, result] : results) {
    final_regret[label] =
        result.regret.mean.empty() ? json() : json(result.regret.mean.back());
    excluded[label] = result.excluded_runs;
  }
  summary["final_regret"] = std::move(final_regret);
  summary["excluded_runs"] = std::move(excluded);
  if (!primary.condition_fraction.empty()) {
    summary["condition_final_lhs"] = primary.condition_mean_lhs.back();
    summary["condition_final_fraction"] = primary.condition_fraction.back();
  }
  summary["certification"] = certification_block(
      instance.problem, instance.optimal_value.p, cfg.rho_monitor.value_or(0.0));
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

struct CertifyOptions {
  std::string instance;
  std::string state;
  double rho = 0.0;
  std::string out;
};

int run_certify(const CertifyOptions& opt) {
  const PositiveProblem problem = load_instance_any(opt.instance);
  const PValue value = solve_p(problem);
  const double beta = tightest_beta(problem, value.p);

  json doc;
  doc["p"] = to_json(value.p);
  doc["beta"] = beta;

  double rho = opt.rho;
  if (!opt.state.empty()) {
    const CorrelationState state = correlation_from_json(read_text(opt.state));
    const MisspecDiagnostics diag = misspec_condition(state, problem, opt.rho);
    doc["condition"] = {{"lhs", diag.lhs}, {"rho", opt.rho}, {"satisfied", diag.satisfied}};
    const DataDrivenSolution solution = solve_data_driven(state, problem);
    doc["p_t"] = to_json(solution.p_t);
    if (diag.satisfied && opt.rho * beta < 1.0) {
      const ValueEnvelopeResult envelope = value_envelope_bounds(value.p, solution.p_t, beta, opt.rho);
      doc["value_envelope"] = {{"holds", envelope.holds},
                         {"lower_margin", envelope.lower_margin},
                         {"upper_margin", envelope.upper_margin}};
      doc["gain_inequality"] = {
          {"holds", gain_certificate_inequality(problem, value.p, solution.K, beta, opt.rho)}};
    }
    rho = opt.rho;
  }
  doc["certification"] = certification_block(problem, value.p, rho);
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty())
    std::cout << text;
  else
    write_text(opt.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal and adaptive control of budget-constrained positive systems"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve an instance and print p, q, K");
  solve_cmd->add_option("--instance", solve_opt.instance, "instance JSON (SSP or plant)")
      ->required();
  solve_cmd->add_option("--method", solve_opt.method, "vi or lp")
      ->check(CLI::IsMember({"vi", "lp"}));
  solve_cmd->add_option("--out", solve_opt.out, "write the report here instead of stdout");

  ConvertOptions convert_opt;
  CLI::App* convert_cmd =
      app.add_subcommand("convert", "rewrite an SSP instance as a plant instance");
  convert_cmd->add_option("--ssp", convert_opt.ssp, "SSP JSON file")->required();
  convert_cmd->add_option("--out", convert_opt.out, "output path (default stdout)");

  RunOptions simulate_opt;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "single seeded run; writes trajectory.csv");
  simulate_cmd->add_option("--config", simulate_opt.config, "experiment config JSON")
      ->required();
  simulate_cmd->add_option("--out-dir", simulate_opt.out_dir, "output directory");
  simulate_cmd->add_option("--seed", simulate_opt.seed, "override the base seed");
  simulate_cmd->add_option("--episodes", simulate_opt.episodes, "override episode count");

  RunOptions benchmark_opt;
  CLI::App* benchmark_cmd =
      app.add_subcommand("benchmark", "multi-run regret experiment; writes CSV outputs");
  benchmark_cmd->add_option("--config", benchmark_opt.config, "experiment config JSON")
      ->required();
  benchmark_cmd->add_option("--out-dir", benchmark_opt.out_dir, "output directory");
  benchmark_cmd->add_option("--seed", benchmark_opt.seed, "override the base seed");
  benchmark_cmd->add_option("--runs", benchmark_opt.runs, "override the run count");
  benchmark_cmd->add_option("--episodes", benchmark_opt.episodes, "override episode count");

  CertifyOptions certify_opt;
  CLI::App* certify_cmd = app.add_subcommand(
      "certify", "evaluate the robustness certificates for an instance (and checkpoint)");
  certify_cmd->add_option("--instance", certify_opt.instance, "instance JSON")->required();
  certify_cmd->add_option("--state", certify_opt.state,
                          "correlation checkpoint JSON (from simulate)");
  certify_cmd->add_option("--rho", certify_opt.rho, "misspecification level");
  certify_cmd->add_option("--out", certify_opt.out, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
    if (solve_cmd->parsed()) return run_solve(solve_opt);
    if (convert_cmd->parsed()) return run_convert(convert_opt);
    if (simulate_cmd->parsed()) return run_simulate(simulate_opt);
    if (benchmark_cmd->parsed()) return run_benchmark(benchmark_opt);
    if (certify_cmd->parsed()) return run_certify(certify_opt);
    std::cerr << app.help();
    return kExitConfigError;
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfigError;
  } catch (const ConfigError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const DimensionError& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const HypothesisError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return kExitNumericalError;
  }
}
