#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "posctrl/estimator.hpp"
#include "posctrl/harness.hpp"
#include "posctrl/problem.hpp"
#include "posctrl/ssp.hpp"

namespace posctrl {

/// Raised for malformed or semantically invalid configuration/instance
/// documents (maps to the CLI's configuration-error exit code).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positive-system instances: object with keys A, B, E (arrays of row
/// arrays), s, r (arrays), partition (array of ints). Numbers are written
/// in shortest round-trip form, so decimal inputs survive a load/save loop
/// unchanged.
PositiveProblem problem_from_json(const std::string& text);
std::string problem_to_json(const PositiveProblem& problem);
PositiveProblem load_problem(const std::filesystem::path& path);
void save_problem(const PositiveProblem& problem, const std::filesystem::path& path);

/// SSP instances: object with keys T (list of row-array matrices, one per
/// state, goal last), c (list of cost rows), i_init (1-based state index,
/// matching the usual write-up convention; in-memory indices are 0-based).
SspInstance ssp_from_json(const std::string& text);
std::string ssp_to_json(const SspInstance& ssp);
SspInstance load_ssp(const std::filesystem::path& path);
void save_ssp(const SspInstance& ssp, const std::filesystem::path& path);

/// True when the document has the SSP shape (a "T" key) rather than the
/// positive-system shape (an "A" key).
bool looks_like_ssp(const std::string& text);

/// Correlation statistics checkpoints: keys Sigma, SigmaBar, lambda, t.
CorrelationState correlation_from_json(const std::string& text);
std::string correlation_to_json(const CorrelationState& state);
CorrelationState load_correlation(const std::filesystem::path& path);
void save_correlation(const CorrelationState& state, const std::filesystem::path& path);

/// Experiment configuration; unknown keys are rejected so typos surface
/// early. instance_path is resolved relative to the config file's directory
/// by load_experiment_config.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace posctrl
