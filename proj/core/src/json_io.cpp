#include "posctrl/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace posctrl {

namespace {

using nlohmann::json;

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("invalid JSON: ") + err.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

const json& field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError(std::string("missing key \"") + key + "\"");
  return *it;
}

double number_at(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + " must be a number");
  return value.get<double>();
}

Vector vector_from(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + " must be an array of numbers");
  Vector v(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    v(static_cast<int>(i)) = number_at(value[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix_from(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + " must be an array of row arrays");
  const std::size_t rows = value.size();
  std::size_t cols = 0;
  if (rows > 0) {
    if (!value[0].is_array()) throw ConfigError(where + " rows must be arrays");
    cols = value[0].size();
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!value[i].is_array() || value[i].size() != cols)
      throw ConfigError(where + " rows must all have the same length");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<int>(i), static_cast<int>(j)) =
          number_at(value[i][j], where + " entry (" + std::to_string(i) + "," +
                                     std::to_string(j) + ")");
  }
  return m;
}

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

void reject_unknown_keys(const json& doc, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& item : doc.items())
    if (known.find(item.key()) == known.end())
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
}

}  // namespace

PositiveProblem problem_from_json(const std::string& text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ConfigError("instance document must be a JSON object");
  reject_unknown_keys(doc, {"A", "B", "E", "s", "r", "partition"}, "instance");
  PositiveProblem problem;
  problem.A = matrix_from(field(doc, "A"), "A");
  problem.B = matrix_from(field(doc, "B"), "B");
  problem.E = matrix_from(field(doc, "E"), "E");
  problem.s = vector_from(field(doc, "s"), "s");
  problem.r = vector_from(field(doc, "r"), "r");
  const json& part = field(doc, "partition");
  if (!part.is_array()) throw ConfigError("partition must be an array of integers");
  problem.partition.clear();
  for (std::size_t i = 0; i < part.size(); ++i) {
    if (!part[i].is_number_integer())
      throw ConfigError("partition entries must be integers");
    problem.partition.push_back(part[i].get<int>());
  }
  try {
    check_dimensions(problem);
  } catch (const DimensionError& err) {
    throw ConfigError(std::string("inconsistent instance: ") + err.what());
  }
  return problem;
}

std::string problem_to_json(const PositiveProblem& problem) {
  json doc;
  doc["A"] = to_json(problem.A);
  doc["B"] = to_json(problem.B);
  doc["E"] = to_json(problem.E);
  doc["s"] = to_json(problem.s);
  doc["r"] = to_json(problem.r);
  doc["partition"] = problem.partition;
  return doc.dump(2) + "\n";
}

PositiveProblem load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_file(path));
}

void save_problem(const PositiveProblem& problem, const std::filesystem::path& path) {
  write_file(path, problem_to_json(problem));
}

SspInstance ssp_from_json(const std::string& text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ConfigError("SSP document must be a JSON object");
  reject_unknown_keys(doc, {"T", "c", "i_init"}, "SSP instance");
  const json& t = field(doc, "T");
  const json& c = field(doc, "c");
  if (!t.is_array() || !c.is_array()) throw ConfigError("T and c must be arrays");
  if (t.size() != c.size()) throw ConfigError("T and c must have one entry per state");
  SspInstance ssp;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ssp.T.push_back(matrix_from(t[i], "T[" + std::to_string(i) + "]"));
    ssp.c.push_back(vector_from(c[i], "c[" + std::to_string(i) + "]"));
  }
  const json& init = field(doc, "i_init");
  if (!init.is_number_integer()) throw ConfigError("i_init must be an integer");
  ssp.i_init = init.get<int>() - 1;  // documents use 1-based state labels
  try {
    validate_ssp(ssp);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("invalid SSP instance: ") + err.what());
  }
  return ssp;
}

std::string ssp_to_json(const SspInstance& ssp) {
  json doc;
  doc["T"] = json::array();
  doc["c"] = json::array();
  for (std::size_t i = 0; i < ssp.T.size(); ++i) {
    doc["T"].push_back(to_json(ssp.T[i]));
    doc["c"].push_back(to_json(ssp.c[i]));
  }
  doc["i_init"] = ssp.i_init + 1;
  return doc.dump(2) + "\n";
}

SspInstance load_ssp(const std::filesystem::path& path) {
  return ssp_from_json(read_file(path));
}

void save_ssp(const SspInstance& ssp, const std::filesystem::path& path) {
  write_file(path, ssp_to_json(ssp));
}

bool looks_like_ssp(const std::string& text) {
  const json doc = parse(text);
  return doc.is_object() && doc.contains("T") && !doc.contains("A");
}

CorrelationState correlation_from_json(const std::string& text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ConfigError("correlation document must be a JSON object");
  reject_unknown_keys(doc, {"Sigma", "SigmaBar", "lambda", "t"}, "correlation state");
  CorrelationState state;
  state.Sigma = matrix_from(field(doc, "Sigma"), "Sigma");
  state.SigmaBar = matrix_from(field(doc, "SigmaBar"), "SigmaBar");
  state.lambda = number_at(field(doc, "lambda"), "lambda");
  const json& t = field(doc, "t");
  if (!t.is_number_integer()) throw ConfigError("t must be an integer");
  state.t = t.get<long>();
  if (state.Sigma.rows() != state.Sigma.cols() ||
      state.SigmaBar.cols() != state.Sigma.rows() ||
      state.SigmaBar.rows() > state.Sigma.rows())
    throw ConfigError("correlation matrices have inconsistent shapes");
  if (!(state.lambda > 0.0) || state.lambda > 1.0)
    throw ConfigError("lambda must lie in (0, 1]");
  return state;
}

std::string correlation_to_json(const CorrelationState& state) {
  json doc;
  doc["Sigma"] = to_json(state.Sigma);
  doc["SigmaBar"] = to_json(state.SigmaBar);
  doc["lambda"] = state.lambda;
  doc["t"] = state.t;
  return doc.dump(2) + "\n";
}

CorrelationState load_correlation(const std::filesystem::path& path) {
  return correlation_from_json(read_file(path));
}

void save_correlation(const CorrelationState& state, const std::filesystem::path& path) {
  write_file(path, correlation_to_json(state));
}

namespace {

DisturbanceSpec disturbance_from(const json& value) {
  DisturbanceSpec spec;
  if (value.is_null()) return spec;
  if (!value.is_object()) throw ConfigError("disturbance must be an object or null");
  reject_unknown_keys(value, {"kind", "lo", "hi"}, "disturbance");
  const std::string kind = field(value, "kind").get<std::string>();
  if (kind == "none") return spec;
  if (kind != "uniform") throw ConfigError("disturbance kind must be \"uniform\" or \"none\"");
  spec.kind = DisturbanceSpec::Kind::uniform;
  spec.lo = number_at(field(value, "lo"), "disturbance.lo");
  spec.hi = number_at(field(value, "hi"), "disturbance.hi");
  if (spec.lo > spec.hi) throw ConfigError("disturbance.lo must not exceed disturbance.hi");
  return spec;
}

json disturbance_to(const DisturbanceSpec& spec) {
  if (spec.kind == DisturbanceSpec::Kind::none) return json{{"kind", "none"}};
  return json{{"kind", "uniform"}, {"lo", spec.lo}, {"hi", spec.hi}};
}

ControllerConfig controller_from(const json& value) {
  ControllerConfig cfg;
  if (value.is_null()) return cfg;
  if (!value.is_object()) throw ConfigError("controller block must be an object");
  reject_unknown_keys(value,
                      {"eps0", "alpha", "recompute_period", "lambda", "sigma0_scale",
                       "seed", "explore_unit", "tol", "max_iter"},
                      "controller block");
  if (value.contains("eps0")) cfg.eps0 = number_at(value["eps0"], "controller.eps0");
  if (value.contains("alpha")) cfg.alpha = number_at(value["alpha"], "controller.alpha");
  if (value.contains("recompute_period"))
    cfg.recompute_period = value["recompute_period"].get<int>();
  if (value.contains("lambda")) cfg.lambda = number_at(value["lambda"], "controller.lambda");
  if (value.contains("sigma0_scale"))
    cfg.sigma0_scale = number_at(value["sigma0_scale"], "controller.sigma0_scale");
  if (value.contains("seed")) cfg.seed = value["seed"].get<std::uint64_t>();
  if (value.contains("tol")) cfg.solve.tol = number_at(value["tol"], "controller.tol");
  if (value.contains("max_iter")) cfg.solve.max_iter = value["max_iter"].get<int>();
  if (value.contains("explore_unit")) {
    const std::string unit = value["explore_unit"].get<std::string>();
    if (unit == "per_step")
      cfg.explore_unit = ExploreUnit::per_step;
    else if (unit == "per_episode")
      cfg.explore_unit = ExploreUnit::per_episode;
    else
      throw ConfigError("explore_unit must be \"per_step\" or \"per_episode\"");
  }
  return cfg;
}

json controller_to(const ControllerConfig& cfg) {
  return json{{"eps0", cfg.eps0},
              {"alpha", cfg.alpha},
              {"recompute_period", cfg.recompute_period},
              {"lambda", cfg.lambda},
              {"sigma0_scale", cfg.sigma0_scale},
              {"seed", cfg.seed},
              {"explore_unit",
               cfg.explore_unit == ExploreUnit::per_step ? "per_step" : "per_episode"},
              {"tol", cfg.solve.tol},
              {"max_iter", cfg.solve.max_iter}};
}

BaselineConfig baseline_from(const json& value) {
  BaselineConfig cfg;
  if (value.is_null()) return cfg;
  if (!value.is_object()) throw ConfigError("baseline block must be an object");
  reject_unknown_keys(value, {"eta0", "omega", "eps0", "alpha"}, "baseline block");
  if (value.contains("eta0")) cfg.eta0 = number_at(value["eta0"], "baseline.eta0");
  if (value.contains("omega")) cfg.omega = number_at(value["omega"], "baseline.omega");
  if (value.contains("eps0")) cfg.eps0 = number_at(value["eps0"], "baseline.eps0");
  if (value.contains("alpha")) cfg.alpha = number_at(value["alpha"], "baseline.alpha");
  return cfg;
}

json baseline_to(const BaselineConfig& cfg) {
  return json{{"eta0", cfg.eta0},
              {"omega", cfg.omega},
              {"eps0", cfg.eps0},
              {"alpha", cfg.alpha}};
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json doc = parse(text);
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(doc,
                      {"instance_path", "algorithm", "episodes", "max_episode_len",
                       "termination_threshold", "disturbance", "runs", "seed",
                       "controller", "baseline", "rho_monitor", "x0"},
                      "config");
  ExperimentConfig cfg;
  cfg.instance_path = field(doc, "instance_path").get<std::string>();
  if (doc.contains("algorithm")) cfg.algorithm = doc["algorithm"].get<std::string>();
  if (cfg.algorithm != "adaptive" && cfg.algorithm != "qlearning" &&
      cfg.algorithm != "optimal")
    throw ConfigError("algorithm must be adaptive, qlearning, or optimal");
  if (doc.contains("episodes")) cfg.episodes = doc["episodes"].get<int>();
  if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (doc.contains("max_episode_len"))
    cfg.max_episode_len = doc["max_episode_len"].get<int>();
  if (cfg.max_episode_len < 1) throw ConfigError("max_episode_len must be at least 1");
  if (doc.contains("termination_threshold"))
    cfg.termination_threshold =
        number_at(doc["termination_threshold"], "termination_threshold");
  if (!(cfg.termination_threshold > 0.0))
    throw ConfigError("termination_threshold must be positive");
  if (doc.contains("disturbance")) cfg.disturbance = disturbance_from(doc["disturbance"]);
  if (doc.contains("runs")) cfg.runs = doc["runs"].get<int>();
  if (cfg.runs < 1) throw ConfigError("runs must be at least 1");
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("controller")) cfg.controller = controller_from(doc["controller"]);
  if (doc.contains("baseline")) cfg.baseline = baseline_from(doc["baseline"]);
  if (doc.contains("rho_monitor") && !doc["rho_monitor"].is_null())
    cfg.rho_monitor = number_at(doc["rho_monitor"], "rho_monitor");
  if (doc.contains("x0")) cfg.x0 = vector_from(doc["x0"], "x0");
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["instance_path"] = cfg.instance_path;
  doc["algorithm"] = cfg.algorithm;
  doc["episodes"] = cfg.episodes;
  doc["max_episode_len"] = cfg.max_episode_len;
  doc["termination_threshold"] = cfg.termination_threshold;
  doc["disturbance"] = disturbance_to(cfg.disturbance);
  doc["runs"] = cfg.runs;
  doc["seed"] = cfg.seed;
  doc["controller"] = controller_to(cfg.controller);
  doc["baseline"] = baseline_to(cfg.baseline);
  if (cfg.rho_monitor) doc["rho_monitor"] = *cfg.rho_monitor;
  if (cfg.x0) doc["x0"] = to_json(*cfg.x0);
  return doc.dump(2) + "\n";
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  ExperimentConfig cfg = config_from_json(read_file(path));
  const std::filesystem::path instance(cfg.instance_path);
  if (instance.is_relative())
    cfg.instance_path = (path.parent_path() / instance).string();
  return cfg;
}

}  // namespace posctrl
