#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "json.hpp"
#include "posctrl/harness.hpp"
#include "posctrl/json_io.hpp"

using namespace posctrl;
using nlohmann::json;
using posctrl::testing::fixture_path;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("posctrl_cli_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string command =
      std::string(POSCTRL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json(const std::filesystem::path& path) { return json::parse(read_text(path)); }

std::string first_line(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return text.substr(0, text.find('\n'));
}

std::size_t line_count(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Writes a small experiment config pointing at the packaged SSP instance.
std::filesystem::path write_config(const TempDir& tmp, const std::string& algorithm,
                                   int episodes, int runs) {
  ExperimentConfig config;
  config.instance_path = fixture_path("ssp3_instance.json");
  config.algorithm = algorithm;
  config.episodes = episodes;
  config.runs = runs;
  config.max_episode_len = 300;
  config.seed = 7;
  config.disturbance.kind = DisturbanceSpec::Kind::uniform;
  config.disturbance.lo = 0.0;
  config.disturbance.hi = 0.01;
  config.rho_monitor = 0.3;
  config.controller.eps0 = 0.1;
  config.controller.alpha = 0.95;
  const std::filesystem::path path = tmp.path / (algorithm + "_config.json");
  std::ofstream out(path, std::ios::binary);
  out << config_to_json(config);
  REQUIRE(static_cast<bool>(out));
  return path;
}

std::string shell_quote(const std::filesystem::path& path) {
  return "\"" + path.string() + "\"";
}

}  // namespace

TEST_CASE("cli solve reports the optimal value and gain") {
  TempDir tmp;
  const std::filesystem::path out = tmp.path / "solve.json";
  const int code = run_cli("solve --instance " + shell_quote(fixture_path("ssp3_instance.json")) +
                           " --out " + shell_quote(out));
  REQUIRE(code == 0);

  const json doc = read_json(out);
  REQUIRE(doc.at("p").size() == 3);
  CHECK(doc.at("p")[0].get<double>() == doctest::Approx(25.0 / 6.0).epsilon(1e-8));
  CHECK(doc.at("p")[1].get<double>() == doctest::Approx(10.0 / 3.0).epsilon(1e-8));
  CHECK(doc.at("p")[2].get<double>() == doctest::Approx(5.0 / 2.0).epsilon(1e-8));
  CHECK(doc.at("selector") == json::array({-1, 1, -1}));
  CHECK(doc.at("method") == "vi");
  CHECK(doc.at("residual").get<double>() < 1e-9);
  CHECK(doc.at("q").at("qx").size() == 3);
  CHECK(doc.at("q").at("qu").size() == 4);
  REQUIRE(doc.at("K").size() == 4);
  CHECK(doc.at("K")[0].size() == 3);
}

TEST_CASE("cli solve methods agree on the packaged instance") {
  TempDir tmp;
  const std::filesystem::path vi_out = tmp.path / "vi.json";
  const std::filesystem::path lp_out = tmp.path / "lp.json";
  REQUIRE(run_cli("solve --instance " + shell_quote(fixture_path("ssp3_problem.json")) +
                  " --method vi --out " + shell_quote(vi_out)) == 0);
  REQUIRE(run_cli("solve --instance " + shell_quote(fixture_path("ssp3_problem.json")) +
                  " --method lp --out " + shell_quote(lp_out)) == 0);

  const json vi = read_json(vi_out);
  const json lp = read_json(lp_out);
  CHECK(lp.at("method") == "lp");
  REQUIRE(vi.at("p").size() == lp.at("p").size());
  for (std::size_t i = 0; i < vi.at("p").size(); ++i)
    CHECK(vi.at("p")[i].get<double>() ==
          doctest::Approx(lp.at("p")[i].get<double>()).epsilon(1e-6));
  CHECK(vi.at("selector") == lp.at("selector"));
}

TEST_CASE("cli convert matches the packaged plant form digit for digit") {
  TempDir tmp;
  const std::filesystem::path out = tmp.path / "converted.json";
  REQUIRE(run_cli("convert --ssp " + shell_quote(fixture_path("ssp3_instance.json")) + " --out " +
                  shell_quote(out)) == 0);

  const PositiveProblem converted = load_problem(out);
  const PositiveProblem reference = load_problem(fixture_path("ssp3_problem.json"));
  CHECK((converted.A - reference.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((converted.B - reference.B).cwiseAbs().maxCoeff() == 0.0);
  CHECK((converted.E - reference.E).cwiseAbs().maxCoeff() == 0.0);
  CHECK((converted.s - reference.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((converted.r - reference.r).cwiseAbs().maxCoeff() == 0.0);
  CHECK(converted.partition == reference.partition);
}

TEST_CASE("cli simulate writes trajectory, summary, and checkpoint") {
  TempDir tmp;
  const std::filesystem::path config = write_config(tmp, "adaptive", 8, 1);
  const std::filesystem::path out_dir = tmp.path / "sim";
  REQUIRE(run_cli("simulate --config " + shell_quote(config) + " --out-dir " +
                  shell_quote(out_dir)) == 0);

  CHECK(first_line(out_dir / "trajectory.csv") == "t,x1,x2,x3,u1,u2,u3,u4,cost");
  CHECK(line_count(out_dir / "trajectory.csv") >= 2);

  const json summary = read_json(out_dir / "summary.json");
  CHECK(summary.at("algorithm") == "adaptive");
  CHECK(summary.at("episodes") == 8);
  CHECK(summary.at("total_cost").get<double>() > 0.0);
  CHECK(summary.contains("solver_failures"));
  REQUIRE(summary.contains("condition"));
  CHECK((summary.at("condition").contains("lhs") ||
         summary.at("condition").contains("error")));

  const CorrelationState state = load_correlation(out_dir / "correlation.json");
  CHECK(state.Sigma.rows() == 7);
  CHECK(state.SigmaBar.rows() == 3);
  CHECK(state.t > 0);
}

TEST_CASE("cli simulate rejects the tabular baseline") {
  TempDir tmp;
  const std::filesystem::path config = write_config(tmp, "qlearning", 3, 1);
  CHECK(run_cli("simulate --config " + shell_quote(config)) == 2);
}

TEST_CASE("cli benchmark writes labeled curves, condition series, and certificates") {
  TempDir tmp;
  const std::filesystem::path config = write_config(tmp, "adaptive", 3, 2);
  const std::filesystem::path out_dir = tmp.path / "bench";
  REQUIRE(run_cli("benchmark --config " + shell_quote(config) + " --out-dir " +
                  shell_quote(out_dir)) == 0);

  CHECK(first_line(out_dir / "regret.csv") ==
        "episode,mean_adaptive,ci_lo_adaptive,ci_hi_adaptive,"
        "mean_qlearning,ci_lo_qlearning,ci_hi_qlearning");
  CHECK(line_count(out_dir / "regret.csv") == 4);
  CHECK(first_line(out_dir / "condition.csv") == "episode,lhs,satisfied");

  const json summary = read_json(out_dir / "summary.json");
  CHECK(summary.at("final_regret").contains("adaptive"));
  CHECK(summary.at("final_regret").contains("qlearning"));
  CHECK(summary.at("excluded_runs").at("adaptive") == 0);

  const json cert = summary.at("certification");
  CHECK(cert.at("beta").get<double>() == doctest::Approx(25.0 / 9.0).epsilon(1e-8));
  CHECK(cert.at("rho").get<double>() == doctest::Approx(0.3));
  REQUIRE(cert.at("applicable").get<bool>());
  CHECK(cert.at("alpha_check").get<double>() == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  CHECK(cert.at("theta").get<double>() == doctest::Approx(48.5).epsilon(1e-6));
  CHECK(cert.at("gamma").is_null());
}

TEST_CASE("cli benchmark reruns are byte-identical") {
  TempDir tmp;
  const std::filesystem::path config = write_config(tmp, "adaptive", 3, 2);
  const std::filesystem::path dir_a = tmp.path / "a";
  const std::filesystem::path dir_b = tmp.path / "b";
  REQUIRE(run_cli("benchmark --config " + shell_quote(config) + " --out-dir " + shell_quote(dir_a)) ==
          0);
  REQUIRE(run_cli("benchmark --config " + shell_quote(config) + " --out-dir " + shell_quote(dir_b)) ==
          0);
  CHECK(read_text(dir_a / "regret.csv") == read_text(dir_b / "regret.csv"));
  CHECK(read_text(dir_a / "summary.json") == read_text(dir_b / "summary.json"));
}

TEST_CASE("cli certify consumes a checkpoint from simulate") {
  TempDir tmp;
  const std::filesystem::path config = write_config(tmp, "adaptive", 8, 1);
  const std::filesystem::path out_dir = tmp.path / "sim";
  REQUIRE(run_cli("simulate --config " + shell_quote(config) + " --out-dir " +
                  shell_quote(out_dir)) == 0);

  const std::filesystem::path report_path = tmp.path / "certify.json";
  REQUIRE(run_cli("certify --instance " + shell_quote(fixture_path("ssp3_instance.json")) +
                  " --state " + shell_quote(out_dir / "correlation.json") +
                  " --rho 0.3 --out " + shell_quote(report_path)) == 0);

  const json report = read_json(report_path);
  CHECK(report.at("beta").get<double>() == doctest::Approx(25.0 / 9.0).epsilon(1e-8));
  REQUIRE(report.contains("condition"));
  CHECK(report.at("condition").at("rho").get<double>() == doctest::Approx(0.3));
  REQUIRE(report.at("p_t").size() == 3);
  CHECK(report.at("certification").at("applicable").get<bool>());
  if (report.at("condition").at("satisfied").get<bool>()) {
    REQUIRE(report.contains("value_envelope"));
    REQUIRE(report.contains("gain_inequality"));
    CHECK(report.at("value_envelope").at("holds").get<bool>());
    CHECK(report.at("gain_inequality").at("holds").get<bool>());
  }
}

TEST_CASE("cli exit codes separate configuration from numerical failures") {
  TempDir tmp;
  SUBCASE("help exits zero") { CHECK(run_cli("--help") == 0); }
  SUBCASE("missing subcommand") { CHECK(run_cli("") == 2); }
  SUBCASE("unknown flag") {
    CHECK(run_cli("solve --bogus x --instance " +
                  shell_quote(fixture_path("ssp3_instance.json"))) == 2);
  }
  SUBCASE("missing instance file") {
    CHECK(run_cli("solve --instance /nonexistent/instance.json") == 2);
  }
  SUBCASE("malformed instance json") {
    const std::filesystem::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << "{\"A\": 3}";
    CHECK(run_cli("solve --instance " + shell_quote(bad)) == 2);
  }
  SUBCASE("unstable plant fails numerically") {
    PositiveProblem runaway;
    runaway.A = Matrix::Constant(1, 1, 1.2);
    runaway.B = Matrix(1, 0);
    runaway.E = Matrix::Zero(1, 1);
    runaway.s = Vector::Ones(1);
    runaway.r = Vector(0);
    runaway.partition = {0};
    const std::filesystem::path path = tmp.path / "runaway.json";
    save_problem(runaway, path);
    CHECK(run_cli("solve --instance " + shell_quote(path)) == 3);
  }
}
