#include <cmath>

#include "doctest.h"
#include "generators.hpp"
#include "posctrl/dp.hpp"
#include "posctrl/estimator.hpp"
#include "posctrl/json_io.hpp"

using namespace posctrl;
using posctrl::testing::fixture_path;

namespace {

PositiveProblem fixture_problem() {
  return load_problem(fixture_path("ssp3_problem.json"));
}

Matrix stacked_model(const PositiveProblem& problem) {
  Matrix AB(problem.n(), problem.n() + problem.m());
  AB.leftCols(problem.n()) = problem.A;
  AB.rightCols(problem.m()) = problem.B;
  return AB;
}

}  // namespace

TEST_CASE("update accumulates rank-one terms") {
  SUBCASE("single update from the unit state") {
    CorrelationState state = make_correlation_state(3, 4, 1.0, 1e-6);
    Vector x = Vector::Zero(3);
    x(0) = 1.0;
    const Vector u = Vector::Zero(4);
    Vector x_next(3);
    x_next << 0.4, 0.0, 0.4;
    update(state, x, u, x_next);

    Matrix expected = 1e-6 * Matrix::Identity(7, 7);
    expected(0, 0) += 1.0;
    CHECK((state.Sigma - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(state.SigmaBar.col(0).isApprox(x_next));
    CHECK(state.t == 1);
  }
  SUBCASE("forgetting factor weights the history geometrically") {
    CorrelationState state = make_correlation_state(1, 1, 0.5, 1.0);
    Vector x = Vector::Ones(1);
    Vector u = Vector::Ones(1);
    Vector x_next = Vector::Ones(1);
    const Matrix sigma0 = state.Sigma;
    update(state, x, u, x_next);
    update(state, x, u, x_next);
    Matrix v(2, 1);
    v << 1.0, 1.0;
    const Matrix expected = 0.25 * sigma0 + 1.5 * v * v.transpose();
    CHECK((state.Sigma - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("non-finite samples are rejected") {
    CorrelationState state = make_correlation_state(1, 1, 1.0, 1e-6);
    Vector bad = Vector::Constant(1, std::nan(""));
    CHECK_THROWS_AS(update(state, bad, Vector::Zero(1), Vector::Zero(1)),
                    std::invalid_argument);
  }
}

TEST_CASE("exact-data identity: SigmaBar = [A B](Sigma - lambda^t Sigma0)") {
  Rng rng = make_rng(99);
  const PositiveProblem problem = fixture_problem();
  const double sigma0 = 1e-6;
  CorrelationState state =
      posctrl::testing::simulate_exact_data(problem, 60, rng, sigma0);
  const Matrix AB = stacked_model(problem);
  const double weight = std::pow(state.lambda, state.t) * sigma0;
  const Matrix reconstructed =
      AB * (state.Sigma - weight * Matrix::Identity(7, 7));
  CHECK((state.SigmaBar - reconstructed).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("implied_model recovers the dynamics") {
  const PositiveProblem problem = fixture_problem();
  SUBCASE("identity Sigma returns SigmaBar directly") {
    CorrelationState state = make_correlation_state(3, 4, 1.0, 1.0);
    state.Sigma = Matrix::Identity(7, 7);
    state.SigmaBar = stacked_model(problem);
    const ImpliedModel model = implied_model(state);
    CHECK((model.Ahat - problem.A).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((model.Bhat - problem.B).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("noise-free excited data recovers (A, B) to 1e-6") {
    Rng rng = make_rng(4);
    const CorrelationState state =
        posctrl::testing::simulate_exact_data(fixture_problem(), 200, rng, 1e-9);
    const ImpliedModel model = implied_model(state);
    CHECK((model.Ahat - problem.A).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((model.Bhat - problem.B).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("rank-deficient data raises insufficient excitation") {
    CorrelationState state = make_correlation_state(2, 1, 1.0, 1e-6);
    state.Sigma.setZero();  // drop the regularizer so the line is exactly singular
    Vector x(2), u(1), x_next(2);
    x << 1.0, 0.0;
    u << 0.0;
    x_next << 0.5, 0.0;
    for (int k = 0; k < 5; ++k) update(state, x, u, x_next);
    CHECK_THROWS_AS(implied_model(state), InsufficientExcitationError);
    try {
      implied_model(state);
    } catch (const InsufficientExcitationError& err) {
      CHECK(err.condition_estimate() > 1e12);
    }
  }
}

TEST_CASE("solve_data_driven mirrors the model-based solution on exact data") {
  Rng rng = make_rng(12);
  const PositiveProblem problem = fixture_problem();
  const CorrelationState state = posctrl::testing::exact_data_state(problem, rng);

  const DataDrivenSolution data = solve_data_driven(state, problem);
  const QSolution model = solve_q_model_based(problem);
  CHECK((data.q.stacked() - model.q.stacked()).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(data.K.selector == model.gain.selector);
  CHECK((data.p_t - p_from_q(problem, data.q)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero implied dynamics give q = [s; r]") {
  const PositiveProblem problem = fixture_problem();
  CorrelationState state = make_correlation_state(3, 4, 1.0, 1.0);
  state.Sigma = Matrix::Identity(7, 7);
  state.SigmaBar = Matrix::Zero(3, 7);

  const DataDrivenSolution vi = solve_data_driven(state, problem);
  CHECK((vi.q.qx - problem.s).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((vi.q.qu - problem.r).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(vi.K.K.cwiseAbs().maxCoeff() == 0.0);

  const DataDrivenSolution lp = solve_data_driven_lp(state, problem);
  CHECK((lp.q.qx - problem.s).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((lp.q.qu - problem.r).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("LP and VI routes agree on data-driven operators") {
  Rng rng = make_rng(333);
  for (int trial = 0; trial < 10; ++trial) {
    const PositiveProblem problem = posctrl::testing::random_problem(rng);
    const CorrelationState state = posctrl::testing::exact_data_state(problem, rng);
    const DataDrivenSolution vi = solve_data_driven(state, problem);
    const DataDrivenSolution lp = solve_data_driven_lp(state, problem);
    CHECK((vi.q.stacked() - lp.q.stacked()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("misspec_condition evaluates the deviation norms") {
  const PositiveProblem problem = fixture_problem();
  SUBCASE("exact data has (near) zero misspecification") {
    Rng rng = make_rng(21);
    const CorrelationState state = posctrl::testing::exact_data_state(problem, rng);
    const MisspecDiagnostics diag = misspec_condition(state, problem, 0.3);
    CHECK(diag.lhs < 1e-9);
    CHECK(diag.satisfied);
    CHECK(diag.Atilde.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(diag.Btilde.cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("zero implied model measures the plain model norms") {
    CorrelationState state = make_correlation_state(3, 4, 1.0, 1.0);
    state.Sigma = Matrix::Identity(7, 7);
    state.SigmaBar = Matrix::Zero(3, 7);
    const MisspecDiagnostics diag = misspec_condition(state, problem, 0.3);
    // ||E^T||_inf * ||A^T||_inf + ||B^T||_inf with the fixture matrices:
    // 1 * 1.0 + 1.2.
    CHECK(diag.lhs == doctest::Approx(2.2).epsilon(1e-12));
    CHECK_FALSE(diag.satisfied);
  }
}

TEST_CASE("order independence of lambda = 1 accumulation") {
  Rng rng = make_rng(77);
  const PositiveProblem problem = fixture_problem();
  // Build the same sample set in two different orders.
  std::vector<Vector> xs, us, xns;
  Vector x = Vector::Ones(3);
  for (int k = 0; k < 30; ++k) {
    const GainMatrix gain = random_gain(problem, rng);
    const Vector u = gain.K * x;
    const Vector xn = problem.A * x + problem.B * u;
    xs.push_back(x);
    us.push_back(u);
    xns.push_back(xn);
    x = xn.cwiseAbs().maxCoeff() < 1e-8 ? Vector::Ones(3) : xn;
  }
  CorrelationState forward = make_correlation_state(3, 4, 1.0, 1e-6);
  CorrelationState backward = make_correlation_state(3, 4, 1.0, 1e-6);
  for (std::size_t k = 0; k < xs.size(); ++k)
    update(forward, xs[k], us[k], xns[k]);
  for (std::size_t k = xs.size(); k-- > 0;)
    update(backward, xs[k], us[k], xns[k]);
  CHECK((forward.Sigma - backward.Sigma).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((forward.SigmaBar - backward.SigmaBar).cwiseAbs().maxCoeff() < 1e-12);
}
