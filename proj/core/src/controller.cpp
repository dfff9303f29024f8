#include "posctrl/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace posctrl {

AdaptiveController::AdaptiveController(PositiveProblem problem, ControllerConfig config)
    : problem_(std::move(problem)),
      config_(config),
      state_(make_correlation_state(problem_.n(), problem_.m(), config.lambda,
                                    config.sigma0_scale)),
      current_gain_(make_gain(problem_, std::vector<int>(problem_.partition.size(), -1))),
      episode_gain_(current_gain_) {
  check_dimensions(problem_);
  if (config_.eps0 < 0.0 || config_.eps0 > 1.0)
    throw std::invalid_argument("eps0 must lie in [0, 1]");
  if (config_.alpha < 0.0 || config_.alpha > 1.0)
    throw std::invalid_argument("alpha must lie in [0, 1]");
  if (config_.recompute_period < 1)
    throw std::invalid_argument("recompute_period must be at least 1");
}

double AdaptiveController::epsilon() const {
  return config_.eps0 * std::pow(config_.alpha, static_cast<double>(episode_));
}

void AdaptiveController::begin_episode(Rng& rng) {
  if (config_.explore_unit != ExploreUnit::per_episode) return;
  episode_exploring_ = uniform_real(rng, 0.0, 1.0) < epsilon();
  if (episode_exploring_) episode_gain_ = random_gain(problem_, rng);
}

std::pair<Vector, GainMatrix> AdaptiveController::act(const Vector& x, Rng& rng) {
  if (x.size() != problem_.n()) throw DimensionError("act: state has wrong length");
  if ((x.array() < 0.0).any())
    throw std::invalid_argument("act: negative state entries rejected");
  GainMatrix used = current_gain_;
  if (config_.explore_unit == ExploreUnit::per_step) {
    if (uniform_real(rng, 0.0, 1.0) < epsilon()) used = random_gain(problem_, rng);
  } else if (episode_exploring_) {
    used = episode_gain_;
  }
  return {used.K * x, std::move(used)};
}

void AdaptiveController::observe(const Vector& x_prev, const Vector& u_prev,
                                 const Vector& x_next) {
  update(state_, x_prev, u_prev, x_next);
  ++steps_;
  if (steps_ % config_.recompute_period == 0) recompute_gain();
}

void AdaptiveController::recompute_gain() {
  try {
    const QParameter* warm = last_solution_ ? &last_solution_->q : nullptr;
    last_solution_ = solve_data_driven(state_, problem_, config_.solve, warm,
                                       config_.cond_cap);
    current_gain_ = last_solution_->K;
  } catch (const SolverError&) {
    ++solver_failures_;  // keep the previous gain; the loop must not stall
  }
}

void AdaptiveController::end_episode() { ++episode_; }

}  // namespace posctrl
