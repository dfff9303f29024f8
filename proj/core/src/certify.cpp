#include "posctrl/certify.hpp"

#include <algorithm>
#include <cmath>

namespace posctrl {

namespace {

/// Induced 1-norm: max absolute column sum.
double one_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

void require_hypothesis(double beta, double rho) {
  if (beta < 1.0) throw HypothesisError("beta must be at least 1");
  if (rho < 0.0) throw HypothesisError("rho must be nonnegative");
  if (!(rho * beta < 1.0))
    throw HypothesisError("certificate hypothesis violated: rho*beta >= 1");
}

/// The coupling term rho*beta*(1 + beta*||A + |B| Ebar||_1) shared by theta
/// and the gamma inequality.
double coupling_term(const PositiveProblem& problem, double beta, double rho) {
  const Matrix ebar = extended_constraint(problem);
  return rho * beta * (1.0 + beta * one_norm(problem.A + problem.B.cwiseAbs() * ebar));
}

}  // namespace

double tightest_beta(const PositiveProblem& problem, const Vector& p) {
  return p.cwiseAbs().maxCoeff() / problem.s.minCoeff();
}

bool m_beta_check(const PositiveProblem& problem, const Vector& p, double beta) {
  const double cap = beta * problem.s.minCoeff();
  return (p.array() >= problem.s.array()).all() && (p.array() <= cap).all();
}

CertificationReport certification_constants(const PositiveProblem& problem, const Vector& p,
                                            double beta, double rho) {
  require_hypothesis(beta, rho);
  CertificationReport report;
  report.beta = beta;
  report.rho = rho;
  report.alpha_check = 1.0 - rho * beta;
  report.alpha_hat = 1.0 - rho * beta / report.alpha_check;
  report.theta = (1.0 + coupling_term(problem, beta, rho)) / report.alpha_check;
  report.gamma = cost_bound_gamma(problem, p, beta, rho);
  return report;
}

ValueEnvelopeResult value_envelope_bounds(const Vector& p, const Vector& p_t, double beta, double rho) {
  require_hypothesis(beta, rho);
  ValueEnvelopeResult result;
  result.report.beta = beta;
  result.report.rho = rho;
  result.report.alpha_check = 1.0 - rho * beta;
  result.report.alpha_hat = 1.0 - rho * beta / result.report.alpha_check;
  const Vector lower = result.report.alpha_hat * p;
  const Vector upper = p / result.report.alpha_check;
  result.lower_margin = (p_t - lower).minCoeff();
  result.upper_margin = (upper - p_t).minCoeff();
  const double slack = 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff());
  result.holds = result.lower_margin >= -slack && result.upper_margin >= -slack;
  return result;
}

bool gain_certificate_inequality(const PositiveProblem& problem, const Vector& p,
                                 const GainMatrix& K_t, double beta, double rho) {
  require_hypothesis(beta, rho);
  const double alpha_check = 1.0 - rho * beta;
  const double theta = (1.0 + coupling_term(problem, beta, rho)) / alpha_check;
  const Vector lhs = theta * p - problem.s;
  const Vector rhs = problem.A.transpose() * p +
                     K_t.K.transpose() * (problem.r + problem.B.transpose() * p);
  const double slack = 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff());
  return ((lhs - rhs).array() >= -slack).all();
}

std::optional<double> cost_bound_gamma(const PositiveProblem& problem, const Vector& p,
                                       double beta, double rho) {
  require_hypothesis(beta, rho);
  (void)p;  // the constant depends on the instance data only; p fixes beta upstream
  const Matrix ebar = extended_constraint(problem);
  const Vector margin = problem.s - ebar.transpose() * problem.r.cwiseAbs();
  const double alpha_check = 1.0 - rho * beta;
  const double kappa = 1.0 / alpha_check - 1.0 + coupling_term(problem, beta, rho);
  const Vector rhs = margin - kappa * beta * problem.s;
  double gamma = 1.0;
  for (int i = 0; i < margin.size(); ++i) {
    if (!(margin(i) > 0.0))
      throw HypothesisError("cost-bound certificate needs s > Ebar^T r elementwise");
    gamma = std::min(gamma, rhs(i) / margin(i));
  }
  if (gamma <= 0.0) return std::nullopt;
  return gamma;
}

CostBoundResult input_cost_bound(const std::vector<StepSample>& trajectory,
                                      const PositiveProblem& problem, const Vector& p,
                                      double beta, double gamma, std::size_t t0) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw HypothesisError("cost bound requires gamma in (0, 1]");
  if (t0 >= trajectory.size())
    throw DimensionError("cost bound window starts past the end of the trajectory");
  CostBoundResult result;
  double disturbance_sum = 0.0;
  for (std::size_t t = t0; t < trajectory.size(); ++t) {
    const StepSample& step = trajectory[t];
    // r^T K(t) x equals r^T (u - eps_effect): the planned input before the
    // exploration swap.
    result.lhs += problem.s.dot(step.x) + problem.r.dot(step.u - step.eps_effect);
    disturbance_sum +=
        beta * problem.s.dot((problem.B * step.eps_effect + step.w).cwiseAbs());
  }
  result.rhs = (p.dot(trajectory[t0].x) + disturbance_sum) / gamma;
  result.holds = result.lhs <= result.rhs + 1e-9 * std::max(1.0, std::abs(result.rhs));
  return result;
}

}  // namespace posctrl
