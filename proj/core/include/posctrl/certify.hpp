#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "posctrl/problem.hpp"

namespace posctrl {

/// Raised when a certificate's hypothesis fails (e.g. rho*beta >= 1): the
/// certificate is inapplicable, which is different from a bound violation.
class HypothesisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Constants of the robustness certificates at misspecification level rho.
struct CertificationReport {
  double beta = 1.0;         ///< value-envelope parameter: s <= p <= beta*min_i(s_i)*1
  double rho = 0.0;
  double alpha_check = 1.0;  ///< 1 - rho*beta
  double alpha_hat = 1.0;    ///< 1 - rho*beta/alpha_check
  double theta = 1.0;        ///< (1 + rho*beta*(1 + beta*||A + |B| Ebar||_1)) / alpha_check
  std::optional<double> gamma;  ///< cost-bound constant in (0, 1]; empty when vacuous
};

/// Smallest beta for which the envelope s <= p <= beta*min_i(s_i)*1 holds:
/// ||p||_inf / min_i s_i.
double tightest_beta(const PositiveProblem& problem, const Vector& p);

/// Membership test of the value envelope above.
bool m_beta_check(const PositiveProblem& problem, const Vector& p, double beta);

/// All certificate constants at (beta, rho). Requires rho*beta < 1.
CertificationReport certification_constants(const PositiveProblem& problem, const Vector& p,
                                            double beta, double rho);

struct ValueEnvelopeResult {
  bool holds = false;
  double lower_margin = 0.0;  ///< min_i (p_t - alpha_hat*p)_i
  double upper_margin = 0.0;  ///< min_i (p/alpha_check - p_t)_i
  CertificationReport report;
};

/// Two-sided envelope check alpha_hat*p <= p_t <= p/alpha_check with 1e-9
/// slack. Throws HypothesisError when rho*beta >= 1.
ValueEnvelopeResult value_envelope_bounds(const Vector& p, const Vector& p_t, double beta, double rho);

/// Deployed-gain inequality: theta*p - s >= A^T p + K_t^T (r + B^T p)
/// elementwise with 1e-9 slack. Throws HypothesisError when rho*beta >= 1.
bool gain_certificate_inequality(const PositiveProblem& problem, const Vector& p,
                                 const GainMatrix& K_t, double beta, double rho);

/// Largest gamma in (0, 1] with
///   gamma*(s - Ebar^T|r|) <= (s - Ebar^T|r|) - (1/alpha_check - 1
///       + rho*beta*(1 + beta*||A + |B| Ebar||_1))*beta*s
/// elementwise, or empty when no positive gamma exists (certificate vacuous
/// at this rho).
std::optional<double> cost_bound_gamma(const PositiveProblem& problem, const Vector& p,
                                       double beta, double rho);

/// One recorded controller step: state, applied input, the feasible
/// exploration deviation (u - planned K(t)x), and the disturbance.
struct StepSample {
  Vector x;
  Vector u;
  Vector eps_effect;
  Vector w;
};

struct CostBoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Accumulated-cost certificate over trajectory[t0..end]:
///   sum s^T x + r^T(u - eps_effect) <= (p^T x_{t0} + sum beta*s^T|B*eps_effect + w|)/gamma
/// with relative slack 1e-9.
CostBoundResult input_cost_bound(const std::vector<StepSample>& trajectory,
                                      const PositiveProblem& problem, const Vector& p,
                                      double beta, double gamma, std::size_t t0);

}  // namespace posctrl
