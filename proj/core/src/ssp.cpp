#include "posctrl/ssp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "posctrl/dp.hpp"
#include "posctrl/errors.hpp"

namespace posctrl {

namespace {

/// Shortest decimal string that parses back to exactly x.
std::string shortest_decimal(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Parses a plain decimal (optionally with exponent) into mantissa * 10^exp.
/// Returns false when the mantissa would not fit into 18 digits.
bool parse_decimal(const std::string& text, long long& mant, int& exp) {
  const char* s = text.c_str();
  bool negative = false;
  if (*s == '+' || *s == '-') negative = (*s++ == '-');
  long long digits = 0;
  int ndigits = 0, frac_digits = 0;
  bool seen_point = false, seen_digit = false;
  for (; *s != '\0' && *s != 'e' && *s != 'E'; ++s) {
    if (*s == '.') {
      if (seen_point) return false;
      seen_point = true;
      continue;
    }
    if (*s < '0' || *s > '9') return false;
    seen_digit = true;
    if (++ndigits > 18) return false;
    digits = digits * 10 + (*s - '0');
    if (seen_point) ++frac_digits;
  }
  if (!seen_digit) return false;
  int e10 = 0;
  if (*s == 'e' || *s == 'E') {
    char* end = nullptr;
    const long parsed = std::strtol(s + 1, &end, 10);
    if (end == s + 1 || *end != '\0' || parsed < -400 || parsed > 400) return false;
    e10 = static_cast<int>(parsed);
  }
  mant = negative ? -digits : digits;
  exp = e10 - frac_digits;
  return true;
}

/// Subtracts two doubles as the decimal numbers they print as. Binary
/// subtraction of short decimals leaves artifacts (0.7 - 0.4 != 0.3); when
/// both operands round-trip through short decimal forms, the difference is
/// computed exactly in decimal and re-rounded once, so converted instances
/// match their printed constants digit for digit. Falls back to plain
/// subtraction otherwise.
double decimal_sub(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return a - b;
  long long ma = 0, mb = 0;
  int ea = 0, eb = 0;
  if (!parse_decimal(shortest_decimal(a), ma, ea) ||
      !parse_decimal(shortest_decimal(b), mb, eb))
    return a - b;
  const int common = std::min(ea, eb);
  if (ea - common > 18 || eb - common > 18) return a - b;
  __int128 sa = ma, sb = mb;
  for (int k = 0; k < ea - common; ++k) sa *= 10;
  for (int k = 0; k < eb - common; ++k) sb *= 10;
  const __int128 diff = sa - sb;
  if (diff > std::numeric_limits<long long>::max() ||
      diff < std::numeric_limits<long long>::min())
    return a - b;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lldE%d", static_cast<long long>(diff), common);
  return std::strtod(buf, nullptr);
}

}  // namespace

void validate_ssp(const SspInstance& ssp) {
  if (ssp.T.size() < 2) throw DimensionError("SSP needs at least one transient state and a goal");
  if (ssp.c.size() != ssp.T.size())
    throw DimensionError("SSP cost list length must match transition list length");
  const int n = ssp.n_states();
  for (int i = 0; i <= n; ++i) {
    const Matrix& t = ssp.T[i];
    if (t.rows() != n + 1)
      throw DimensionError("transition matrix of state " + std::to_string(i + 1) +
                           " must have one row per state (goal last)");
    if (t.cols() < 1)
      throw DimensionError("state " + std::to_string(i + 1) + " needs at least one action");
    if (ssp.c[i].size() != t.cols())
      throw DimensionError("cost row of state " + std::to_string(i + 1) +
                           " must have one entry per action");
    for (int a = 0; a < t.cols(); ++a) {
      if ((t.col(a).array() < 0.0).any())
        throw std::invalid_argument("negative transition probability in state " +
                                    std::to_string(i + 1));
      if (std::abs(t.col(a).sum() - 1.0) > 1e-12)
        throw std::invalid_argument("transition column of state " + std::to_string(i + 1) +
                                    ", action " + std::to_string(a + 1) + " does not sum to 1");
    }
    if ((ssp.c[i].array() < 0.0).any())
      throw std::invalid_argument("negative stage cost in state " + std::to_string(i + 1));
  }
  // The goal must absorb with zero cost under every action.
  const Matrix& goal_t = ssp.T[n];
  for (int a = 0; a < goal_t.cols(); ++a) {
    if (std::abs(goal_t(n, a) - 1.0) > 1e-12)
      throw std::invalid_argument("goal state is not absorbing");
    if (ssp.c[n](a) != 0.0) throw std::invalid_argument("goal state has nonzero cost");
  }
  if (ssp.i_init < 0 || ssp.i_init >= n)
    throw DimensionError("initial state out of range");
}

SspConversion convert_detailed(const SspInstance& ssp) {
  validate_ssp(ssp);
  const int n = ssp.n_states();

  SspConversion out;
  out.reference_action.resize(n);
  out.block_actions.resize(n);

  int m = 0;
  std::vector<int> partition(n);
  for (int i = 0; i < n; ++i) {
    int ref = 0;
    for (int a = 1; a < ssp.actions(i); ++a)
      if (ssp.c[i](a) < ssp.c[i](ref)) ref = a;  // ties keep the lowest index
    out.reference_action[i] = ref;
    partition[i] = ssp.actions(i) - 1;
    m += partition[i];
  }

  PositiveProblem& pb = out.problem;
  pb.A.resize(n, n);
  pb.B.resize(n, m);
  pb.E = Matrix::Identity(n, n);
  pb.s.resize(n);
  pb.r.resize(m);
  pb.partition = partition;

  int col = 0;
  for (int i = 0; i < n; ++i) {
    const int ref = out.reference_action[i];
    pb.A.col(i) = ssp.T[i].topRows(n).col(ref);
    pb.s(i) = ssp.c[i](ref);
    for (int a = 0; a < ssp.actions(i); ++a) {
      if (a == ref) continue;
      const double gap = decimal_sub(ssp.c[i](a), ssp.c[i](ref));
      if (gap < 0.0)
        throw std::invalid_argument("negative cost gap in state " + std::to_string(i + 1));
      pb.r(col) = gap;
      for (int row = 0; row < n; ++row)
        pb.B(row, col) = decimal_sub(ssp.T[i](row, a), ssp.T[i](row, ref));
      out.block_actions[i].push_back(a);
      ++col;
    }
  }
  check_dimensions(pb);
  return out;
}

PositiveProblem convert(const SspInstance& ssp) { return convert_detailed(ssp).problem; }

std::pair<int, double> ssp_step(const SspInstance& ssp, int state, int action, Rng& rng) {
  if (state < 0 || state > ssp.n_states()) throw DimensionError("ssp_step: state out of range");
  if (action < 0 || action >= ssp.actions(state))
    throw DimensionError("ssp_step: action out of range");
  const double draw = uniform_real(rng, 0.0, 1.0);
  const Matrix& t = ssp.T[state];
  double cum = 0.0;
  int next = ssp.goal();
  for (int row = 0; row <= ssp.n_states(); ++row) {
    cum += t(row, action);
    if (draw < cum) {
      next = row;
      break;
    }
  }
  return {next, ssp.c[state](action)};
}

QTable make_qtable(const SspInstance& ssp) {
  QTable table;
  table.values.reserve(ssp.T.size());
  table.visits.reserve(ssp.T.size());
  for (std::size_t i = 0; i < ssp.T.size(); ++i) {
    table.values.push_back(Vector::Zero(ssp.T[i].cols()));
    table.visits.emplace_back(ssp.T[i].cols(), 0);
  }
  return table;
}

void q_learning_update(QTable& table, const SspInstance& ssp, int state, int action,
                       double cost, int next_state, const QLearningRule& rule) {
  long& visits = table.visits[state][action];
  const double eta = rule.eta0 / std::pow(1.0 + static_cast<double>(visits), rule.omega);
  ++visits;
  if (state == ssp.goal()) return;  // goal row stays zero
  const double target = cost + table.values[next_state].minCoeff();
  double& q = table.values[state](action);
  q = (1.0 - eta) * q + eta * target;
}

int greedy_action(const QTable& table, int state) {
  const Vector& row = table.values[state];
  int best = 0;
  for (int a = 1; a < row.size(); ++a)
    if (row(a) < row(best)) best = a;
  return best;
}

SspSolution exact_ssp_value(const SspInstance& ssp, double tol) {
  validate_ssp(ssp);
  const int n = ssp.n_states();
  Vector v = Vector::Zero(n + 1);
  const int max_iter = 100000;
  // From the zero start the iterates grow monotonically: a solvable instance
  // shows geometrically shrinking increments, while one with an inescapable
  // costly cycle keeps accumulating cost at a steady rate. Comparing the
  // increment across widely spaced checkpoints tells the two apart long
  // before the magnitude guard would trip on linear growth.
  constexpr int kCheckpoint = 2000;
  double checkpoint_diff = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_iter; ++k) {
    Vector next = Vector::Zero(n + 1);
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < ssp.actions(i); ++a)
        best = std::min(best, ssp.c[i](a) + ssp.T[i].col(a).dot(v));
      next(i) = best;
    }
    const double diff = (next - v).cwiseAbs().maxCoeff();
    if (next.cwiseAbs().maxCoeff() > 1e12)
      throw SolverError(SolverFailure::InfiniteValue,
                        "SSP value iteration diverged; no proper policy reaches the goal");
    if (k % kCheckpoint == 0) {
      if (diff > tol && diff > 0.5 * checkpoint_diff)
        throw SolverError(SolverFailure::InfiniteValue,
                          "SSP value iteration keeps accumulating cost; "
                          "no proper policy reaches the goal");
      checkpoint_diff = diff;
    }
    v = std::move(next);
    if (diff <= tol) {
      SspSolution out;
      out.values = v;
      out.policy.resize(n);
      for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_value = ssp.c[i](0) + ssp.T[i].col(0).dot(v);
        for (int a = 1; a < ssp.actions(i); ++a) {
          const double value = ssp.c[i](a) + ssp.T[i].col(a).dot(v);
          if (value < best_value) {
            best_value = value;
            best = a;
          }
        }
        out.policy[i] = best;
      }
      out.iterations = k;
      out.residual = diff;
      return out;
    }
  }
  throw NoConvergenceError("SSP value iteration hit the iteration cap", v);
}

}  // namespace posctrl
