#include "posctrl/problem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <sstream>

namespace posctrl {

std::vector<int> PositiveProblem::block_offsets() const {
  std::vector<int> offsets(partition.size() + 1, 0);
  std::partial_sum(partition.begin(), partition.end(), offsets.begin() + 1);
  return offsets;
}

void check_dimensions(const PositiveProblem& problem) {
  const auto n = problem.A.rows();
  if (problem.A.cols() != n)
    throw DimensionError("A must be square, got " + std::to_string(n) + "x" +
                         std::to_string(problem.A.cols()));
  if (problem.B.rows() != n)
    throw DimensionError("B must have n rows");
  if (problem.E.rows() != n || problem.E.cols() != n)
    throw DimensionError("E must be n x n");
  if (problem.s.size() != n)
    throw DimensionError("s must have length n");
  if (problem.r.size() != problem.B.cols())
    throw DimensionError("r must have length m = cols(B)");
  if (static_cast<Eigen::Index>(problem.partition.size()) != n)
    throw DimensionError("partition must have n entries");
  long long total = 0;
  for (int mi : problem.partition) {
    if (mi < 0) throw DimensionError("partition entries must be >= 0");
    total += mi;
  }
  if (total != problem.B.cols())
    throw DimensionError("partition must sum to m = cols(B)");
  auto finite = [](const auto& M) { return M.allFinite(); };
  if (!finite(problem.A) || !finite(problem.B) || !finite(problem.E) ||
      !finite(problem.s) || !finite(problem.r))
    throw DimensionError("problem data must be finite");
}

namespace {

AssumptionCheck check_nonnegative_data(const PositiveProblem& problem) {
  auto offending = [](const char* name, Eigen::Index i, Eigen::Index j, double v) {
    std::ostringstream os;
    os << name << "(" << i << "," << j << ") = " << v << " is negative";
    return os.str();
  };
  for (Eigen::Index i = 0; i < problem.E.rows(); ++i)
    for (Eigen::Index j = 0; j < problem.E.cols(); ++j)
      if (problem.E(i, j) < 0.0) return {false, offending("E", i, j, problem.E(i, j))};
  for (Eigen::Index i = 0; i < problem.s.size(); ++i)
    if (problem.s(i) < 0.0) return {false, offending("s", i, 0, problem.s(i))};
  for (Eigen::Index i = 0; i < problem.r.size(); ++i)
    if (problem.r(i) < 0.0) return {false, offending("r", i, 0, problem.r(i))};
  return {true, ""};
}

AssumptionCheck check_closed_loop_positive(const PositiveProblem& problem,
                                           std::size_t cap) {
  for (const GainMatrix& gain : enumerate_gains(problem, cap)) {
    Matrix closed_loop = problem.A + problem.B * gain.K;
    for (Eigen::Index a = 0; a < closed_loop.rows(); ++a) {
      for (Eigen::Index b = 0; b < closed_loop.cols(); ++b) {
        if (closed_loop(a, b) < 0.0) {
          std::ostringstream os;
          os << "(A+BK)(" << a << "," << b << ") = " << closed_loop(a, b)
             << " < 0 for selector (";
          for (std::size_t i = 0; i < gain.selector.size(); ++i)
            os << (i ? "," : "") << gain.selector[i];
          os << ")";
          return {false, os.str()};
        }
      }
    }
  }
  return {true, ""};
}

AssumptionCheck check_budget_margin(const PositiveProblem& problem, double margin) {
  const Vector gap = problem.s - extended_constraint(problem).transpose() * problem.r;
  for (Eigen::Index i = 0; i < gap.size(); ++i) {
    if (!(gap(i) >= margin)) {
      std::ostringstream os;
      os << "(s - Ebar^T r)(" << i << ") = " << gap(i) << " < margin " << margin;
      return {false, os.str()};
    }
  }
  return {true, ""};
}

}  // namespace

ValidationReport validate(const PositiveProblem& problem, std::size_t enumeration_cap) {
  check_dimensions(problem);
  ValidationReport report;
  report.nonnegative_data = check_nonnegative_data(problem);
  report.closed_loop_positive = check_closed_loop_positive(problem, enumeration_cap);
  report.budget_margin = check_budget_margin(problem, 1e-12);
  return report;
}

Matrix extended_constraint(const PositiveProblem& problem) {
  const int n = problem.n();
  const int m = problem.m();
  Matrix ebar = Matrix::Zero(m, n);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < problem.partition[i]; ++j)
      ebar.row(row++) = problem.E.row(i);
  }
  return ebar;
}

GainMatrix make_gain(const PositiveProblem& problem, const std::vector<int>& selector) {
  if (static_cast<int>(selector.size()) != problem.n())
    throw DimensionError("selector must have n entries");
  GainMatrix gain;
  gain.K = Matrix::Zero(problem.m(), problem.n());
  gain.selector = selector;
  const auto offsets = problem.block_offsets();
  for (int i = 0; i < problem.n(); ++i) {
    const int choice = selector[i];
    if (choice == -1) continue;
    if (choice < 0 || choice >= problem.partition[i])
      throw DimensionError("selector[" + std::to_string(i) + "] out of range");
    gain.K.row(offsets[i] + choice) = problem.E.row(i);
  }
  return gain;
}

bool is_feasible_gain(const PositiveProblem& problem, const GainMatrix& gain,
                      double tol) {
  if (gain.K.rows() != problem.m() || gain.K.cols() != problem.n()) return false;
  if (static_cast<int>(gain.selector.size()) != problem.n()) return false;
  const auto offsets = problem.block_offsets();
  for (int i = 0; i < problem.n(); ++i) {
    const int choice = gain.selector[i];
    if (choice < -1 || choice >= problem.partition[i]) return false;
    for (int j = 0; j < problem.partition[i]; ++j) {
      const Vector expected = (choice == j) ? Vector(problem.E.row(i).transpose())
                                            : Vector(Vector::Zero(problem.n()));
      if (((gain.K.row(offsets[i] + j).transpose() - expected).cwiseAbs().maxCoeff()) > tol)
        return false;
    }
  }
  return true;
}

std::size_t gain_count(const PositiveProblem& problem, std::size_t cap) {
  std::size_t count = 1;
  for (int mi : problem.partition) {
    count *= static_cast<std::size_t>(mi) + 1;
    if (count > cap) return cap + 1;
  }
  return count;
}

std::vector<GainMatrix> enumerate_gains(const PositiveProblem& problem, std::size_t cap) {
  check_dimensions(problem);
  const std::size_t count = gain_count(problem, cap);
  if (count > cap)
    throw SolverError(SolverFailure::TooManyGains,
                      "gain set exceeds enumeration cap of " + std::to_string(cap));
  std::vector<GainMatrix> gains;
  gains.reserve(count);
  std::vector<int> selector(problem.partition.size(), -1);
  while (true) {
    gains.push_back(make_gain(problem, selector));
    // Lexicographic increment, last block fastest: -1 -> 0 -> ... -> m_i - 1.
    int i = problem.n() - 1;
    for (; i >= 0; --i) {
      if (selector[i] + 1 < problem.partition[i]) {
        ++selector[i];
        break;
      }
      selector[i] = -1;
    }
    if (i < 0) break;
  }
  return gains;
}

GainMatrix random_gain(const PositiveProblem& problem, Rng& rng) {
  std::vector<int> selector(problem.partition.size());
  for (std::size_t i = 0; i < selector.size(); ++i)
    selector[i] = uniform_int(rng, -1, problem.partition[i] - 1);
  return make_gain(problem, selector);
}

GainMatrix random_gain(const PositiveProblem& problem, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return random_gain(problem, rng);
}

bool is_feasible_input(const PositiveProblem& problem, const Vector& x,
                       const Vector& u, double slack) {
  if (u.size() != problem.m() || x.size() != problem.n()) return false;
  if ((u.array() < -slack).any()) return false;
  const auto offsets = problem.block_offsets();
  for (int i = 0; i < problem.n(); ++i) {
    const double budget = problem.E.row(i).dot(x);
    const double used = u.segment(offsets[i], problem.partition[i]).sum();
    if (used > budget + slack) return false;
  }
  return true;
}

double spectral_radius(const Matrix& M) {
  if (M.rows() == 0) return 0.0;
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const Matrix& M, double threshold) {
  return spectral_radius(M) < threshold;
}

}  // namespace posctrl
