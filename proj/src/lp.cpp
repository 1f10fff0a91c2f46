#include "drci/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drci {

std::string_view to_string(LpStatus status) noexcept {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

std::size_t LpProblem::add_variable(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  for (auto& row : less_equal) row.coeffs.resize(objective.size(), 0.0);
  for (auto& row : equal) row.coeffs.resize(objective.size(), 0.0);
  return objective.size() - 1;
}

void LpProblem::add_less_equal(std::vector<double> coeffs, double rhs) {
  coeffs.resize(std::max(coeffs.size(), num_vars()), 0.0);
  less_equal.push_back({std::move(coeffs), rhs});
}

void LpProblem::add_greater_equal(std::vector<double> coeffs, double rhs) {
  for (double& a : coeffs) a = -a;
  add_less_equal(std::move(coeffs), -rhs);
}

void LpProblem::add_equal(std::vector<double> coeffs, double rhs) {
  coeffs.resize(std::max(coeffs.size(), num_vars()), 0.0);
  equal.push_back({std::move(coeffs), rhs});
}

LpResiduals residuals(const LpProblem& problem, const std::vector<double>& x) {
  LpResiduals r;
  const auto dot = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * x[j];
    return s;
  };
  for (const auto& row : problem.less_equal)
    r.max_row_violation = std::max(r.max_row_violation, dot(row.coeffs) - row.rhs);
  for (const auto& row : problem.equal)
    r.max_row_violation = std::max(r.max_row_violation, std::abs(dot(row.coeffs) - row.rhs));
  for (std::size_t j = 0; j < x.size(); ++j) {
    r.max_bound_violation = std::max(r.max_bound_violation, problem.lower[j] - x[j]);
    r.max_bound_violation = std::max(r.max_bound_violation, x[j] - problem.upper[j]);
  }
  return r;
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kTieTol = 1e-12;

void validate(const LpProblem& p) {
  const std::size_t n = p.num_vars();
  if (p.lower.size() != n || p.upper.size() != n)
    throw std::invalid_argument("solve_lp: bound vectors do not match variable count");
  const auto check_row = [n](const LpRow& row) {
    if (row.coeffs.size() != n)
      throw std::invalid_argument("solve_lp: row length does not match variable count");
    if (std::isnan(row.rhs)) throw std::invalid_argument("solve_lp: NaN right-hand side");
    for (double a : row.coeffs)
      if (!std::isfinite(a)) throw std::invalid_argument("solve_lp: non-finite coefficient");
  };
  for (const auto& row : p.less_equal) check_row(row);
  for (const auto& row : p.equal) check_row(row);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(p.objective[j]))
      throw std::invalid_argument("solve_lp: non-finite objective coefficient");
    if (std::isnan(p.lower[j]) || std::isnan(p.upper[j]) || p.lower[j] == kInf ||
        p.upper[j] == -kInf)
      throw std::invalid_argument("solve_lp: invalid variable bound");
  }
}

// x_orig = offset + sign * x'[pos] - (neg >= 0 ? x'[neg] : 0)
struct VarMap {
  double offset = 0.0;
  double sign = 1.0;
  std::size_t pos = 0;
  std::ptrdiff_t neg = -1;
};

// Working state of one solve: every column lives in [0, upper_[j]].
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), tab_(rows * cols, 0.0), beta_(rows, 0.0),
        upper_(cols, kInf), cost_(cols, 0.0), reduced_(cols, 0.0),
        basis_(rows, 0), is_basic_(cols, 0), at_upper_(cols, 0), blocked_(cols, 0) {}

  double& at(std::size_t i, std::size_t j) { return tab_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return tab_[i * n_ + j]; }

  std::size_t m_, n_;
  std::vector<double> tab_;
  std::vector<double> beta_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  std::vector<double> reduced_;
  std::vector<std::size_t> basis_;
  std::vector<char> is_basic_;
  std::vector<char> at_upper_;
  std::vector<char> blocked_;

  void price_from_costs() {
    reduced_ = cost_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &tab_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) reduced_[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i) reduced_[basis_[i]] = 0.0;
  }

  double value(std::size_t j) const {
    if (is_basic_[j]) {
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] == j) return beta_[i];
    }
    return at_upper_[j] ? upper_[j] : 0.0;
  }

  void pivot(std::size_t r, std::size_t q) {
    double* prow = &tab_[r * n_];
    const double inv = 1.0 / prow[q];
    for (std::size_t j = 0; j < n_; ++j) prow[j] *= inv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[i * n_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double f = reduced_[q];
    if (f != 0.0) {
      for (std::size_t j = 0; j < n_; ++j) reduced_[j] -= f * prow[j];
    }
    reduced_[q] = 0.0;
  }

  enum class Outcome { optimal, unbounded, iteration_limit };

  Outcome run(const LpOptions& opt, std::size_t& iterations) {
    bool bland = opt.bland_only;
    std::size_t degenerate_run = 0;
    while (iterations < opt.max_iterations) {
      // Entering column.
      std::ptrdiff_t q = -1;
      double best = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (is_basic_[j] || blocked_[j] || upper_[j] == 0.0) continue;
        const double d = reduced_[j];
        double score;
        if (!at_upper_[j] && d < -opt.optimality_tol) {
          score = -d;
        } else if (at_upper_[j] && d > opt.optimality_tol) {
          score = d;
        } else {
          continue;
        }
        if (bland) {
          q = static_cast<std::ptrdiff_t>(j);
          break;
        }
        if (score > best) {
          best = score;
          q = static_cast<std::ptrdiff_t>(j);
        }
      }
      if (q < 0) return Outcome::optimal;
      ++iterations;
      const auto qc = static_cast<std::size_t>(q);
      const double dir = at_upper_[qc] ? -1.0 : 1.0;

      // Ratio test; the entering column's own range is the first candidate.
      double step = upper_[qc];
      std::ptrdiff_t r = -1;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = dir * at(i, qc);
        double limit;
        if (alpha > kPivotTol) {
          limit = std::max(beta_[i], 0.0) / alpha;
        } else if (alpha < -kPivotTol) {
          const double ub = upper_[basis_[i]];
          if (ub == kInf) continue;
          limit = std::max(ub - beta_[i], 0.0) / -alpha;
        } else {
          continue;
        }
        if (limit < step - kTieTol) {
          step = limit;
          r = static_cast<std::ptrdiff_t>(i);
        } else if (r >= 0 && limit <= step + kTieTol &&
                   basis_[i] < basis_[static_cast<std::size_t>(r)]) {
          step = std::min(step, limit);
          r = static_cast<std::ptrdiff_t>(i);
        }
      }
      if (step == kInf) return Outcome::unbounded;

      for (std::size_t i = 0; i < m_; ++i) beta_[i] -= dir * at(i, qc) * step;

      if (step <= opt.feasibility_tol) {
        if (++degenerate_run > opt.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
      }

      if (r < 0) {
        at_upper_[qc] = !at_upper_[qc];
        continue;
      }
      const auto rr = static_cast<std::size_t>(r);
      const std::size_t leaving = basis_[rr];
      const double alpha = dir * at(rr, qc);
      at_upper_[leaving] = alpha < 0.0 ? 1 : 0;
      is_basic_[leaving] = 0;
      beta_[rr] = at_upper_[qc] ? upper_[qc] - step : step;
      at_upper_[qc] = 0;
      is_basic_[qc] = 1;
      basis_[rr] = qc;
      pivot(rr, qc);
    }
    return Outcome::iteration_limit;
  }
};

// Gaussian elimination with partial pivoting; returns false when singular.
bool solve_dense(std::vector<double> a, std::vector<double>& b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
    if (std::abs(a[p * n + k]) < 1e-14) return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k * n + j] * b[j];
    b[k] = s / a[k * n + k];
  }
  return true;
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  validate(problem);
  const std::size_t n = problem.num_vars();
  LpSolution sol;

  for (std::size_t j = 0; j < n; ++j) {
    if (problem.lower[j] > problem.upper[j]) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
  }

  // Map each original variable onto nonnegative columns.
  std::vector<VarMap> maps(n);
  std::vector<double> col_upper;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = problem.lower[j], hi = problem.upper[j];
    VarMap& vm = maps[j];
    vm.pos = col_upper.size();
    if (lo > -kInf) {
      vm.offset = lo;
      col_upper.push_back(hi - lo);
    } else if (hi < kInf) {
      vm.offset = hi;
      vm.sign = -1.0;
      col_upper.push_back(kInf);
    } else {
      col_upper.push_back(kInf);
      vm.neg = static_cast<std::ptrdiff_t>(col_upper.size());
      col_upper.push_back(kInf);
    }
  }
  const std::size_t structural = col_upper.size();
  const std::size_t n_le = problem.less_equal.size();
  const std::size_t n_eq = problem.equal.size();
  const std::size_t m = n_le + n_eq;

  // Transformed rows: A' x' (+ slack) = b'.
  std::vector<double> arow(m * structural, 0.0);
  std::vector<double> rhs(m, 0.0);
  const auto load_row = [&](std::size_t i, const LpRow& row) {
    double b = row.rhs;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = row.coeffs[j];
      if (a == 0.0) continue;
      const VarMap& vm = maps[j];
      b -= a * vm.offset;
      arow[i * structural + vm.pos] += a * vm.sign;
      if (vm.neg >= 0) arow[i * structural + static_cast<std::size_t>(vm.neg)] -= a;
    }
    rhs[i] = b;
  };
  for (std::size_t i = 0; i < n_le; ++i) load_row(i, problem.less_equal[i]);
  for (std::size_t i = 0; i < n_eq; ++i) load_row(n_le + i, problem.equal[i]);

  // Columns: structural | slacks (one per <= row) | artificials (as needed).
  std::vector<double> row_sign(m, 1.0);
  std::vector<std::ptrdiff_t> artificial_of(m, -1);
  std::size_t cols = structural + n_le;
  for (std::size_t i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) row_sign[i] = -1.0;
    const bool slack_basic = i < n_le && row_sign[i] > 0.0;
    if (!slack_basic) artificial_of[i] = static_cast<std::ptrdiff_t>(cols++);
  }

  Tableau t(m, cols);
  std::vector<double> full(m * cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = &full[i * cols];
    for (std::size_t j = 0; j < structural; ++j) row[j] = row_sign[i] * arow[i * structural + j];
    if (i < n_le) row[structural + i] = row_sign[i];
    if (artificial_of[i] >= 0) row[static_cast<std::size_t>(artificial_of[i])] = 1.0;
    t.beta_[i] = row_sign[i] * rhs[i];
    const std::size_t b = artificial_of[i] >= 0 ? static_cast<std::size_t>(artificial_of[i])
                                                : structural + i;
    t.basis_[i] = b;
    t.is_basic_[b] = 1;
  }
  t.tab_ = full;
  for (std::size_t j = 0; j < structural; ++j) t.upper_[j] = col_upper[j];

  double rhs_scale = 1.0;
  for (double b : rhs) rhs_scale = std::max(rhs_scale, std::abs(b));

  // Phase 1: drive artificials to zero.
  bool any_artificial = false;
  for (std::size_t i = 0; i < m; ++i) {
    if (artificial_of[i] >= 0) {
      t.cost_[static_cast<std::size_t>(artificial_of[i])] = 1.0;
      any_artificial = true;
    }
  }
  if (any_artificial) {
    t.price_from_costs();
    t.run(options, sol.iterations);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.cost_[t.basis_[i]] == 1.0) infeas = std::max(infeas, t.beta_[i]);
    if (infeas > options.feasibility_tol * rhs_scale) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (artificial_of[i] >= 0) {
        const auto a = static_cast<std::size_t>(artificial_of[i]);
        t.upper_[a] = 0.0;
        t.blocked_[a] = 1;
        t.at_upper_[a] = 0;
      }
    }
  }

  // Phase 2: original objective, expressed in minimization form.
  std::fill(t.cost_.begin(), t.cost_.end(), 0.0);
  const double flip = problem.sense == Sense::maximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const VarMap& vm = maps[j];
    t.cost_[vm.pos] += flip * problem.objective[j] * vm.sign;
    if (vm.neg >= 0) t.cost_[static_cast<std::size_t>(vm.neg)] -= flip * problem.objective[j];
  }
  t.price_from_costs();
  const auto outcome = t.run(options, sol.iterations);
  if (outcome == Tableau::Outcome::unbounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }
  if (outcome == Tableau::Outcome::iteration_limit)
    throw std::runtime_error("solve_lp: iteration limit reached");

  const auto reconstruct = [&](const std::vector<double>& colval) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) {
      const VarMap& vm = maps[j];
      double v = vm.offset + vm.sign * colval[vm.pos];
      if (vm.neg >= 0) v -= colval[static_cast<std::size_t>(vm.neg)];
      x[j] = v;
    }
    return x;
  };
  std::vector<double> colval(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    if (!t.is_basic_[j]) colval[j] = t.at_upper_[j] ? t.upper_[j] : 0.0;
  }
  for (std::size_t i = 0; i < m; ++i) colval[t.basis_[i]] = t.beta_[i];
  for (std::size_t j = 0; j < cols; ++j) {
    if (colval[j] < 0.0 && colval[j] > -options.feasibility_tol) colval[j] = 0.0;
    if (colval[j] > t.upper_[j] && colval[j] < t.upper_[j] + options.feasibility_tol)
      colval[j] = t.upper_[j];
  }
  sol.x = reconstruct(colval);

  // Recover basic values from the original columns if drift crept in.
  auto res = residuals(problem, sol.x);
  if (m > 0 && (res.max_row_violation > options.feasibility_tol ||
                res.max_bound_violation > options.feasibility_tol)) {
    std::vector<double> basis_mat(m * m, 0.0);
    std::vector<double> b(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = row_sign[i] * rhs[i];
      for (std::size_t j = 0; j < cols; ++j)
        if (!t.is_basic_[j]) s -= full[i * cols + j] * colval[j];
      b[i] = s;
      for (std::size_t k = 0; k < m; ++k) basis_mat[i * m + k] = full[i * cols + t.basis_[k]];
    }
    if (solve_dense(std::move(basis_mat), b, m)) {
      for (std::size_t k = 0; k < m; ++k)
        colval[t.basis_[k]] = std::clamp(b[k], 0.0, t.upper_[t.basis_[k]]);
      sol.x = reconstruct(colval);
    }
  }

  sol.status = LpStatus::optimal;
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += problem.objective[j] * sol.x[j];
  sol.objective_value = obj;
  return sol;
}

}  // namespace drci
