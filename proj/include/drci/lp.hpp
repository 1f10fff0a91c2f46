#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace drci {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };
enum class LpStatus { optimal, infeasible, unbounded };

std::string_view to_string(LpStatus status) noexcept;

struct LpRow {
  std::vector<double> coeffs;
  double rhs = 0.0;
};

/// Dense linear program:
///   optimize  c.x
///   s.t.      a.x <= b   (each `less_equal` row)
///             e.x  = f   (each `equal` row)
///             lower <= x <= upper
///
/// Rows added before a variable are zero-padded when the variable is added,
/// so problems can be assembled incrementally.
struct LpProblem {
  Sense sense = Sense::minimize;
  std::vector<double> objective;
  std::vector<LpRow> less_equal;
  std::vector<LpRow> equal;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_vars() const noexcept { return objective.size(); }

  /// Appends a variable and returns its index.
  std::size_t add_variable(double cost, double lo, double hi);
  void add_less_equal(std::vector<double> coeffs, double rhs);
  void add_greater_equal(std::vector<double> coeffs, double rhs);
  void add_equal(std::vector<double> coeffs, double rhs);
};

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> x;
  double objective_value = 0.0;
  std::size_t iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  /// Consecutive degenerate pivots tolerated under largest-coefficient
  /// pricing before switching to Bland's rule for the rest of the solve.
  std::size_t degenerate_switch = 32;
  /// Use Bland's rule from the first pivot.
  bool bland_only = false;
  std::size_t max_iterations = 200000;
};

/// Residual measures used to certify a solution against its problem.
struct LpResiduals {
  double max_row_violation = 0.0;
  double max_bound_violation = 0.0;
};

LpResiduals residuals(const LpProblem& problem, const std::vector<double>& x);

/// Two-phase bounded-variable primal simplex on a dense tableau. Pricing is
/// largest reduced cost with lowest-index tie-break, falling back to Bland's
/// rule on degenerate stalls. Deterministic for identical input.
///
/// Throws std::invalid_argument on dimension mismatch or NaN data.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

}  // namespace drci
