#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drci/dataset.hpp"
#include "drci/distributions.hpp"
#include "drci/lp.hpp"

namespace drci {

/// `lower` bounds the effect from below, i.e. pushes the counterfactual mean
/// up; `upper` the reverse.
enum class Direction { lower, upper };
enum class Model { marginal, distributional, tv };

/// Lower limit on each control weight in the marginal model.
///   odds_ratio: 1/(gamma*n0), the odds-ratio form of the marginal model.
///   zero:       0, sharing the distributional model's weight box.
enum class MarginalFloor { odds_ratio, zero };

enum class BoundStatus { optimal, infeasible };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(Model m) noexcept;
std::string_view to_string(BoundStatus s) noexcept;
std::string_view to_string(KsMode k) noexcept;
Direction parse_direction(std::string_view s);
Model parse_model(std::string_view s);
KsMode parse_ks_mode(std::string_view s);

inline constexpr int kDefaultShiftResolution = 50;

struct SensitivityConfig {
  double gamma = 1.0;
  double delta = 1.0;
  /// Mean-difference slack for the DiD/CIC/IV extensions; infinity disables.
  double epsilon = kInf;
  double lambda_tv = 0.0;
  int m = kDefaultShiftResolution;
  /// Lagrangian weight on the covariate L1 imbalance.
  double balance_lambda = 0.0;
  /// Hard cap on the covariate L1 imbalance.
  std::optional<double> balance_epsilon;
  Direction direction = Direction::lower;
  KsMode ks_mode = KsMode::grid;
  MarginalFloor marginal_floor = MarginalFloor::odds_ratio;
  /// Worker threads for independent per-shift solves (0 = hardware).
  unsigned threads = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct BoundResult {
  /// treated_mean - counterfactual_mean. For the ATC the roles are the
  /// Y(1) side (reweighted treated outcomes) and the Y(0) side (observed
  /// control outcomes) respectively.
  double estimate = 0.0;
  Direction direction = Direction::lower;
  BoundStatus status = BoundStatus::infeasible;
  /// Dataset indices of the reweighted units and their weights (sum 1).
  std::vector<std::size_t> units;
  std::vector<double> weights;
  std::optional<double> active_shift;
  /// Fixed-weight standard error; NaN when the observed arm has < 2 units.
  double se = 0.0;
  double treated_mean = 0.0;
  double counterfactual_mean = 0.0;
  /// Value of the optimized objective including any balance penalty.
  double objective = 0.0;
  std::vector<std::string> warnings;
};

/// Covariate-balance augmentation. For every covariate j an auxiliary
/// variable s_j >= |mean_treated(X_j) - sum_i w_i X_ij| is added; the
/// objective is penalized by lambda * sum_j s_j (signed to worsen a `sense`
/// objective) and, when `epsilon` is set, sum_j s_j <= epsilon is imposed.
/// Weight variable k of `lp` multiplies unit `weight_units[k]`.
/// Returns the indices of the auxiliary variables.
std::vector<std::size_t> add_balance_terms(LpProblem& lp, const Dataset& data,
                                           std::span<const std::size_t> weight_units,
                                           double lambda, std::optional<double> epsilon);

/// Marginal sensitivity model: optimum of sum_i w_i Y_i over the control
/// weight box with sum w = 1. Closed-form greedy unless balance terms are
/// configured, in which case the LP is solved.
BoundResult marginal_att_bound(const Dataset& data, double gamma, Direction direction,
                               MarginalFloor floor = MarginalFloor::odds_ratio);
BoundResult marginal_att_bound(const Dataset& data, const SensitivityConfig& config);

/// Total-variation ball of radius lambda_tv around the uniform control
/// weights.
BoundResult tv_att_bound(const Dataset& data, double lambda_tv, Direction direction);
BoundResult tv_att_bound(const Dataset& data, const SensitivityConfig& config);

/// Extra linear restriction on the control-weight vector, lo <= a.w <= hi,
/// with `a` indexed like Dataset::control_indices().
struct WeightConstraint {
  std::vector<double> coeffs;
  double lo = -kInf;
  double hi = kInf;
};

/// Distributional sensitivity model solved by enumerating the active shift:
/// one LP per grid shift, best objective over feasible shifts.
BoundResult distributional_att_bound(const Dataset& data, const SensitivityConfig& config);

/// As above with additional constraints applied at every shift.
BoundResult distributional_att_bound(const Dataset& data, const SensitivityConfig& config,
                                     std::span<const WeightConstraint> extra);

/// Smallest KS distance (after the best shift) achievable by any weight
/// vector in the box [0, gamma/n0]. The distributional model is feasible
/// exactly when this is <= delta.
ShiftedKs minimal_achievable_ks(const Dataset& data, const SensitivityConfig& config);

BoundResult att_bound(const Dataset& data, Model model, const SensitivityConfig& config);

/// ATC by relabeling: the lower ATC bound is the negated upper ATT bound on
/// the label-swapped data (and vice versa).
BoundResult atc_bound(const Dataset& data, Model model, const SensitivityConfig& config);

/// sqrt(s1^2/n1 + sum_i w_i^2 (Y_i - mu_w)^2) with s1^2 the unbiased
/// variance of the unweighted arm and mu_w the weighted mean.
/// `observed_arm` is the unweighted arm (1 for the ATT).
/// Throws when that arm has fewer than two units.
double conditional_se(const Dataset& data, std::span<const std::size_t> units,
                      std::span<const double> weights, int observed_arm = 1);

}  // namespace drci
