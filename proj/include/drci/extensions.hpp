#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "drci/dataset.hpp"
#include "drci/distributions.hpp"
#include "drci/dro.hpp"

namespace drci {

/// Shift-grid resolution used for the IV extension when none is given.
/// Each z-subproblem enumerates (2m+1)^2 shift pairs.
inline constexpr int kDefaultIvShiftResolution = 20;

struct DidTargets {
  double mu_b1 = 0.0;  // baseline mean, treated
  double mu_00 = 0.0;  // endline mean, control
  double mu_b0 = 0.0;  // baseline mean, control
  double target_mean() const noexcept { return mu_b1 + mu_00 - mu_b0; }
};

/// Throws std::invalid_argument when the dataset has no baselines.
DidTargets did_targets(const Dataset& data);

/// Mean of the changes-in-changes counterfactual built from the uniform
/// baseline and control-endline ECDFs.
double cic_target_mean(const Dataset& data);

/// Distributional bound with |sum w_i Y_i - target| <= config.epsilon added at
/// every shift. An infinite epsilon leaves the plain distributional bound.
BoundResult did_att_bound(const Dataset& data, const SensitivityConfig& config);
BoundResult cic_att_bound(const Dataset& data, const SensitivityConfig& config);

struct IvStrata {
  /// units[t][z]: dataset indices with T = t and Z = z.
  std::array<std::array<std::vector<std::size_t>, 2>, 2> units;
  std::array<std::array<std::size_t, 2>, 2> count{};
  std::array<std::array<double, 2>, 2> proportion{};
  /// treated_ecdf[z]: uniform ECDF of the treated outcomes with Z = z.
  std::vector<WeightedEcdf> treated_ecdf;

  /// Throws std::invalid_argument without an instrument or with an empty stratum.
  explicit IvStrata(const Dataset& data);
};

/// Instrumental-variable bound. For each z the counterfactual of the treated
/// units with Z = z is a weighting of the controls with Z = z; a second
/// weighting of the controls with Z = 1 - z must stay within KS distance
/// delta of the same treated ECDF (each at its own shift) and within
/// config.epsilon of the first in mean. The two z-problems are solved
/// separately and combined with weights p_{1z}/p_1.
/// Reported weights are the resulting mixture over all controls.
BoundResult iv_att_bound(const Dataset& data, const SensitivityConfig& config);

}  // namespace drci
