#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace drci {

struct Unit {
  double y = 0.0;
  int t = 0;
  std::optional<double> y_b;  // baseline (pre-treatment) outcome
  std::optional<int> z;       // binary instrument / encouragement
  std::vector<double> x;      // covariates
};

/// Validated sample of units. Construction enforces: at least one treated and
/// one control unit, binary treatment and instrument, a common covariate
/// dimension, and baselines/instruments either on every unit or on none.
class Dataset {
 public:
  explicit Dataset(std::vector<Unit> units);

  const std::vector<Unit>& units() const noexcept { return units_; }
  const Unit& operator[](std::size_t i) const { return units_[i]; }
  std::size_t n() const noexcept { return units_.size(); }
  std::size_t n1() const noexcept { return treated_.size(); }
  std::size_t n0() const noexcept { return control_.size(); }
  std::size_t covariate_dim() const noexcept { return dim_; }
  bool has_baseline() const noexcept { return has_baseline_; }
  bool has_instrument() const noexcept { return has_instrument_; }

  /// Unit indices of the treated / control arm, in input order.
  const std::vector<std::size_t>& treated_indices() const noexcept { return treated_; }
  const std::vector<std::size_t>& control_indices() const noexcept { return control_; }

  std::vector<double> outcomes(int arm) const;
  std::vector<double> baselines(int arm) const;
  std::vector<double> all_outcomes() const;
  double mean_outcome(int arm) const;

  /// Units with T = t and Z = z (requires an instrument).
  std::vector<std::size_t> stratum(int t, int z) const;
  std::size_t stratum_count(int t, int z) const { return stratum(t, z).size(); }
  double stratum_proportion(int t, int z) const {
    return static_cast<double>(stratum_count(t, z)) / static_cast<double>(n());
  }

  /// Same units with treatment labels flipped.
  Dataset swapped_treatment() const;

 private:
  std::vector<Unit> units_;
  std::vector<std::size_t> treated_;
  std::vector<std::size_t> control_;
  std::size_t dim_ = 0;
  bool has_baseline_ = false;
  bool has_instrument_ = false;
};

}  // namespace drci
