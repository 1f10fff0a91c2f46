#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drci {

/// Right-continuous step CDF placing nonnegative mass on a strictly increasing
/// set of atoms. Every observed and reweighted outcome distribution in the
/// library is carried by one of these.
class WeightedEcdf {
 public:
  /// Sorts, merges duplicate values (summing their weights), drops zero-mass
  /// atoms and renormalizes to total mass 1.
  ///
  /// Throws std::invalid_argument on empty input, mismatched lengths,
  /// negative or non-finite weights, non-finite values, or zero total weight.
  static WeightedEcdf from_samples(std::span<const double> values,
                                   std::span<const double> weights);

  /// Equal weight on every value.
  static WeightedEcdf uniform(std::span<const double> values);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// F(y) = total mass on atoms <= y.
  double cdf(double y) const noexcept;
  double operator()(double y) const noexcept { return cdf(y); }

  /// Point mass at y (0 when y is not an atom).
  double mass_at(double y) const noexcept;

  /// Generalized inverse inf{y : F(y) >= p}. p is clamped to [0, 1]; p <= 0
  /// returns the smallest atom.
  double quantile(double p) const noexcept;

  double mean() const noexcept;
  double min() const noexcept { return atoms_.front(); }
  double max() const noexcept { return atoms_.back(); }

 private:
  WeightedEcdf() = default;

  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;  // cumulative_[i] = F(atoms_[i])
};

/// Convenience wrapper matching the free-function naming of the other
/// operations.
inline WeightedEcdf ecdf(std::span<const double> values,
                         std::span<const double> weights) {
  return WeightedEcdf::from_samples(values, weights);
}

/// Kolmogorov-Smirnov distance sup_y |F(y) - G(y)|, evaluated on the union of
/// atoms.
double ks(const WeightedEcdf& f, const WeightedEcdf& g);

/// KS(F(y), G(y + shift)).
double shifted_ks(const WeightedEcdf& f, const WeightedEcdf& g, double shift);

/// Discretized location-shift set {c0 + j*step : j = 0..2m} with
/// c0 = -(max - min) and step = (max - min) / m. `origin` is the smallest
/// value of the sample the grid was built from; it anchors the
/// double-grid KS evaluation.
struct ShiftGrid {
  double origin = 0.0;
  double c0 = 0.0;
  double step = 0.0;
  int m = 0;
  std::vector<double> shifts;

  std::size_t size() const noexcept { return shifts.size(); }
};

/// Builds the grid from the range of `values`. All-equal values produce the
/// single-shift grid {0} with m = 0.
ShiftGrid shift_grid(std::span<const double> values, int m);

enum class KsMode { grid, exact_atoms };

struct ShiftedKs {
  double distance = 0.0;
  double shift = 0.0;
};

/// KS distance between F and G after the best location shift of G.
///
/// In `grid` mode F is read at origin + k*step and G at
/// origin + c + k*step for k = 0..2m. In `exact_atoms` mode each shift is
/// evaluated exactly on F's atoms united with G's atoms translated by -c.
/// Ties go to the shift of smallest magnitude, then to the smaller shift.
ShiftedKs min_shift_ks(const WeightedEcdf& f, const WeightedEcdf& g,
                       const ShiftGrid& grid, KsMode mode);

/// KS for one grid shift index in grid mode.
double grid_ks_at(const WeightedEcdf& f, const WeightedEcdf& g,
                  const ShiftGrid& grid, std::size_t shift_index);

enum class D0Regime { gamma_ge_2, gamma_lt_2 };

inline D0Regime d0_regime(double gamma) noexcept {
  return gamma >= 2.0 ? D0Regime::gamma_ge_2 : D0Regime::gamma_lt_2;
}

/// Jump-difference distance: max over jump points of |jF - jG| (metric
/// regime) or max(jF - jG, 0) (quasimetric regime).
double d0(const WeightedEcdf& f, const WeightedEcdf& g, D0Regime regime);

/// Changes-in-changes counterfactual y -> F_b1(F_b0^{-1}(F_00(y))) carried
/// on the atoms of F_00. Any mass F_b1 places above the top of F_b0 is
/// assigned to the largest F_00 atom.
WeightedEcdf cic_target_cdf(const WeightedEcdf& f_b1, const WeightedEcdf& f_b0,
                            const WeightedEcdf& f_00);

}  // namespace drci
