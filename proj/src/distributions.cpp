#include "drci/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drci {

namespace {

// Slack used when comparing a probability level against accumulated masses;
// sums of rationals such as 1/3 + 1/6 do not land exactly on 1/2.
constexpr double kLevelTol = 1e-12;

}  // namespace

WeightedEcdf WeightedEcdf::from_samples(std::span<const double> values,
                                        std::span<const double> weights) {
  if (values.empty()) throw std::invalid_argument("ecdf: empty input");
  if (values.size() != weights.size())
    throw std::invalid_argument("ecdf: values and weights differ in length");

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw std::invalid_argument("ecdf: non-finite value");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw std::invalid_argument("ecdf: negative or non-finite weight");
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("ecdf: zero total weight");

  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  WeightedEcdf out;
  out.atoms_.reserve(values.size());
  out.weights_.reserve(values.size());
  for (std::size_t idx : order) {
    const double w = weights[idx] / total;
    if (!out.atoms_.empty() && out.atoms_.back() == values[idx]) {
      out.weights_.back() += w;
    } else {
      out.atoms_.push_back(values[idx]);
      out.weights_.push_back(w);
    }
  }

  // Drop atoms that carry no mass; they are not jump points.
  std::size_t keep = 0;
  for (std::size_t i = 0; i < out.atoms_.size(); ++i) {
    if (out.weights_[i] > 0.0) {
      out.atoms_[keep] = out.atoms_[i];
      out.weights_[keep] = out.weights_[i];
      ++keep;
    }
  }
  out.atoms_.resize(keep);
  out.weights_.resize(keep);

  out.cumulative_.resize(keep);
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    acc += out.weights_[i];
    out.cumulative_[i] = acc;
  }
  out.cumulative_.back() = 1.0;
  return out;
}

WeightedEcdf WeightedEcdf::uniform(std::span<const double> values) {
  std::vector<double> w(values.size(), 1.0);
  return from_samples(values, w);
}

double WeightedEcdf::cdf(double y) const noexcept {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), y);
  if (it == atoms_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double WeightedEcdf::mass_at(double y) const noexcept {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), y);
  if (it == atoms_.end() || *it != y) return 0.0;
  return weights_[static_cast<std::size_t>(it - atoms_.begin())];
}

double WeightedEcdf::quantile(double p) const noexcept {
  if (p <= 0.0) return atoms_.front();
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), p - kLevelTol);
  if (it == cumulative_.end()) return atoms_.back();
  return atoms_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double WeightedEcdf::mean() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) m += atoms_[i] * weights_[i];
  return m;
}

namespace {

// sup_y |F(y) - G(y)| where G places weights `gw` on sorted points `gx`.
double ks_on_points(const WeightedEcdf& f, std::span<const double> gx,
                    std::span<const double> gw) {
  const auto fx = f.atoms();
  const auto fw = f.weights();
  std::size_t i = 0, j = 0;
  double fc = 0.0, gc = 0.0, best = 0.0;
  while (i < fx.size() || j < gx.size()) {
    double y;
    if (j == gx.size() || (i < fx.size() && fx[i] <= gx[j])) {
      y = fx[i];
    } else {
      y = gx[j];
    }
    while (i < fx.size() && fx[i] == y) fc += fw[i++];
    while (j < gx.size() && gx[j] == y) gc += gw[j++];
    best = std::max(best, std::abs(fc - gc));
  }
  return std::min(best, 1.0);
}

}  // namespace

double ks(const WeightedEcdf& f, const WeightedEcdf& g) {
  return ks_on_points(f, g.atoms(), g.weights());
}

double shifted_ks(const WeightedEcdf& f, const WeightedEcdf& g, double shift) {
  std::vector<double> moved(g.atoms().begin(), g.atoms().end());
  for (double& x : moved) x -= shift;
  return ks_on_points(f, moved, g.weights());
}

ShiftGrid shift_grid(std::span<const double> values, int m) {
  if (values.empty()) throw std::invalid_argument("shift_grid: empty input");
  if (m < 1) throw std::invalid_argument("shift_grid: m must be positive");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  ShiftGrid grid;
  grid.origin = *lo;
  const double range = std::abs(*hi - *lo);
  if (range == 0.0) {
    grid.m = 0;
    grid.shifts = {0.0};
    return grid;
  }
  grid.m = m;
  grid.c0 = -range;
  grid.step = range / m;
  grid.shifts.resize(static_cast<std::size_t>(2 * m + 1));
  for (int j = 0; j <= 2 * m; ++j) {
    // Integer offset from the centre keeps the grid exactly symmetric.
    grid.shifts[static_cast<std::size_t>(j)] = (j - m) * grid.step;
  }
  return grid;
}

double grid_ks_at(const WeightedEcdf& f, const WeightedEcdf& g,
                  const ShiftGrid& grid, std::size_t shift_index) {
  const int points = 2 * grid.m + 1;
  const double c = grid.shifts.at(shift_index);
  double best = 0.0;
  for (int k = 0; k < points; ++k) {
    const double y = grid.origin + k * grid.step;
    best = std::max(best, std::abs(f.cdf(y) - g.cdf(y + c)));
  }
  return best;
}

namespace {

bool prefer_shift(double candidate, double incumbent) {
  const double a = std::abs(candidate), b = std::abs(incumbent);
  if (a != b) return a < b;
  return candidate < incumbent;
}

}  // namespace

ShiftedKs min_shift_ks(const WeightedEcdf& f, const WeightedEcdf& g,
                       const ShiftGrid& grid, KsMode mode) {
  ShiftedKs best{2.0, 0.0};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double c = grid.shifts[j];
    const double d = mode == KsMode::grid ? grid_ks_at(f, g, grid, j)
                                          : shifted_ks(f, g, c);
    if (d < best.distance || (d == best.distance && prefer_shift(c, best.shift))) {
      best = {d, c};
    }
  }
  return best;
}

double d0(const WeightedEcdf& f, const WeightedEcdf& g, D0Regime regime) {
  const auto fx = f.atoms(), fw = f.weights();
  const auto gx = g.atoms(), gw = g.weights();
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < fx.size() || j < gx.size()) {
    double jump_f = 0.0, jump_g = 0.0;
    if (j == gx.size() || (i < fx.size() && fx[i] < gx[j])) {
      jump_f = fw[i++];
    } else if (i == fx.size() || gx[j] < fx[i]) {
      jump_g = gw[j++];
    } else {
      jump_f = fw[i++];
      jump_g = gw[j++];
    }
    const double diff = jump_f - jump_g;
    best = std::max(best, regime == D0Regime::gamma_ge_2 ? std::abs(diff)
                                                        : std::max(diff, 0.0));
  }
  return best;
}

WeightedEcdf cic_target_cdf(const WeightedEcdf& f_b1, const WeightedEcdf& f_b0,
                            const WeightedEcdf& f_00) {
  const auto atoms = f_00.atoms();
  std::vector<double> masses(atoms.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double level = 1.0;
    if (i + 1 < atoms.size()) {
      level = f_b1.cdf(f_b0.quantile(f_00.cdf(atoms[i])));
      level = std::max(level, prev);
    }
    masses[i] = level - prev;
    prev = level;
  }
  return WeightedEcdf::from_samples(atoms, masses);
}

}  // namespace drci
