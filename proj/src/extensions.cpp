#include "drci/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "detail.hpp"

namespace drci {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_baseline(const Dataset& data) {
  if (!data.has_baseline()) throw std::invalid_argument("dataset has no baseline outcomes");
}

BoundResult mean_pinned_bound(const Dataset& data, const SensitivityConfig& config,
                              double target) {
  config.validate();
  if (std::isinf(config.epsilon)) return distributional_att_bound(data, config);
  WeightConstraint pin;
  pin.coeffs = data.outcomes(0);
  pin.lo = target - config.epsilon;
  pin.hi = target + config.epsilon;
  return distributional_att_bound(data, config, std::span<const WeightConstraint>(&pin, 1));
}

}  // namespace

DidTargets did_targets(const Dataset& data) {
  require_baseline(data);
  DidTargets t;
  t.mu_b1 = mean_of(data.baselines(1));
  t.mu_b0 = mean_of(data.baselines(0));
  t.mu_00 = data.mean_outcome(0);
  return t;
}

double cic_target_mean(const Dataset& data) {
  require_baseline(data);
  const auto b1 = data.baselines(1);
  const auto b0 = data.baselines(0);
  const auto y0 = data.outcomes(0);
  return cic_target_cdf(WeightedEcdf::uniform(b1), WeightedEcdf::uniform(b0),
                        WeightedEcdf::uniform(y0))
      .mean();
}

BoundResult did_att_bound(const Dataset& data, const SensitivityConfig& config) {
  return mean_pinned_bound(data, config, did_targets(data).target_mean());
}

BoundResult cic_att_bound(const Dataset& data, const SensitivityConfig& config) {
  return mean_pinned_bound(data, config, cic_target_mean(data));
}

IvStrata::IvStrata(const Dataset& data) {
  if (!data.has_instrument()) throw std::invalid_argument("iv: dataset has no instrument");
  for (int t = 0; t < 2; ++t) {
    for (int z = 0; z < 2; ++z) {
      units[t][z] = data.stratum(t, z);
      count[t][z] = units[t][z].size();
      if (count[t][z] == 0) {
        throw std::invalid_argument("iv: stratum T=" + std::to_string(t) +
                                    ", Z=" + std::to_string(z) + " is empty");
      }
      proportion[t][z] = static_cast<double>(count[t][z]) / static_cast<double>(data.n());
    }
  }
  for (int z = 0; z < 2; ++z) {
    std::vector<double> y;
    for (std::size_t i : units[1][z]) y.push_back(data[i].y);
    treated_ecdf.push_back(WeightedEcdf::uniform(y));
  }
}

namespace {

// Weighting of one control stratum matched to a treated ECDF.
struct StratumSide {
  detail::WeightedSample sample;
  double cap;
  std::vector<std::vector<detail::PrefixRange>> ranges;  // per shift
};

StratumSide make_side(const Dataset& data, const std::vector<std::size_t>& units,
                      const WeightedEcdf& target, const ShiftGrid& grid,
                      const SensitivityConfig& config) {
  std::vector<double> y;
  for (std::size_t i : units) y.push_back(data[i].y);
  StratumSide side{detail::WeightedSample(std::move(y)),
                   config.gamma / static_cast<double>(units.size()),
                   {}};
  side.ranges.reserve(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    side.ranges.push_back(detail::ks_prefix_ranges(side.sample, target, grid, j, config.ks_mode));
  return side;
}

std::optional<LpSolution> side_lp(const StratumSide& side, std::size_t shift_index,
                                  double delta, Sense sense, double mean_lo, double mean_hi) {
  LpProblem lp;
  lp.sense = sense;
  for (double y : side.sample.values) lp.add_variable(y, 0.0, side.cap);
  lp.add_equal(std::vector<double>(lp.num_vars(), 1.0), 1.0);
  if (!detail::add_ks_rows(lp, 0, side.sample, side.ranges[shift_index], delta, side.cap))
    return std::nullopt;
  if (mean_lo > -kInf || mean_hi < kInf)
    detail::add_range_rows(lp, 0, side.sample.values, mean_lo, mean_hi);
  auto sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) return std::nullopt;
  return sol;
}

struct Interval {
  double lo, hi;
};

// Values of mu(w) reachable by the Z = 1 - z weighting, widened by epsilon
// and merged into disjoint intervals.
std::vector<Interval> coupling_intervals(const StratumSide& other, std::size_t shifts,
                                         const SensitivityConfig& config) {
  std::vector<std::optional<Interval>> per_shift(shifts);
  if (std::isinf(config.epsilon)) {
    for (std::size_t j = 0; j < shifts; ++j) {
      if (side_lp(other, j, config.delta, Sense::minimize, -kInf, kInf))
        return {{-kInf, kInf}};
    }
    return {};
  }
  detail::parallel_for(shifts, config.threads, [&](std::size_t j) {
    const auto lo = side_lp(other, j, config.delta, Sense::minimize, -kInf, kInf);
    if (!lo) return;
    const auto hi = side_lp(other, j, config.delta, Sense::maximize, -kInf, kInf);
    if (!hi) return;
    per_shift[j] = Interval{lo->objective_value - config.epsilon,
                            hi->objective_value + config.epsilon};
  });
  std::vector<Interval> all;
  for (const auto& iv : per_shift)
    if (iv) all.push_back(*iv);
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& iv : all) {
    if (!merged.empty() && iv.lo <= merged.back().hi)
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    else
      merged.push_back(iv);
  }
  return merged;
}

struct SideOptimum {
  std::vector<double> weights;
  double mean;
};

std::optional<SideOptimum> solve_z(const Dataset& data, const IvStrata& strata, int z,
                                   const ShiftGrid& grid, const SensitivityConfig& config) {
  const auto& target = strata.treated_ecdf[static_cast<std::size_t>(z)];
  const StratumSide own = make_side(data, strata.units[0][z], target, grid, config);
  const StratumSide other = make_side(data, strata.units[0][1 - z], target, grid, config);

  const auto intervals = coupling_intervals(other, grid.size(), config);
  if (intervals.empty()) return std::nullopt;

  const bool maximize = config.direction == Direction::lower;
  const Sense sense = maximize ? Sense::maximize : Sense::minimize;
  std::vector<std::optional<LpSolution>> best(grid.size());
  detail::parallel_for(grid.size(), config.threads, [&](std::size_t j) {
    for (const auto& iv : intervals) {
      auto sol = side_lp(own, j, config.delta, sense, iv.lo, iv.hi);
      if (!sol) continue;
      if (!best[j] || (maximize ? sol->objective_value > best[j]->objective_value
                                : sol->objective_value < best[j]->objective_value))
        best[j] = std::move(sol);
    }
  });

  std::optional<std::size_t> pick;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!best[j]) continue;
    if (!pick || detail::better_candidate(best[j]->objective_value, grid.shifts[j],
                                          best[*pick]->objective_value, grid.shifts[*pick],
                                          maximize))
      pick = j;
  }
  if (!pick) return std::nullopt;
  return SideOptimum{best[*pick]->x, best[*pick]->objective_value};
}

}  // namespace

BoundResult iv_att_bound(const Dataset& data, const SensitivityConfig& config) {
  config.validate();
  const IvStrata strata(data);
  const auto grid = shift_grid(data.all_outcomes(), config.m);

  BoundResult r;
  r.direction = config.direction;
  for (int t = 0; t < 2; ++t)
    for (int z = 0; z < 2; ++z)
      if (strata.count[t][z] < 2)
        r.warnings.push_back("stratum T=" + std::to_string(t) + ", Z=" + std::to_string(z) +
                             " has fewer than 2 units; the bound may be very conservative");

  const auto& controls = data.control_indices();
  std::vector<std::size_t> position(data.n(), 0);
  for (std::size_t k = 0; k < controls.size(); ++k) position[controls[k]] = k;

  std::vector<double> mixture(controls.size(), 0.0);
  const double n1 = static_cast<double>(data.n1());
  for (int z = 0; z < 2; ++z) {
    const auto side = solve_z(data, strata, z, grid, config);
    if (!side) {
      r.status = BoundStatus::infeasible;
      r.estimate = r.se = r.treated_mean = r.counterfactual_mean = r.objective =
          std::numeric_limits<double>::quiet_NaN();
      r.units.clear();
      r.weights.clear();
      return r;
    }
    const double share = static_cast<double>(strata.count[1][z]) / n1;
    const auto& own = strata.units[0][z];
    for (std::size_t k = 0; k < own.size(); ++k) mixture[position[own[k]]] += share * side->weights[k];
  }
  auto warnings = std::move(r.warnings);
  detail::finish_att(r, data, std::move(mixture), data.mean_outcome(1));
  r.warnings = std::move(warnings);
  r.objective = r.counterfactual_mean;
  return r;
}

}  // namespace drci
