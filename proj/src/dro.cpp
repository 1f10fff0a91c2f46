#include "drci/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "detail.hpp"

namespace drci {

std::string_view to_string(Direction d) noexcept {
  return d == Direction::lower ? "lower" : "upper";
}

std::string_view to_string(Model m) noexcept {
  switch (m) {
    case Model::marginal: return "marginal";
    case Model::distributional: return "distributional";
    case Model::tv: return "tv";
  }
  return "unknown";
}

std::string_view to_string(BoundStatus s) noexcept {
  return s == BoundStatus::optimal ? "optimal" : "infeasible";
}

std::string_view to_string(KsMode k) noexcept {
  return k == KsMode::grid ? "grid" : "exact_atoms";
}

Direction parse_direction(std::string_view s) {
  if (s == "lower") return Direction::lower;
  if (s == "upper") return Direction::upper;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

Model parse_model(std::string_view s) {
  if (s == "marginal") return Model::marginal;
  if (s == "distributional") return Model::distributional;
  if (s == "tv") return Model::tv;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

KsMode parse_ks_mode(std::string_view s) {
  if (s == "grid") return KsMode::grid;
  if (s == "exact_atoms" || s == "exact") return KsMode::exact_atoms;
  throw std::invalid_argument("unknown ks mode '" + std::string(s) + "'");
}

void SensitivityConfig::validate() const {
  if (!(gamma >= 1.0) || !std::isfinite(gamma))
    throw std::invalid_argument("gamma must be a finite value >= 1");
  if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(lambda_tv >= 0.0 && lambda_tv <= 1.0))
    throw std::invalid_argument("lambda_tv must lie in [0, 1]");
  if (m < 1) throw std::invalid_argument("m must be a positive integer");
  if (!(balance_lambda >= 0.0) || !std::isfinite(balance_lambda))
    throw std::invalid_argument("balance lambda must be >= 0");
  if (balance_epsilon && !(*balance_epsilon >= 0.0))
    throw std::invalid_argument("balance epsilon must be >= 0");
}

namespace detail {

WeightedSample::WeightedSample(std::vector<double> v) : values(std::move(v)) {
  order.resize(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  sorted.reserve(values.size());
  for (std::size_t k : order) sorted.push_back(values[k]);
}

std::vector<PrefixRange> ks_prefix_ranges(const WeightedSample& sample,
                                          const WeightedEcdf& target,
                                          const ShiftGrid& grid, std::size_t shift_index,
                                          KsMode mode) {
  const std::size_t n = sample.sorted.size();
  std::vector<double> gmin(n + 1, std::numeric_limits<double>::infinity());
  std::vector<double> gmax(n + 1, -std::numeric_limits<double>::infinity());
  const auto record = [&](double y, double g) {
    const auto p = static_cast<std::size_t>(
        std::upper_bound(sample.sorted.begin(), sample.sorted.end(), y) - sample.sorted.begin());
    gmin[p] = std::min(gmin[p], g);
    gmax[p] = std::max(gmax[p], g);
  };
  const double c = grid.shifts.at(shift_index);

  if (mode == KsMode::grid) {
    const int points = 2 * grid.m + 1;
    for (int k = 0; k < points; ++k) {
      const double y = grid.origin + k * grid.step;
      record(y, target.cdf(y + c));
    }
  } else {
    // Target read as G(y + c): its atoms move to atom - c.
    const auto atoms = target.atoms();
    const auto w = target.weights();
    std::vector<double> moved(atoms.size());
    std::vector<double> cum(atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      moved[i] = atoms[i] - c;
      acc += w[i];
      cum[i] = acc;
    }
    if (!cum.empty()) cum.back() = 1.0;
    const auto shifted_cdf = [&](double y) {
      const auto it = std::upper_bound(moved.begin(), moved.end(), y);
      return it == moved.begin() ? 0.0 : cum[static_cast<std::size_t>(it - moved.begin()) - 1];
    };
    for (double y : sample.sorted) record(y, shifted_cdf(y));
    for (double y : moved) record(y, shifted_cdf(y));
  }

  std::vector<PrefixRange> out;
  for (std::size_t p = 0; p <= n; ++p) {
    if (gmin[p] <= gmax[p]) out.push_back({p, gmin[p], gmax[p]});
  }
  return out;
}

bool add_ks_rows(LpProblem& lp, std::size_t offset, const WeightedSample& sample,
                 std::span<const PrefixRange> ranges, double delta, double cap) {
  constexpr double tol = 1e-12;
  const std::size_t n = sample.sorted.size();
  for (const auto& r : ranges) {
    const double lo = r.g_max - delta;
    const double hi = r.g_min + delta;
    const double p = static_cast<double>(r.prefix);
    // Prefix mass attainable from the weight box and the simplex alone.
    const double reach_hi = std::min(1.0, p * cap);
    const double reach_lo = std::max(0.0, 1.0 - (static_cast<double>(n) - p) * cap);
    if (lo > reach_hi + tol || hi < reach_lo - tol || lo > hi + tol) return false;
    if (r.prefix == 0 || r.prefix == n) continue;
    std::vector<double> coeffs(lp.num_vars(), 0.0);
    for (std::size_t k = 0; k < r.prefix; ++k) coeffs[offset + sample.order[k]] = 1.0;
    if (lo > reach_lo + tol && hi < reach_hi - tol) {
      lp.add_less_equal(coeffs, hi);
      lp.add_greater_equal(std::move(coeffs), lo);
    } else if (lo > reach_lo + tol) {
      lp.add_greater_equal(std::move(coeffs), lo);
    } else if (hi < reach_hi - tol) {
      lp.add_less_equal(std::move(coeffs), hi);
    }
  }
  return true;
}

void add_range_rows(LpProblem& lp, std::size_t offset, std::span<const double> coeffs,
                    double lo, double hi) {
  std::vector<double> row(lp.num_vars(), 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) row[offset + k] = coeffs[k];
  if (lo == hi) {
    lp.add_equal(std::move(row), lo);
    return;
  }
  if (hi < kInf) lp.add_less_equal(row, hi);
  if (lo > -kInf) lp.add_greater_equal(std::move(row), lo);
}

bool better_candidate(double candidate_obj, double candidate_shift, double incumbent_obj,
                      double incumbent_shift, bool maximize) {
  const double tol = 1e-10 * std::max(1.0, std::abs(incumbent_obj));
  const double gain = maximize ? candidate_obj - incumbent_obj : incumbent_obj - candidate_obj;
  if (gain > tol) return true;
  if (gain < -tol) return false;
  const double a = std::abs(candidate_shift), b = std::abs(incumbent_shift);
  if (a != b) return a < b;
  return candidate_shift < incumbent_shift;
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void finish_att(BoundResult& r, const Dataset& data, std::vector<double> weights,
                double treated_mean) {
  const auto& controls = data.control_indices();
  double cf = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) cf += weights[k] * data[controls[k]].y;
  r.units = controls;
  r.weights = std::move(weights);
  r.treated_mean = treated_mean;
  r.counterfactual_mean = cf;
  r.estimate = treated_mean - cf;
  r.status = BoundStatus::optimal;
  r.se = data.n1() >= 2 ? conditional_se(data, r.units, r.weights, 1)
                        : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

namespace {

bool balance_requested(const SensitivityConfig& c) {
  return c.balance_lambda > 0.0 || c.balance_epsilon.has_value();
}

// Weight columns 0..n0-1 over the controls, sum to one, objective on the
// control outcomes, optional balance terms.
LpProblem weight_problem(const Dataset& data, double lo, double hi, Direction direction,
                         const SensitivityConfig* balance) {
  LpProblem lp;
  lp.sense = direction == Direction::lower ? Sense::maximize : Sense::minimize;
  for (std::size_t i : data.control_indices()) lp.add_variable(data[i].y, lo, hi);
  lp.add_equal(std::vector<double>(lp.num_vars(), 1.0), 1.0);
  if (balance && balance_requested(*balance)) {
    add_balance_terms(lp, data, data.control_indices(), balance->balance_lambda,
                      balance->balance_epsilon);
  }
  return lp;
}

std::vector<double> head(const std::vector<double>& x, std::size_t n) {
  return {x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)};
}

BoundResult infeasible_result(Direction direction) {
  BoundResult r;
  r.direction = direction;
  r.status = BoundStatus::infeasible;
  r.estimate = std::numeric_limits<double>::quiet_NaN();
  r.se = std::numeric_limits<double>::quiet_NaN();
  r.treated_mean = std::numeric_limits<double>::quiet_NaN();
  r.counterfactual_mean = std::numeric_limits<double>::quiet_NaN();
  r.objective = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

std::vector<std::size_t> add_balance_terms(LpProblem& lp, const Dataset& data,
                                           std::span<const std::size_t> weight_units,
                                           double lambda, std::optional<double> epsilon) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("balance: lambda must be >= 0");
  if (epsilon && !(*epsilon >= 0.0)) throw std::invalid_argument("balance: epsilon must be >= 0");
  const std::size_t dim = data.covariate_dim();
  if (dim == 0) throw std::invalid_argument("balance: dataset has no covariates");
  if (weight_units.size() > lp.num_vars())
    throw std::invalid_argument("balance: more weight units than LP columns");

  std::vector<double> treated_mean(dim, 0.0);
  for (std::size_t i : data.treated_indices())
    for (std::size_t j = 0; j < dim; ++j) treated_mean[j] += data[i].x[j];
  for (double& v : treated_mean) v /= static_cast<double>(data.n1());

  // The penalty always works against the optimization direction.
  const double cost = lp.sense == Sense::maximize ? -lambda : lambda;
  std::vector<std::size_t> aux;
  aux.reserve(dim);
  for (std::size_t j = 0; j < dim; ++j) aux.push_back(lp.add_variable(cost, 0.0, kInf));

  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> row(lp.num_vars(), 0.0);
    for (std::size_t k = 0; k < weight_units.size(); ++k) row[k] = data[weight_units[k]].x[j];
    // sum w x - s <= mean  and  -sum w x - s <= -mean
    std::vector<double> neg(row.size());
    std::transform(row.begin(), row.end(), neg.begin(), [](double v) { return -v; });
    row[aux[j]] = -1.0;
    neg[aux[j]] = -1.0;
    lp.add_less_equal(std::move(row), treated_mean[j]);
    lp.add_less_equal(std::move(neg), -treated_mean[j]);
  }
  if (epsilon) {
    std::vector<double> row(lp.num_vars(), 0.0);
    for (std::size_t a : aux) row[a] = 1.0;
    lp.add_less_equal(std::move(row), *epsilon);
  }
  return aux;
}

double conditional_se(const Dataset& data, std::span<const std::size_t> units,
                      std::span<const double> weights, int observed_arm) {
  if (units.size() != weights.size())
    throw std::invalid_argument("conditional_se: units and weights differ in length");
  const auto observed = data.outcomes(observed_arm);
  if (observed.size() < 2)
    throw std::invalid_argument("conditional_se: observed arm needs at least two units");
  const double n1 = static_cast<double>(observed.size());
  const double mean1 = std::accumulate(observed.begin(), observed.end(), 0.0) / n1;
  double ss = 0.0;
  for (double y : observed) ss += (y - mean1) * (y - mean1);
  const double var1 = ss / (n1 - 1.0);

  double mu = 0.0;
  for (std::size_t k = 0; k < units.size(); ++k) mu += weights[k] * data[units[k]].y;
  double term = 0.0;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const double d = data[units[k]].y - mu;
    term += weights[k] * weights[k] * d * d;
  }
  return std::sqrt(var1 / n1 + term);
}

BoundResult marginal_att_bound(const Dataset& data, double gamma, Direction direction,
                               MarginalFloor floor) {
  SensitivityConfig c;
  c.gamma = gamma;
  c.direction = direction;
  c.marginal_floor = floor;
  return marginal_att_bound(data, c);
}

BoundResult marginal_att_bound(const Dataset& data, const SensitivityConfig& config) {
  config.validate();
  const std::size_t n0 = data.n0();
  const double nd = static_cast<double>(n0);
  const double hi = config.gamma / nd;
  const double lo = config.marginal_floor == MarginalFloor::odds_ratio ? 1.0 / (config.gamma * nd)
                                                                       : 0.0;
  BoundResult r;
  r.direction = config.direction;

  std::vector<double> w;
  if (balance_requested(config)) {
    const auto lp = weight_problem(data, lo, hi, config.direction, &config);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) return infeasible_result(config.direction);
    w = head(sol.x, n0);
    r.objective = sol.objective_value;
  } else {
    // Greedy: every weight at the floor, then the spare mass saturates the
    // largest (lower bound) or smallest (upper bound) outcomes first.
    detail::WeightedSample sample(data.outcomes(0));
    w.assign(n0, lo);
    double spare = 1.0 - nd * lo;
    for (std::size_t step = 0; step < n0 && spare > 0.0; ++step) {
      const std::size_t k = config.direction == Direction::lower ? n0 - 1 - step : step;
      const double add = std::min(hi - lo, spare);
      w[sample.order[k]] += add;
      spare -= add;
    }
  }
  detail::finish_att(r, data, std::move(w), data.mean_outcome(1));
  if (!balance_requested(config)) r.objective = r.counterfactual_mean;
  return r;
}

BoundResult tv_att_bound(const Dataset& data, double lambda_tv, Direction direction) {
  SensitivityConfig c;
  c.lambda_tv = lambda_tv;
  c.direction = direction;
  return tv_att_bound(data, c);
}

BoundResult tv_att_bound(const Dataset& data, const SensitivityConfig& config) {
  config.validate();
  const std::size_t n0 = data.n0();
  const double base = 1.0 / static_cast<double>(n0);
  LpProblem lp;
  lp.sense = config.direction == Direction::lower ? Sense::maximize : Sense::minimize;
  for (std::size_t i : data.control_indices()) lp.add_variable(data[i].y, 0.0, 1.0);
  std::vector<std::size_t> dev;
  for (std::size_t k = 0; k < n0; ++k) dev.push_back(lp.add_variable(0.0, 0.0, kInf));
  lp.add_equal(std::vector<double>(n0, 1.0), 1.0);
  for (std::size_t k = 0; k < n0; ++k) {
    std::vector<double> up(lp.num_vars(), 0.0), down(lp.num_vars(), 0.0);
    up[k] = 1.0;
    up[dev[k]] = -1.0;
    down[k] = -1.0;
    down[dev[k]] = -1.0;
    lp.add_less_equal(std::move(up), base);
    lp.add_less_equal(std::move(down), -base);
  }
  std::vector<double> tv(lp.num_vars(), 0.0);
  for (std::size_t d : dev) tv[d] = 0.5;
  lp.add_less_equal(std::move(tv), config.lambda_tv);
  if (balance_requested(config)) {
    add_balance_terms(lp, data, data.control_indices(), config.balance_lambda,
                      config.balance_epsilon);
  }
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal) return infeasible_result(config.direction);
  BoundResult r;
  r.direction = config.direction;
  detail::finish_att(r, data, head(sol.x, n0), data.mean_outcome(1));
  r.objective = sol.objective_value;
  return r;
}

BoundResult distributional_att_bound(const Dataset& data, const SensitivityConfig& config) {
  return distributional_att_bound(data, config, {});
}

BoundResult distributional_att_bound(const Dataset& data, const SensitivityConfig& config,
                                     std::span<const WeightConstraint> extra) {
  config.validate();
  const std::size_t n0 = data.n0();
  const double cap = config.gamma / static_cast<double>(n0);
  const detail::WeightedSample sample(data.outcomes(0));
  const auto treated = WeightedEcdf::uniform(data.outcomes(1));
  const auto grid = shift_grid(data.all_outcomes(), config.m);

  LpProblem base = weight_problem(data, 0.0, cap, config.direction, &config);
  for (const auto& c : extra) {
    if (c.coeffs.size() != n0)
      throw std::invalid_argument("distributional: constraint length does not match controls");
    detail::add_range_rows(base, 0, c.coeffs, c.lo, c.hi);
  }

  std::vector<std::optional<LpSolution>> per_shift(grid.size());
  detail::parallel_for(grid.size(), config.threads, [&](std::size_t j) {
    const auto ranges = detail::ks_prefix_ranges(sample, treated, grid, j, config.ks_mode);
    LpProblem lp = base;
    if (!detail::add_ks_rows(lp, 0, sample, ranges, config.delta, cap)) return;
    auto sol = solve_lp(lp);
    if (sol.status == LpStatus::optimal) per_shift[j] = std::move(sol);
  });

  const bool maximize = config.direction == Direction::lower;
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!per_shift[j]) continue;
    if (!best || detail::better_candidate(per_shift[j]->objective_value, grid.shifts[j],
                                          per_shift[*best]->objective_value,
                                          grid.shifts[*best], maximize)) {
      best = j;
    }
  }
  if (!best) return infeasible_result(config.direction);

  BoundResult r;
  r.direction = config.direction;
  detail::finish_att(r, data, head(per_shift[*best]->x, n0), data.mean_outcome(1));
  r.active_shift = grid.shifts[*best];
  r.objective = per_shift[*best]->objective_value;
  return r;
}

ShiftedKs minimal_achievable_ks(const Dataset& data, const SensitivityConfig& config) {
  config.validate();
  const std::size_t n0 = data.n0();
  const double cap = config.gamma / static_cast<double>(n0);
  const detail::WeightedSample sample(data.outcomes(0));
  const auto treated = WeightedEcdf::uniform(data.outcomes(1));
  const auto grid = shift_grid(data.all_outcomes(), config.m);

  std::vector<double> best_d(grid.size(), kInf);
  detail::parallel_for(grid.size(), config.threads, [&](std::size_t j) {
    const auto ranges = detail::ks_prefix_ranges(sample, treated, grid, j, config.ks_mode);
    LpProblem lp;
    lp.sense = Sense::minimize;
    for (std::size_t k = 0; k < n0; ++k) lp.add_variable(0.0, 0.0, cap);
    const std::size_t d = lp.add_variable(1.0, 0.0, 1.0);
    std::vector<double> ones(lp.num_vars(), 1.0);
    ones[d] = 0.0;
    lp.add_equal(std::move(ones), 1.0);
    for (const auto& r : ranges) {
      std::vector<double> row(lp.num_vars(), 0.0);
      for (std::size_t k = 0; k < r.prefix; ++k) row[sample.order[k]] = 1.0;
      // F_w(y) - d <= g_min  and  -F_w(y) - d <= -g_max
      std::vector<double> neg(row.size());
      std::transform(row.begin(), row.end(), neg.begin(), [](double v) { return -v; });
      row[d] = -1.0;
      neg[d] = -1.0;
      lp.add_less_equal(std::move(row), r.g_min);
      lp.add_less_equal(std::move(neg), -r.g_max);
    }
    const auto sol = solve_lp(lp);
    if (sol.status == LpStatus::optimal) best_d[j] = sol.objective_value;
  });

  ShiftedKs out{kInf, 0.0};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (best_d[j] == kInf) continue;
    if (out.distance == kInf ||
        detail::better_candidate(best_d[j], grid.shifts[j], out.distance, out.shift, false)) {
      out = {best_d[j], grid.shifts[j]};
    }
  }
  return out;
}

BoundResult att_bound(const Dataset& data, Model model, const SensitivityConfig& config) {
  switch (model) {
    case Model::marginal: return marginal_att_bound(data, config);
    case Model::distributional: return distributional_att_bound(data, config);
    case Model::tv: return tv_att_bound(data, config);
  }
  throw std::invalid_argument("att_bound: unknown model");
}

BoundResult atc_bound(const Dataset& data, Model model, const SensitivityConfig& config) {
  SensitivityConfig flipped = config;
  flipped.direction = config.direction == Direction::lower ? Direction::upper : Direction::lower;
  BoundResult r = att_bound(data.swapped_treatment(), model, flipped);
  r.direction = config.direction;
  if (r.status != BoundStatus::optimal) return r;
  // On swapped labels: treated_mean is the observed control mean and
  // counterfactual_mean the reweighted treated mean.
  std::swap(r.treated_mean, r.counterfactual_mean);
  r.estimate = r.treated_mean - r.counterfactual_mean;
  return r;
}

}  // namespace drci
