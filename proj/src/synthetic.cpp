#include "drci/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "detail.hpp"

namespace drci {

Scenario reference_scenario(int id) {
  switch (id) {
    case 1: return {2.0, 3.0, 0.5};
    case 2: return {3.0, 2.0, 0.5};
    case 3: return {2.0, 3.0, 0.8};
  }
  throw std::invalid_argument("unknown scenario " + std::to_string(id) + " (expected 1, 2 or 3)");
}

double true_att(const Scenario& s) noexcept {
  return (8.0 * s.p * s.tau2 + 2.0 * (1.0 - s.p) * s.tau1) / (6.0 * s.p + 2.0);
}

namespace {

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

Dataset draw(const Scenario& s, std::size_t n, std::seed_seq& seq) {
  if (n < 2) throw std::invalid_argument("generate_scenario: n must be at least 2");
  if (!(s.p >= 0.0 && s.p <= 1.0))
    throw std::invalid_argument("generate_scenario: p must lie in [0, 1]");
  std::mt19937_64 rng(seq);
  std::bernoulli_distribution latent(s.p);
  std::normal_distribution<double> nu(s.tau1, 1.0), eta(s.tau2, 1.0), theta(0.0, 2.0),
      noise(0.0, 0.1);
  for (;;) {
    std::vector<Unit> units(n);
    std::size_t treated = 0;
    for (auto& unit : units) {
      const bool u = latent(rng);
      const int t = std::bernoulli_distribution(u ? 0.8 : 0.2)(rng) ? 1 : 0;
      const double half = t - 0.5;
      const double a = nu(rng), b = eta(rng), c = theta(rng), e = noise(rng);
      unit.t = t;
      unit.y = (u ? half * b : half * a) + c + e;
      treated += static_cast<std::size_t>(t);
    }
    if (treated > 0 && treated < n) return Dataset(std::move(units));
  }
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Dataset generate_scenario(const Scenario& s, std::size_t n, std::uint64_t seed) {
  std::seed_seq seq{lo32(seed), hi32(seed)};
  return draw(s, n, seq);
}

std::string BiasTable::to_csv() const {
  std::ostringstream out;
  out << "model,gamma,n,delta,bias,sd,replications\n";
  for (const auto& r : rows) {
    out << to_string(r.model) << ',' << format_number(r.gamma) << ',' << r.n << ','
        << format_number(r.delta) << ',' << format_number(r.bias) << ','
        << format_number(r.sd) << ',' << r.replications << '\n';
  }
  return out.str();
}

const BiasRow* BiasTable::find(Model model, double gamma) const noexcept {
  for (const auto& r : rows)
    if (r.model == model && r.gamma == gamma) return &r;
  return nullptr;
}

BiasTable run_monte_carlo(const MonteCarloConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("monte carlo: replications must be >= 1");
  if (config.models.empty() || config.gammas.empty())
    throw std::invalid_argument("monte carlo: need at least one model and one gamma");

  const double truth = true_att(config.scenario);
  const std::size_t cells = config.models.size() * config.gammas.size();
  // bias[r][cell]; empty when that replication's bound was infeasible.
  std::vector<std::vector<std::optional<double>>> bias(
      config.replications, std::vector<std::optional<double>>(cells));

  detail::parallel_for(config.replications, config.threads, [&](std::size_t r) {
    std::seed_seq seq{lo32(config.seed), hi32(config.seed), lo32(r), hi32(r)};
    const Dataset data = draw(config.scenario, config.n, seq);
    std::size_t cell = 0;
    for (Model model : config.models) {
      for (double gamma : config.gammas) {
        SensitivityConfig sc;
        sc.gamma = gamma;
        sc.delta = config.delta;
        sc.m = config.m;
        sc.ks_mode = config.ks_mode;
        sc.lambda_tv = config.lambda_tv;
        sc.marginal_floor = config.marginal_floor;
        sc.direction = Direction::lower;
        const BoundResult b = att_bound(data, model, sc);
        if (b.status == BoundStatus::optimal) bias[r][cell] = b.estimate - truth;
        ++cell;
      }
    }
  });

  BiasTable table;
  std::size_t cell = 0;
  for (Model model : config.models) {
    for (double gamma : config.gammas) {
      std::vector<double> values;
      for (const auto& rep : bias)
        if (rep[cell]) values.push_back(*rep[cell]);
      BiasRow row;
      row.model = model;
      row.gamma = gamma;
      row.n = config.n;
      row.delta = config.delta;
      row.replications = values.size();
      row.infeasible = config.replications - values.size();
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        row.bias = sum / static_cast<double>(values.size());
        row.sd = sample_sd(values, row.bias);
      } else {
        row.bias = row.sd = std::numeric_limits<double>::quiet_NaN();
      }
      table.rows.push_back(row);
      ++cell;
    }
  }
  return table;
}

}  // namespace drci
