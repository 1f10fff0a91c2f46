#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drci/dataset.hpp"
#include "drci/dro.hpp"

namespace drci {

/// Two-type confounding design: a latent u ~ Bernoulli(p) raises the chance
/// of treatment from 0.2 to 0.8, and the effect is drawn around tau1 (u = 0)
/// or tau2 (u = 1).
struct Scenario {
  double tau1 = 2.0;
  double tau2 = 3.0;
  double p = 0.5;
};

/// The three reference scenarios: 1 = (2, 3, 0.5), 2 = (3, 2, 0.5),
/// 3 = (2, 3, 0.8).
Scenario reference_scenario(int id);

/// Per unit:
///   u ~ Bernoulli(p), T ~ Bernoulli(0.6u + 0.2),
///   nu ~ N(tau1, 1), eta ~ N(tau2, 1), theta ~ N(0, 2^2), e ~ N(0, 0.1^2),
///   Y = (1-u)(T-0.5)nu + u(T-0.5)eta + theta + e.
/// Normal parameters are (mean, standard deviation). Deterministic in seed.
/// A draw leaving one arm empty is discarded and redrawn from the same stream.
Dataset generate_scenario(const Scenario& s, std::size_t n, std::uint64_t seed);

/// (8 p tau2 + 2 (1-p) tau1) / (6p + 2).
double true_att(const Scenario& s) noexcept;

struct MonteCarloConfig {
  Scenario scenario;
  std::size_t n = 100;
  std::size_t replications = 1000;
  std::vector<Model> models{Model::distributional, Model::marginal};
  std::vector<double> gammas{2.0, 3.0, 5.0};
  double delta = 0.1;
  int m = kDefaultShiftResolution;
  KsMode ks_mode = KsMode::grid;
  /// Used by the tv rows only.
  double lambda_tv = 0.1;
  /// Weight floor of the marginal rows. The zero floor shares the
  /// distributional model's weight box.
  MarginalFloor marginal_floor = MarginalFloor::zero;
  std::uint64_t seed = 20240101;
  /// Replications run concurrently (0 = hardware).
  unsigned threads = 1;
};

struct BiasRow {
  Model model = Model::distributional;
  double gamma = 1.0;
  std::size_t n = 0;
  double delta = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  /// Replications that produced a bound.
  std::size_t replications = 0;
  /// Replications without a feasible bound (excluded from bias and sd).
  std::size_t infeasible = 0;
};

struct BiasTable {
  std::vector<BiasRow> rows;

  /// Header model,gamma,n,delta,bias,sd,replications.
  std::string to_csv() const;
  const BiasRow* find(Model model, double gamma) const noexcept;
};

/// Lower-bound bias (estimate - true ATT) and its standard deviation over
/// replications, one row per (model, gamma) in the order given.
/// Replication r draws from a stream seeded by (seed, r).
BiasTable run_monte_carlo(const MonteCarloConfig& config);

}  // namespace drci
