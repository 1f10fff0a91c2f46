// drci: command-line front end for the sensitivity bounds library.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "drci/cli_io.hpp"

namespace {

struct Flags {
  std::string input, config, output, direction, model, ks_mode, marginal_floor;
  double gamma = 1, delta = 1, epsilon = 0, lambda_tv = 0, balance_lambda = 0,
         balance_epsilon = 0, log_offset = 1;
  int m = 50;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  std::string col_y, col_t, col_yb, col_z, col_x;
  bool log_outcome = false, emit_weights = false, timing = false;

  int scenario = 1;
  std::size_t n = 100, replications = 1000;
  std::vector<double> gammas, deltas;
  std::vector<std::string> models;
  std::string sweep_of;
};

// Setters for flags given on the command line; they run after the config
// file has been applied.
using Overrides = std::vector<std::pair<CLI::Option*, std::function<void(drci::RunConfig&)>>>;

void add_common(CLI::App* app, Flags& f, Overrides& ov) {
  const auto add = [&](CLI::Option* o, std::function<void(drci::RunConfig&)> set) {
    ov.emplace_back(o, std::move(set));
  };
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  add(app->add_option("--output,-o", f.output, "Write the result here (default stdout)"),
      [&](auto& c) { c.output = f.output; });
  add(app->add_option("--gamma", f.gamma, "Weight ratio bound (>= 1)"),
      [&](auto& c) { c.sensitivity.gamma = f.gamma; });
  add(app->add_option("--delta", f.delta, "KS radius in [0, 1]"),
      [&](auto& c) { c.sensitivity.delta = f.delta; });
  add(app->add_option("--m", f.m, "Shift grid resolution (2m+1 shifts)"),
      [&](auto& c) { c.m = f.m; });
  add(app->add_option("--ks-mode", f.ks_mode, "grid | exact_atoms"),
      [&](auto& c) { c.sensitivity.ks_mode = drci::parse_ks_mode(f.ks_mode); });
  add(app->add_option("--lambda-tv", f.lambda_tv, "Total-variation radius"),
      [&](auto& c) { c.sensitivity.lambda_tv = f.lambda_tv; });
  add(app->add_option("--threads", f.threads, "Worker threads (0 = all cores)"),
      [&](auto& c) { c.sensitivity.threads = f.threads; });
  add(app->add_option("--seed", f.seed, "Random seed"), [&](auto& c) { c.seed = f.seed; });
}

void add_data(CLI::App* app, Flags& f, Overrides& ov) {
  const auto add = [&](CLI::Option* o, std::function<void(drci::RunConfig&)> set) {
    ov.emplace_back(o, std::move(set));
  };
  add(app->add_option("--input,-i", f.input, "Input CSV"), [&](auto& c) { c.input = f.input; });
  add(app->add_option("--model", f.model, "marginal | distributional | tv"),
      [&](auto& c) { c.model = drci::parse_model(f.model); });
  add(app->add_option("--direction", f.direction, "lower | upper"),
      [&](auto& c) { c.sensitivity.direction = drci::parse_direction(f.direction); });
  add(app->add_option("--epsilon", f.epsilon, "Mean-difference slack (did, cic, iv)"),
      [&](auto& c) { c.sensitivity.epsilon = f.epsilon; });
  add(app->add_option("--balance-lambda", f.balance_lambda, "Covariate imbalance penalty"),
      [&](auto& c) { c.sensitivity.balance_lambda = f.balance_lambda; });
  add(app->add_option("--balance-epsilon", f.balance_epsilon, "Covariate imbalance cap"),
      [&](auto& c) { c.sensitivity.balance_epsilon = f.balance_epsilon; });
  add(app->add_option("--marginal-floor", f.marginal_floor, "odds_ratio | zero"),
      [&](auto& c) {
        drci::apply_json(c, {{"marginal_floor", f.marginal_floor}});
      });
  add(app->add_flag("--log-outcome", f.log_outcome, "Solve on log(y + offset)"),
      [&](auto& c) { c.log_outcome = f.log_outcome; });
  add(app->add_option("--log-offset", f.log_offset, "Offset added before the log (default 1)"),
      [&](auto& c) { c.log_offset = f.log_offset; });
  add(app->add_flag("--emit-weights", f.emit_weights, "Include unit weights in the report"),
      [&](auto& c) { c.emit_weights = f.emit_weights; });
  add(app->add_flag("--timing", f.timing, "Include runtime_ms in the report"),
      [&](auto& c) { c.timing = f.timing; });
  add(app->add_option("--col-y", f.col_y, "Outcome column (default y)"),
      [&](auto& c) { c.columns.outcome = f.col_y; });
  add(app->add_option("--col-t", f.col_t, "Treatment column (default t)"),
      [&](auto& c) { c.columns.treatment = f.col_t; });
  add(app->add_option("--col-yb", f.col_yb, "Baseline outcome column (default yb for did/cic)"),
      [&](auto& c) { c.columns.baseline = f.col_yb; });
  add(app->add_option("--col-z", f.col_z, "Instrument column (default z for iv)"),
      [&](auto& c) { c.columns.instrument = f.col_z; });
  add(app->add_option("--covariate-prefix", f.col_x,
                      "Columns with this prefix are covariates (default x)"),
      [&](auto& c) { c.columns.covariate_prefix = f.col_x; });
}

void add_grids(CLI::App* app, Flags& f, Overrides& ov) {
  ov.emplace_back(app->add_option("--gammas", f.gammas, "Comma-separated gamma values")
                      ->delimiter(','),
                  [&](auto& c) { c.gammas = f.gammas; });
  ov.emplace_back(app->add_option("--deltas", f.deltas, "Comma-separated delta values")
                      ->delimiter(','),
                  [&](auto& c) { c.deltas = f.deltas; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharp treatment-effect bounds under distributionally robust sensitivity models"};
  app.require_subcommand(1);
  Flags f;
  Overrides ov;

  const std::vector<std::pair<const char*, const char*>> bound_commands = {
      {"att", "Bound the average effect on the treated"},
      {"atc", "Bound the average effect on the controls"},
      {"did", "ATT bound with relaxed parallel trends"},
      {"cic", "ATT bound with relaxed changes-in-changes"},
      {"iv", "ATT bound with a binary instrument"},
  };
  std::vector<std::pair<CLI::App*, drci::Command>> subs;
  for (const auto& [name, help] : bound_commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, f, ov);
    add_data(sub, f, ov);
    subs.emplace_back(sub, drci::parse_command(name));
  }

  CLI::App* sweep = app.add_subcommand("sweep", "Lower and upper bounds over a gamma x delta grid");
  add_common(sweep, f, ov);
  add_data(sweep, f, ov);
  add_grids(sweep, f, ov);
  ov.emplace_back(sweep->add_option("--of", f.sweep_of, "Estimand: att | atc | did | cic | iv"),
                  [&](auto& c) { c.sweep_of = drci::parse_command(f.sweep_of); });
  subs.emplace_back(sweep, drci::Command::sweep);

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo bias table for a reference scenario");
  add_common(sim, f, ov);
  add_grids(sim, f, ov);
  ov.emplace_back(sim->add_option("--scenario", f.scenario, "1, 2 or 3"),
                  [&](auto& c) { c.scenario = f.scenario; });
  ov.emplace_back(sim->add_option("--n", f.n, "Sample size"), [&](auto& c) { c.n = f.n; });
  ov.emplace_back(sim->add_option("--replications,-R", f.replications, "Replications"),
                  [&](auto& c) { c.replications = f.replications; });
  ov.emplace_back(sim->add_option("--models", f.models, "Comma-separated models")->delimiter(','),
                  [&](auto& c) {
                    c.models.clear();
                    for (const auto& name : f.models) c.models.push_back(drci::parse_model(name));
                  });
  ov.emplace_back(sim->add_option("--marginal-floor", f.marginal_floor,
                                  "Marginal weight floor: zero (default) | odds_ratio"),
                  [&](auto& c) { drci::apply_json(c, {{"simulate_floor", f.marginal_floor}}); });
  subs.emplace_back(sim, drci::Command::simulate);

  CLI11_PARSE(app, argc, argv);

  try {
    drci::RunConfig config;
    for (const auto& [sub, command] : subs) {
      if (!sub->parsed()) continue;
      if (!f.config.empty()) config = drci::load_config_file(f.config, config);
      config.command = command;
      break;
    }
    for (const auto& [opt, set] : ov)
      if (opt->count() > 0) set(config);

    const drci::CommandOutput out = drci::execute(config);
    if (config.output.empty()) {
      std::cout << out.text;
    } else {
      drci::write_atomic(config.output, out.text);
    }
    return out.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "drci: " << e.what() << '\n';
    return 1;
  }
}
