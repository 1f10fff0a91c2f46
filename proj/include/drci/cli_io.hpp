#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drci/dataset.hpp"
#include "drci/dro.hpp"
#include "drci/synthetic.hpp"

namespace drci {

enum class Command { att, atc, did, cic, iv, simulate, sweep };

std::string_view to_string(Command c) noexcept;
Command parse_command(std::string_view s);

struct ColumnMap {
  std::string outcome = "y";
  std::string treatment = "t";
  /// Loaded when set; required by did/cic.
  std::optional<std::string> baseline;
  /// Loaded when set; required by iv.
  std::optional<std::string> instrument;
  /// Every header starting with this prefix becomes a covariate, in header
  /// order. Empty disables covariates.
  std::string covariate_prefix = "x";
};

/// Parses a CSV file with a header row. Fields may be quoted. Errors name the
/// 1-based data row (the header is not counted) and the column.
Dataset load_csv(const std::string& path, const ColumnMap& columns);
Dataset parse_csv(std::istream& in, const ColumnMap& columns);

struct RunConfig {
  Command command = Command::att;
  Model model = Model::distributional;
  SensitivityConfig sensitivity;
  /// Shift resolution; unset means 50, or 20 for iv.
  std::optional<int> m;
  std::string input;
  std::string output;
  ColumnMap columns;
  std::uint64_t seed = 20240101;
  bool log_outcome = false;
  double log_offset = 1.0;
  bool emit_weights = false;
  bool timing = false;

  // simulate
  int scenario = 1;
  std::size_t n = 100;
  std::size_t replications = 1000;
  std::vector<Model> models{Model::distributional, Model::marginal};
  MarginalFloor simulate_floor = MarginalFloor::zero;

  // simulate and sweep
  std::vector<double> gammas;
  std::vector<double> deltas;
  /// Estimand swept by the sweep command.
  Command sweep_of = Command::att;

  /// Resolved SensitivityConfig for a bound command (fills m).
  SensitivityConfig resolved(Command bound_command) const;
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Applies the keys of a JSON config object on top of `config`. Unknown keys
/// are rejected.
void apply_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_config_file(const std::string& path, RunConfig base = {});

struct Report {
  std::string command;
  std::string model;
  std::string direction;
  std::string status;
  std::optional<double> estimate;
  double gamma = 1.0;
  double delta = 1.0;
  std::optional<double> epsilon;  // absent when infinite
  std::optional<double> active_shift;
  std::optional<double> se;
  std::optional<double> treated_mean;
  std::optional<double> counterfactual_mean;
  std::size_t n = 0, n1 = 0, n0 = 0;
  std::optional<std::vector<std::size_t>> units;
  std::optional<std::vector<double>> weights;
  std::optional<double> runtime_ms;
  std::vector<std::string> warnings;
  nlohmann::json config;

  bool operator==(const Report&) const = default;
};

void to_json(nlohmann::json& j, const Report& r);
void from_json(const nlohmann::json& j, Report& r);

/// Applies the log transform (when configured) to outcomes and baselines.
Dataset prepare_dataset(const Dataset& data, const RunConfig& config);

BoundResult solve_bound(const Dataset& data, Command command, Model model,
                        const SensitivityConfig& config);

/// One bound command on an already prepared dataset.
Report run(const RunConfig& config, const Dataset& data);

struct SweepRow {
  double gamma = 0.0, delta = 0.0;
  BoundResult lower, upper;
};

std::vector<SweepRow> sweep(const RunConfig& config, const Dataset& data,
                            const std::vector<double>& gammas,
                            const std::vector<double>& deltas);

/// Header gamma,delta,lower,upper,se_lower,se_upper,status. Values of an
/// infeasible direction are left empty; status is optimal, infeasible, or
/// partial (one direction infeasible).
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct CommandOutput {
  std::string text;
  int exit_code = 0;
};

/// Loads input as needed, runs the command and renders the report (JSON) or
/// table (CSV). Exit code 0 when optimal, 2 when infeasible.
CommandOutput execute(const RunConfig& config);

/// Writes `text` to `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& text);

}  // namespace drci
