#include "drci/cli_io.hpp"

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "drci/extensions.hpp"

namespace drci {

using nlohmann::json;

std::string_view to_string(Command c) noexcept {
  switch (c) {
    case Command::att: return "att";
    case Command::atc: return "atc";
    case Command::did: return "did";
    case Command::cic: return "cic";
    case Command::iv: return "iv";
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
  }
  return "unknown";
}

Command parse_command(std::string_view s) {
  for (Command c : {Command::att, Command::atc, Command::did, Command::cic, Command::iv,
                    Command::simulate, Command::sweep})
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown command '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- CSV input

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) throw std::runtime_error("row " + std::to_string(row) + ": unterminated quote");
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

std::string row_prefix(std::size_t row) { return "row " + std::to_string(row) + ": "; }

double parse_number(const std::string& field, std::size_t row, const std::string& column) {
  if (field.empty())
    throw std::runtime_error(row_prefix(row) + "missing value for column '" + column + "'");
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  if (*b == '+') ++b;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v))
    throw std::runtime_error(row_prefix(row) + "column '" + column + "' is not a finite number: '" +
                             field + "'");
  return v;
}

int parse_binary(const std::string& field, std::size_t row, const std::string& column) {
  const double v = parse_number(field, row, column);
  if (v != 0.0 && v != 1.0)
    throw std::runtime_error(row_prefix(row) + "column '" + column + "' must be 0 or 1, got '" +
                             field + "'");
  return static_cast<int>(v);
}

}  // namespace

Dataset parse_csv(std::istream& in, const ColumnMap& columns) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv_line(line, 0);
      break;
    }
  }
  if (header.empty()) throw std::runtime_error("input has no header row");

  const auto locate = [&](const std::string& name) -> std::size_t {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw std::runtime_error("missing column '" + name + "'");
  };
  const std::size_t y_col = locate(columns.outcome);
  const std::size_t t_col = locate(columns.treatment);
  const std::optional<std::size_t> b_col =
      columns.baseline ? std::optional(locate(*columns.baseline)) : std::nullopt;
  const std::optional<std::size_t> z_col =
      columns.instrument ? std::optional(locate(*columns.instrument)) : std::nullopt;
  std::vector<std::size_t> x_cols;
  if (!columns.covariate_prefix.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k == y_col || k == t_col || (b_col && k == *b_col) || (z_col && k == *z_col)) continue;
      if (header[k].rfind(columns.covariate_prefix, 0) == 0) x_cols.push_back(k);
    }
  }

  std::vector<Unit> units;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line, row);
    if (fields.size() != header.size()) {
      throw std::runtime_error(row_prefix(row) + "expected " + std::to_string(header.size()) +
                               " fields, found " + std::to_string(fields.size()));
    }
    Unit u;
    u.y = parse_number(fields[y_col], row, header[y_col]);
    u.t = parse_binary(fields[t_col], row, header[t_col]);
    if (b_col) u.y_b = parse_number(fields[*b_col], row, header[*b_col]);
    if (z_col) u.z = parse_binary(fields[*z_col], row, header[*z_col]);
    for (std::size_t k : x_cols) u.x.push_back(parse_number(fields[k], row, header[k]));
    units.push_back(std::move(u));
  }
  if (units.empty()) throw std::runtime_error("input has no data rows");
  return Dataset(std::move(units));
}

Dataset load_csv(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return parse_csv(in, columns);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ------------------------------------------------------------ configuration

SensitivityConfig RunConfig::resolved(Command bound_command) const {
  SensitivityConfig c = sensitivity;
  c.m = m.value_or(bound_command == Command::iv ? kDefaultIvShiftResolution
                                                : kDefaultShiftResolution);
  return c;
}

void RunConfig::validate() const {
  const Command bound = command == Command::sweep ? sweep_of : command;
  if (command == Command::sweep && (bound == Command::simulate || bound == Command::sweep))
    throw std::invalid_argument("sweep target must be a bound command");
  if (command != Command::simulate) {
    if ((bound == Command::did || bound == Command::cic || bound == Command::iv) &&
        model != Model::distributional)
      throw std::invalid_argument(std::string(to_string(bound)) +
                                  " requires the distributional model");
    if (input.empty()) throw std::invalid_argument("an input file is required");
  } else {
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (models.empty()) throw std::invalid_argument("at least one model is required");
    reference_scenario(scenario);
  }
  if (log_outcome && !std::isfinite(log_offset))
    throw std::invalid_argument("log offset must be finite");
  resolved(command == Command::simulate ? Command::att : bound).validate();
  for (double g : gammas)
    if (!(g >= 1.0) || !std::isfinite(g)) throw std::invalid_argument("gammas must be >= 1");
  for (double d : deltas)
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("deltas must lie in [0, 1]");
}

namespace {

MarginalFloor parse_floor(std::string_view s) {
  if (s == "odds_ratio") return MarginalFloor::odds_ratio;
  if (s == "zero") return MarginalFloor::zero;
  throw std::invalid_argument("unknown marginal floor '" + std::string(s) + "'");
}

std::string_view floor_name(MarginalFloor f) {
  return f == MarginalFloor::zero ? "zero" : "odds_ratio";
}

std::optional<std::string> optional_string(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<std::string>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::optional<double> finite_opt(double v) {
  return std::isfinite(v) ? std::optional(v) : std::nullopt;
}

}  // namespace

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  auto& s = c.sensitivity;
  for (const auto& [key, v] : j.items()) {
    if (key == "command") c.command = parse_command(v.get<std::string>());
    else if (key == "model") c.model = parse_model(v.get<std::string>());
    else if (key == "gamma") s.gamma = v.get<double>();
    else if (key == "delta") s.delta = v.get<double>();
    else if (key == "epsilon") s.epsilon = v.is_null() ? kInf : v.get<double>();
    else if (key == "lambda_tv") s.lambda_tv = v.get<double>();
    else if (key == "m") c.m = v.is_null() ? std::nullopt : std::optional(v.get<int>());
    else if (key == "balance_lambda") s.balance_lambda = v.get<double>();
    else if (key == "balance_epsilon")
      s.balance_epsilon = v.is_null() ? std::nullopt : std::optional(v.get<double>());
    else if (key == "direction") s.direction = parse_direction(v.get<std::string>());
    else if (key == "ks_mode") s.ks_mode = parse_ks_mode(v.get<std::string>());
    else if (key == "marginal_floor") s.marginal_floor = parse_floor(v.get<std::string>());
    else if (key == "threads") s.threads = v.get<unsigned>();
    else if (key == "input") c.input = v.get<std::string>();
    else if (key == "output") c.output = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "log_outcome") c.log_outcome = v.get<bool>();
    else if (key == "log_offset") c.log_offset = v.get<double>();
    else if (key == "emit_weights") c.emit_weights = v.get<bool>();
    else if (key == "timing") c.timing = v.get<bool>();
    else if (key == "scenario") c.scenario = v.get<int>();
    else if (key == "n") c.n = v.get<std::size_t>();
    else if (key == "replications") c.replications = v.get<std::size_t>();
    else if (key == "simulate_floor") c.simulate_floor = parse_floor(v.get<std::string>());
    else if (key == "gammas") c.gammas = v.get<std::vector<double>>();
    else if (key == "deltas") c.deltas = v.get<std::vector<double>>();
    else if (key == "sweep_of") c.sweep_of = parse_command(v.get<std::string>());
    else if (key == "models") {
      c.models.clear();
      for (const auto& name : v) c.models.push_back(parse_model(name.get<std::string>()));
    } else if (key == "columns") {
      for (const auto& [ck, cv] : v.items()) {
        if (ck == "outcome") c.columns.outcome = cv.get<std::string>();
        else if (ck == "treatment") c.columns.treatment = cv.get<std::string>();
        else if (ck == "baseline") c.columns.baseline = optional_string(cv);
        else if (ck == "instrument") c.columns.instrument = optional_string(cv);
        else if (ck == "covariate_prefix") c.columns.covariate_prefix = cv.get<std::string>();
        else throw std::invalid_argument("unknown config key 'columns." + ck + "'");
      }
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  apply_json(base, j);
  return base;
}

namespace {

json config_echo(const RunConfig& c, Command bound, const SensitivityConfig& s) {
  json cols = {{"outcome", c.columns.outcome},
               {"treatment", c.columns.treatment},
               {"covariate_prefix", c.columns.covariate_prefix},
               {"baseline", c.columns.baseline ? json(*c.columns.baseline) : json(nullptr)},
               {"instrument", c.columns.instrument ? json(*c.columns.instrument) : json(nullptr)}};
  return {{"command", to_string(bound)},
          {"model", to_string(c.model)},
          {"gamma", s.gamma},
          {"delta", s.delta},
          {"epsilon", finite_or_null(s.epsilon)},
          {"lambda_tv", s.lambda_tv},
          {"m", s.m},
          {"balance_lambda", s.balance_lambda},
          {"balance_epsilon", s.balance_epsilon ? json(*s.balance_epsilon) : json(nullptr)},
          {"direction", to_string(s.direction)},
          {"ks_mode", to_string(s.ks_mode)},
          {"marginal_floor", floor_name(s.marginal_floor)},
          {"input", c.input},
          {"columns", cols},
          {"log_outcome", c.log_outcome},
          {"log_offset", c.log_offset}};
}

}  // namespace

// ------------------------------------------------------------------ reports

void to_json(json& j, const Report& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = {{"command", r.command},
       {"model", r.model},
       {"direction", r.direction},
       {"status", r.status},
       {"estimate", opt(r.estimate)},
       {"gamma", r.gamma},
       {"delta", r.delta},
       {"epsilon", opt(r.epsilon)},
       {"active_shift", opt(r.active_shift)},
       {"se", opt(r.se)},
       {"treated_mean", opt(r.treated_mean)},
       {"counterfactual_mean", opt(r.counterfactual_mean)},
       {"n", r.n},
       {"n1", r.n1},
       {"n0", r.n0},
       {"units", r.units ? json(*r.units) : json(nullptr)},
       {"weights", r.weights ? json(*r.weights) : json(nullptr)},
       {"runtime_ms", opt(r.runtime_ms)},
       {"warnings", r.warnings},
       {"config", r.config}};
}

void from_json(const json& j, Report& r) {
  const auto opt = [&](const char* key) -> std::optional<double> {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
  };
  r.command = j.at("command").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.direction = j.at("direction").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.estimate = opt("estimate");
  r.gamma = j.at("gamma").get<double>();
  r.delta = j.at("delta").get<double>();
  r.epsilon = opt("epsilon");
  r.active_shift = opt("active_shift");
  r.se = opt("se");
  r.treated_mean = opt("treated_mean");
  r.counterfactual_mean = opt("counterfactual_mean");
  r.n = j.at("n").get<std::size_t>();
  r.n1 = j.at("n1").get<std::size_t>();
  r.n0 = j.at("n0").get<std::size_t>();
  r.units.reset();
  r.weights.reset();
  if (j.contains("units") && !j["units"].is_null())
    r.units = j["units"].get<std::vector<std::size_t>>();
  if (j.contains("weights") && !j["weights"].is_null())
    r.weights = j["weights"].get<std::vector<double>>();
  r.runtime_ms = opt("runtime_ms");
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.config = j.value("config", json::object());
}

// ---------------------------------------------------------------- execution

Dataset prepare_dataset(const Dataset& data, const RunConfig& config) {
  if (!config.log_outcome) return data;
  std::vector<Unit> units = data.units();
  const auto transform = [&](double v, std::size_t i, const char* what) {
    const double shifted = v + config.log_offset;
    if (!(shifted > 0.0)) {
      throw std::runtime_error("row " + std::to_string(i + 1) + ": " + what + " + log offset is " +
                               std::to_string(shifted) + ", cannot take the log");
    }
    return std::log(shifted);
  };
  for (std::size_t i = 0; i < units.size(); ++i) {
    units[i].y = transform(units[i].y, i, "outcome");
    if (units[i].y_b) units[i].y_b = transform(*units[i].y_b, i, "baseline");
  }
  return Dataset(std::move(units));
}

BoundResult solve_bound(const Dataset& data, Command command, Model model,
                        const SensitivityConfig& config) {
  switch (command) {
    case Command::att: return att_bound(data, model, config);
    case Command::atc: return atc_bound(data, model, config);
    case Command::did: return did_att_bound(data, config);
    case Command::cic: return cic_att_bound(data, config);
    case Command::iv: return iv_att_bound(data, config);
    default: break;
  }
  throw std::invalid_argument("'" + std::string(to_string(command)) + "' is not a bound command");
}

Report run(const RunConfig& config, const Dataset& data) {
  const SensitivityConfig s = config.resolved(config.command);
  const BoundResult b = solve_bound(data, config.command, config.model, s);

  Report r;
  r.command = std::string(to_string(config.command));
  r.model = std::string(to_string(config.model));
  r.direction = std::string(to_string(b.direction));
  r.status = std::string(to_string(b.status));
  r.estimate = finite_opt(b.estimate);
  r.gamma = s.gamma;
  r.delta = s.delta;
  r.epsilon = finite_opt(s.epsilon);
  r.active_shift = b.active_shift;
  r.se = finite_opt(b.se);
  r.treated_mean = finite_opt(b.treated_mean);
  r.counterfactual_mean = finite_opt(b.counterfactual_mean);
  r.n = data.n();
  r.n1 = data.n1();
  r.n0 = data.n0();
  if (config.emit_weights && b.status == BoundStatus::optimal) {
    r.units = b.units;
    r.weights = b.weights;
  }
  r.warnings = b.warnings;
  r.config = config_echo(config, config.command, s);
  return r;
}

std::vector<SweepRow> sweep(const RunConfig& config, const Dataset& data,
                            const std::vector<double>& gammas,
                            const std::vector<double>& deltas) {
  if (gammas.empty() || deltas.empty()) throw std::invalid_argument("sweep: empty grid");
  std::vector<SweepRow> rows;
  for (double g : gammas) {
    for (double d : deltas) {
      SensitivityConfig s = config.resolved(config.sweep_of);
      s.gamma = g;
      s.delta = d;
      SweepRow row{g, d, {}, {}};
      s.direction = Direction::lower;
      row.lower = solve_bound(data, config.sweep_of, config.model, s);
      s.direction = Direction::upper;
      row.upper = solve_bound(data, config.sweep_of, config.model, s);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "gamma,delta,lower,upper,se_lower,se_upper,status\n";
  for (const auto& r : rows) {
    const bool lo = r.lower.status == BoundStatus::optimal;
    const bool hi = r.upper.status == BoundStatus::optimal;
    out << num(r.gamma) << ',' << num(r.delta) << ',' << (lo ? num(r.lower.estimate) : "") << ','
        << (hi ? num(r.upper.estimate) : "") << ',' << (lo ? num(r.lower.se) : "") << ','
        << (hi ? num(r.upper.se) : "") << ','
        << (lo && hi ? "optimal" : (lo || hi ? "partial" : "infeasible")) << '\n';
  }
  return out.str();
}

CommandOutput execute(const RunConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  if (config.command == Command::simulate) {
    MonteCarloConfig mc;
    mc.scenario = reference_scenario(config.scenario);
    mc.n = config.n;
    mc.replications = config.replications;
    mc.models = config.models;
    mc.gammas = config.gammas.empty() ? std::vector<double>{2.0, 3.0, 5.0} : config.gammas;
    mc.m = config.m.value_or(kDefaultShiftResolution);
    mc.ks_mode = config.sensitivity.ks_mode;
    mc.lambda_tv = config.sensitivity.lambda_tv;
    mc.marginal_floor = config.simulate_floor;
    mc.seed = config.seed;
    mc.threads = config.sensitivity.threads;
    const std::vector<double> deltas = config.deltas.empty() ? std::vector<double>{0.1}
                                                             : config.deltas;
    BiasTable all;
    for (double d : deltas) {
      mc.delta = d;
      auto t = run_monte_carlo(mc);
      all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
    }
    return {all.to_csv(), 0};
  }

  const ColumnMap columns = [&] {
    ColumnMap c = config.columns;
    const Command bound = config.command == Command::sweep ? config.sweep_of : config.command;
    if ((bound == Command::did || bound == Command::cic) && !c.baseline) c.baseline = "yb";
    if (bound == Command::iv && !c.instrument) c.instrument = "z";
    return c;
  }();
  const Dataset data = prepare_dataset(load_csv(config.input, columns), config);

  if (config.command == Command::sweep) {
    const auto gammas = config.gammas.empty() ? std::vector{config.sensitivity.gamma}
                                              : config.gammas;
    const auto deltas = config.deltas.empty() ? std::vector{config.sensitivity.delta}
                                              : config.deltas;
    const auto rows = sweep(config, data, gammas, deltas);
    bool all_optimal = true;
    for (const auto& r : rows)
      all_optimal = all_optimal && r.lower.status == BoundStatus::optimal &&
                    r.upper.status == BoundStatus::optimal;
    return {sweep_csv(rows), all_optimal ? 0 : 2};
  }

  Report report = run(config, data);
  if (config.timing) {
    report.runtime_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  }
  return {json(report).dump(2) + "\n", report.status == "optimal" ? 0 : 2};
}

void write_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) {
      fs::remove(tmp);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto '" + path + "': " + ec.message());
  }
}

}  // namespace drci
