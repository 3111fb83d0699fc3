#include "heteroselect/cli.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "heteroselect/errors.hpp"
#include "heteroselect/oracle_checks.hpp"
#include "heteroselect/selector.hpp"

namespace heteroselect::cli {

using Json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw InvalidArgument(fmt::format("line {}: '{}' is not a finite number", line, field));
  }
  return value;
}

std::vector<Scenario> scenarios_for(const RunConfig& cfg) {
  if (cfg.scenarios.empty()) return builtin_scenarios();
  std::vector<Scenario> out;
  for (const auto& name : cfg.scenarios) out.push_back(scenario_by_name(name));
  return out;
}

Json model_json(const Model& m) {
  return Json{{"k_m", m.coarse_level()}, {"d_m", m.per_block_dim()}, {"D_m", m.dimension()}};
}

Json checks_json(const std::vector<CheckOutcome>& checks) {
  Json arr = Json::array();
  for (const auto& c : checks) {
    arr.push_back(Json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return arr;
}

}  // namespace

Format format_from_string(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw InvalidArgument("unknown format '" + name + "' (expected csv or json)");
}

McOptions RunConfig::mc_options(std::size_t default_reps) const {
  return McOptions{reps == 0 ? default_reps : reps, SeedPolicy{seed},
                   ExecPolicy::parallel(threads)};
}

std::uint64_t resolve_seed(std::uint64_t flag_seed, const char* env_value) {
  if (env_value == nullptr || *env_value == '\0') return flag_seed;
  const std::string_view text(env_value);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidArgument("HETEROSELECT_SEED must be an unsigned integer, got '" +
                          std::string(text) + "'");
  }
  return value;
}

Observations read_observations_csv(std::istream& in, bool truncate,
                                   std::vector<std::string>& warnings) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("input is empty; expected header 'y1,y2'");
  if (trim(line) != "y1,y2") {
    throw InvalidArgument("expected header 'y1,y2', got '" + std::string(trim(line)) + "'");
  }
  Observations obs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
      throw InvalidArgument(fmt::format("line {}: expected two comma-separated values", line_no));
    }
    obs.y1.push_back(parse_real(row.substr(0, comma), line_no));
    obs.y2.push_back(parse_real(row.substr(comma + 1), line_no));
  }

  const std::size_t rows = obs.y1.size();
  if (rows < 2) throw InvalidArgument("need at least 2 observation rows");
  if (!is_power_of_two(rows)) {
    const std::size_t below = std::bit_floor(rows);
    if (!truncate) {
      throw InvalidArgument(fmt::format(
          "{} rows is not a power of two; supply {} rows or pass --truncate to use the first {}",
          rows, below * 2, below));
    }
    warnings.push_back(fmt::format("truncating {} rows to {}", rows, below));
    obs.y1.resize(below);
    obs.y2.resize(below);
  }
  return obs;
}

std::string write_observations_csv(const Observations& obs) {
  std::string out = "y1,y2\n";
  for (std::size_t i = 0; i < obs.n(); ++i) {
    out += fmt::format("{:.17g},{:.17g}\n", obs.y1[i], obs.y2[i]);
  }
  return out;
}

CommandResult cmd_fit(const RunConfig& cfg, const Observations& obs) {
  obs.validate();
  const CollectionConfig ccfg{obs.n(), cfg.gamma, cfg.theta, cfg.epsilon, cfg.delta};
  const auto collection = build_collection(ccfg);
  const auto sel = select(collection, obs, PenaltySpec{cfg.gamma, cfg.theta, cfg.epsilon, {}});
  const auto& chosen = sel.per_model[sel.chosen_index];

  Json j;
  j["model"] = model_json(sel.chosen);
  j["criterion"] = sel.criterion_value;
  j["log_likelihood"] = chosen.likelihood;
  j["penalty"] = chosen.penalty;
  j["parameters"] = Json{{"n", obs.n()},
                         {"gamma", cfg.gamma},
                         {"theta", cfg.theta},
                         {"epsilon", cfg.epsilon},
                         {"delta", cfg.delta}};
  j["mean"] = sel.estimate.mean;
  j["variance"] = sel.estimate.variance;
  if (!cfg.quiet) {
    Json audit = Json::array();
    for (const auto& e : sel.per_model) {
      Json row = model_json(e.model);
      row["likelihood"] = e.likelihood;
      row["penalty"] = e.penalty;
      row["criterion"] = e.criterion;
      audit.push_back(std::move(row));
    }
    j["audit"] = std::move(audit);
  }
  return CommandResult{j.dump(2) + "\n", kSuccess, {}};
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  const auto scenario = scenario_by_name(cfg.scenarios.empty() ? "M1" : cfg.scenarios.front());
  auto rng = SeedPolicy{cfg.seed}.stream(0);
  return CommandResult{write_observations_csv(sample(scenario, cfg.n, rng)), kSuccess, {}};
}

CommandResult cmd_table(const RunConfig& cfg) {
  const auto scenarios = scenarios_for(cfg);
  const auto table = ratio_table(scenarios, cfg.gamma_grid,
                                 TableParams{cfg.n, cfg.theta, cfg.epsilon, cfg.delta}, cfg.kind,
                                 cfg.mc_options(500));
  std::string text;
  if (cfg.format == Format::Csv) {
    text = "scenario,gamma,ratio,std_error\n";
    for (const auto& c : table.cells) {
      text += fmt::format("{},{:g},{:.6f},{:.6f}\n", c.scenario, c.gamma, c.ratio, c.std_error);
    }
  } else {
    Json j;
    j["kind"] = to_string(table.kind);
    j["n"] = cfg.n;
    j["reps"] = cfg.mc_options(500).reps;
    j["seed"] = cfg.seed;
    Json rows = Json::array();
    for (const auto& c : table.cells) {
      rows.push_back(Json{{"scenario", c.scenario},
                          {"gamma", c.gamma},
                          {"ratio", c.ratio},
                          {"std_error", c.std_error},
                          {"selected_risk", c.selected.estimate},
                          {"selected_std_error", c.selected.std_error}});
    }
    j["rows"] = std::move(rows);
    Json oracles = Json::array();
    for (const auto& o : table.oracles) {
      Json row{{"scenario", o.scenario}, {"model", model_json(o.oracle.best)},
               {"risk", o.oracle.report.estimate}, {"std_error", o.oracle.report.std_error}};
      oracles.push_back(std::move(row));
    }
    j["oracles"] = std::move(oracles);
    text = j.dump(2) + "\n";
  }
  return CommandResult{std::move(text), kSuccess, {}};
}

CommandResult cmd_convergence(const RunConfig& cfg) {
  auto holder = lipschitz_scenario();
  if (!cfg.scenarios.empty() && cfg.scenarios.front() != holder.scenario.name) {
    throw InvalidArgument("convergence supports the 'lipschitz' scenario only");
  }
  const CollectionConfig params{cfg.n_grid.empty() ? cfg.n : cfg.n_grid.front(), cfg.gamma,
                                cfg.theta, cfg.epsilon, cfg.delta};
  const auto res = convergence_experiment(holder, cfg.n_grid, params, cfg.mc_options(200));

  std::string text;
  if (cfg.format == Format::Csv) {
    text = fmt::format("# slope={:.6f} intercept={:.6f} target_slope={:.6f}\n", res.slope,
                       res.intercept, res.target_slope);
    text += "n,normalized_risk,std_error\n";
    for (const auto& p : res.points) {
      text += fmt::format("{},{:.9g},{:.9g}\n", p.n, p.normalized.estimate,
                          p.normalized.std_error);
    }
  } else {
    Json j;
    j["scenario"] = holder.scenario.name;
    j["slope"] = res.slope;
    j["intercept"] = res.intercept;
    j["target_slope"] = res.target_slope;
    Json pts = Json::array();
    for (const auto& p : res.points) {
      pts.push_back(Json{{"n", p.n},
                         {"normalized_risk", p.normalized.estimate},
                         {"std_error", p.normalized.std_error}});
    }
    j["points"] = std::move(pts);
    text = j.dump(2) + "\n";
  }
  return CommandResult{std::move(text), kSuccess, {}};
}

CommandResult cmd_verify(const RunConfig& cfg) {
  const SeedPolicy seeds{cfg.seed};
  const auto exec = ExecPolicy::parallel(cfg.threads);
  std::vector<CheckOutcome> checks;
  auto append = [&](std::vector<CheckOutcome> more) {
    checks.insert(checks.end(), std::make_move_iterator(more.begin()),
                  std::make_move_iterator(more.end()));
  };

  append(lemma10_battery(seeds.derive(10), 100));
  append(lemma11_battery(seeds.derive(11), 50, 20000, exec, cfg.kappa));

  const auto m1 = scenario_by_name("M1");
  append(risk_sandwich(m1, CollectionConfig{1024, m1.true_gamma, cfg.theta, cfg.epsilon, cfg.delta},
                       McOptions{cfg.reps == 0 ? 2000 : cfg.reps, seeds.derive(12), exec},
                       cfg.kappa));

  append(block_variance_expectation(scenario_by_name("M4"), Model(64, 1, 4),
                                    McOptions{100000, seeds.derive(13), exec}));

  bool all = true;
  for (const auto& c : checks) all = all && c.passed;

  Json j;
  j["passed"] = all;
  j["seed"] = cfg.seed;
  j["kappa"] = cfg.kappa;
  j["checks"] = checks_json(checks);
  return CommandResult{j.dump(2) + "\n", all ? kSuccess : kVerificationFailure, {}};
}

CommandResult run(const RunConfig& cfg) {
  try {
    if (cfg.command == "fit") {
      std::vector<std::string> warnings;
      Observations obs;
      if (cfg.input.empty() || cfg.input == "-") {
        throw InvalidArgument("fit needs --input <file.csv>");
      }
      std::ifstream in(cfg.input);
      if (!in) throw InvalidArgument("cannot open input file '" + cfg.input + "'");
      obs = read_observations_csv(in, cfg.truncate, warnings);
      auto res = cmd_fit(cfg, obs);
      res.warnings.insert(res.warnings.begin(), warnings.begin(), warnings.end());
      return res;
    }
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "table") return cmd_table(cfg);
    if (cfg.command == "convergence") return cmd_convergence(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    throw InvalidArgument("unknown command '" + cfg.command + "'");
  } catch (const InvalidArgument& e) {
    return CommandResult{{}, kInputError, {std::string("error: ") + e.what()}};
  } catch (const DegenerateVariance& e) {
    return CommandResult{{}, kInputError, {std::string("error: degenerate variance: ") + e.what()}};
  } catch (const EmptyCollection& e) {
    return CommandResult{{}, kInputError, {std::string("error: ") + e.what()}};
  }
}

}  // namespace heteroselect::cli
