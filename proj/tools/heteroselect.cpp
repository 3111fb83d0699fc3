// Command-line front end: fit, simulate, table, convergence, verify.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "heteroselect/cli.hpp"

namespace hc = heteroselect::cli;

namespace {

void add_common(CLI::App& app, hc::RunConfig& cfg, std::string& format, std::string& kind) {
  app.add_option("--n", cfg.n, "Sample size (power of two)");
  app.add_option("--gamma", cfg.gamma, "Known bound on max/min variance ratio");
  app.add_option("--theta", cfg.theta, "Dimension hypothesis constant (> 1)");
  app.add_option("--epsilon", cfg.epsilon, "Log exponent slack (> 0)");
  app.add_option("--delta", cfg.delta, "Dimension cap constant (> 0)");
  app.add_option("--seed", cfg.seed, "Master seed (HETEROSELECT_SEED overrides)");
  app.add_option("--reps", cfg.reps, "Monte Carlo replications (0 = command default)");
  app.add_option("--scenario", cfg.scenarios, "Scenario name(s): M1 M2 M3 M4 lipschitz")
      ->delimiter(',');
  app.add_option("--kind", kind, "kullback | quadratic_mean | quadratic_variance");
  app.add_option("--input", cfg.input, "Input CSV with header y1,y2");
  app.add_option("--output", cfg.output, "Output file (default: stdout)");
  app.add_option("--format", format, "csv | json");
  app.add_flag("--truncate", cfg.truncate, "Cut input to the largest power of two");
  app.add_flag("--quiet", cfg.quiet, "Omit the per-model audit table");
  app.add_option("--threads", cfg.threads, "OpenMP threads (0 = runtime default)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous mean and variance estimation by penalized model selection"};
  app.require_subcommand(1);

  hc::RunConfig cfg;
  std::string format = "csv";
  std::string kind = "kullback";

  auto* fit = app.add_subcommand("fit", "Select a model for y1,y2 data and write JSON");
  add_common(*fit, cfg, format, kind);
  auto* simulate = app.add_subcommand("simulate", "Draw y1,y2 replicates from a scenario");
  add_common(*simulate, cfg, format, kind);
  auto* table = app.add_subcommand("table", "Risk ratio table against the oracle");
  add_common(*table, cfg, format, kind);
  table->add_option("--gamma-grid", cfg.gamma_grid, "Comma-separated gamma values")
      ->delimiter(',');
  auto* conv = app.add_subcommand("convergence", "Normalized risk across sample sizes");
  add_common(*conv, cfg, format, kind);
  conv->add_option("--n-grid", cfg.n_grid, "Comma-separated sample sizes")->delimiter(',');
  auto* verify = app.add_subcommand("verify", "Run the oracle batteries");
  add_common(*verify, cfg, format, kind);
  verify->add_option("--kappa", cfg.kappa, "Override the constant kappa in the bounds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hc::kSuccess : hc::kInputError;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    cfg.seed = hc::resolve_seed(cfg.seed, std::getenv("HETEROSELECT_SEED"));
    cfg.format = hc::format_from_string(format);
    cfg.kind = heteroselect::risk_kind_from_string(kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hc::kInputError;
  }
  if (cfg.command == "fit" || cfg.command == "verify") cfg.format = hc::Format::Json;

  hc::CommandResult result;
  try {
    result = hc::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hc::kRuntimeError;
  }

  for (const auto& w : result.warnings) std::cerr << w << "\n";
  if (cfg.output.empty()) {
    std::cout << result.text;
  } else {
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot open output file '" << cfg.output << "'\n";
      return hc::kInputError;
    }
    out << result.text;
  }
  return result.exit_code;
}
