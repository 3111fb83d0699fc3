#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "heteroselect/estimation.hpp"
#include "heteroselect/simlab.hpp"

namespace heteroselect::cli {

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeError = 1,
  kInputError = 2,
  kVerificationFailure = 3,
};

enum class Format { Csv, Json };

Format format_from_string(const std::string& name);

/// Everything a subcommand needs. Zero `reps` selects the command's default.
struct RunConfig {
  std::string command;
  std::size_t n = 1024;
  double gamma = 2.0;
  double theta = 2.0;
  double epsilon = 0.01;
  double delta = 3.0;
  std::uint64_t seed = 20090101;
  std::size_t reps = 0;
  std::vector<std::string> scenarios;
  RiskKind kind = RiskKind::Kullback;
  std::string input;
  std::string output;
  Format format = Format::Csv;
  bool truncate = false;
  bool quiet = false;
  int threads = 0;
  std::vector<double> gamma_grid = kDefaultGammaGrid;
  std::vector<std::size_t> n_grid{256, 512, 1024, 2048, 4096, 8192, 16384};
  double kappa = kKappa;

  McOptions mc_options(std::size_t default_reps) const;
};

/// HETEROSELECT_SEED, when set to an unsigned integer, overrides the flag.
std::uint64_t resolve_seed(std::uint64_t flag_seed, const char* env_value);

/// Reads a `y1,y2` CSV. A row count that is not a power of two is an error
/// unless `truncate` is set, in which case the data is cut to the largest
/// power of two and a warning is appended.
Observations read_observations_csv(std::istream& in, bool truncate,
                                   std::vector<std::string>& warnings);

std::string write_observations_csv(const Observations& obs);

struct CommandResult {
  std::string text;
  int exit_code = kSuccess;
  std::vector<std::string> warnings;
};

/// Penalized selection on user data; JSON with the chosen model, the
/// estimates, the criterion and (unless quiet) the per-model audit.
CommandResult cmd_fit(const RunConfig& cfg, const Observations& obs);

/// Draws one pair of replicates from a scenario as `y1,y2` CSV.
CommandResult cmd_simulate(const RunConfig& cfg);

/// Ratio of selected-estimator risk to oracle risk per scenario and gamma.
CommandResult cmd_table(const RunConfig& cfg);

/// Normalized Kullback risk over the n grid and the fitted log-log slope.
CommandResult cmd_convergence(const RunConfig& cfg);

/// Oracle batteries and the single-model risk sandwich; JSON report.
CommandResult cmd_verify(const RunConfig& cfg);

/// Dispatches on cfg.command, reading cfg.input for `fit`. Maps library
/// exceptions to exit codes.
CommandResult run(const RunConfig& cfg);

}  // namespace heteroselect::cli
