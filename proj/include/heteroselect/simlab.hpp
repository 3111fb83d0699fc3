#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "heteroselect/estimation.hpp"
#include "heteroselect/model_space.hpp"
#include "heteroselect/parallel.hpp"
#include "heteroselect/rng.hpp"
#include "heteroselect/selector.hpp"

namespace heteroselect {

/// A regression function pair on [0, 1]. var_fn returns variances.
struct Scenario {
  std::string name;
  std::function<double(double)> mean_fn;
  std::function<double(double)> var_fn;
  double true_gamma = 1.0;
};

/// The four reference scenarios M1..M4.
std::vector<Scenario> builtin_scenarios();

/// Scenario with Hölder exponents and constants for the mean and variance.
struct HolderScenario {
  Scenario scenario;
  double alpha_mean = 1.0;
  double alpha_var = 1.0;
  double lipschitz_mean = 1.0;
  double lipschitz_var = 1.0;
};

/// s(x) = |2x - 1|, sigma(x) = 1 + x: both Lipschitz, gamma = 2.
HolderScenario lipschitz_scenario();

/// Looks up M1..M4 or "lipschitz". Throws InvalidArgument on unknown names.
Scenario scenario_by_name(std::string_view name);

/// Design point of 0-based index i: the left endpoint i/n of its cell.
inline double design_point(std::size_t i, std::size_t n) {
  return static_cast<double>(i) / static_cast<double>(n);
}

/// Samples (s, sigma) on the design grid. Throws InvalidArgument if a
/// variance is nonpositive or the sampled ratio exceeds true_gamma.
TruthSpec sample_truth(const Scenario& scenario, std::size_t n);

/// y^[j]_i = s_i + sqrt(sigma_i) z^[j]_i. y1 consumes the first n normal
/// draws of the stream, y2 the next n.
Observations sample(const TruthSpec& truth, std::mt19937_64& rng);
Observations sample(const Scenario& scenario, std::size_t n, std::mt19937_64& rng);

enum class RiskKind { Kullback, QuadraticMean, QuadraticVariance };

std::string_view to_string(RiskKind kind);
RiskKind risk_kind_from_string(std::string_view name);

/// Per-replication loss of an estimate (mean, variance) against the truth.
double loss(RiskKind kind, const TruthSpec& truth, std::span<const double> mean,
            std::span<const double> variance);

struct RiskReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t replications = 0;
  RiskKind kind = RiskKind::Kullback;
  /// Draws rejected for a degenerate block variance and redrawn.
  std::size_t degenerate = 0;
};

/// Mean and standard error of per-replication values, reduced in index order.
RiskReport summarize(std::span<const double> values, RiskKind kind, std::size_t degenerate = 0);

struct McOptions {
  std::size_t reps = 500;
  SeedPolicy seeds{};
  ExecPolicy exec{};
};

struct FixedModel {
  Model model;
};

struct SelectionTarget {
  std::vector<Model> collection;
  PenaltySpec penalty;
};

/// Arbitrary estimator, mainly for harness tests.
struct CustomEstimator {
  std::function<std::pair<std::vector<double>, std::vector<double>>(const Observations&)> fn;
};

using Target = std::variant<FixedModel, SelectionTarget, CustomEstimator>;

/// Monte Carlo risk of one estimator. Degenerate draws are redrawn from the
/// same replication stream; more than 0.1% of reps degenerate is an error.
RiskReport mc_risk(const Scenario& scenario, std::size_t n, const Target& target, RiskKind kind,
                   const McOptions& opts);

struct OracleResult {
  Model best;
  std::size_t best_index;
  RiskReport report;
  /// Per-model reports on shared seeds, in collection order.
  std::vector<RiskReport> per_model;
};

/// Risk of every fixed model on common random numbers, and the minimizer.
OracleResult oracle_risk(const Scenario& scenario, std::size_t n,
                         std::span<const Model> collection, RiskKind kind,
                         const McOptions& opts);

struct TableParams {
  std::size_t n = 1024;
  double theta = 2.0;
  double epsilon = 0.01;
  double delta = 3.0;
};

inline const std::vector<double> kDefaultGammaGrid{1.0, 1.5, 2.0, 2.5, 3.0};

struct RatioCell {
  std::string scenario;
  double gamma;
  double ratio;
  double std_error;
  RiskReport selected;
};

struct ScenarioOracle {
  std::string scenario;
  OracleResult oracle;
};

struct RatioTable {
  RiskKind kind;
  std::vector<RatioCell> cells;
  std::vector<ScenarioOracle> oracles;
};

/// Risk of the selected estimator for each gamma, divided by the oracle risk
/// (the oracle uses each scenario's true gamma). All models and all gamma
/// values share the same replication streams.
RatioTable ratio_table(std::span<const Scenario> scenarios, std::span<const double> gamma_grid,
                       const TableParams& params, RiskKind kind, const McOptions& opts);

struct FrequencyReport {
  double frequency;
  double std_error;
  std::size_t replications;
};

/// Fraction of replications whose selected model satisfies `predicate`.
/// Requires reps >= 1000.
FrequencyReport selection_frequency(const Scenario& scenario, const CollectionConfig& cfg,
                                    const std::function<bool(const Model&)>& predicate,
                                    const McOptions& opts);

/// Smallest n admitted by the uniform-rate result for this scenario at size n
/// (sigma_* is read off the sampled grid).
double convergence_threshold(const HolderScenario& holder, std::size_t n, double epsilon);

struct ConvergencePoint {
  std::size_t n;
  /// Kullback risk divided by n.
  RiskReport normalized;
};

struct ConvergenceResult {
  std::vector<ConvergencePoint> points;
  /// Least-squares slope of log K_n against log(n / log^{1+eps} n).
  double slope;
  double intercept;
  /// -2 alpha / (2 alpha + 1) with alpha = min of the two exponents.
  double target_slope;
};

/// `params.n` is ignored; each grid size gets its own collection and its own
/// derived seed policy.
ConvergenceResult convergence_experiment(const HolderScenario& holder,
                                         std::span<const std::size_t> n_grid,
                                         const CollectionConfig& params, const McOptions& opts);

}  // namespace heteroselect
