#include "heteroselect/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "heteroselect/errors.hpp"
#include "heteroselect/summation.hpp"

namespace heteroselect {

namespace {

constexpr double kPi = std::numbers::pi;

// Redraws allowed for a single replication before giving up on it.
constexpr std::size_t kMaxRedraws = 16;

// Fraction of replications allowed to need a redraw.
constexpr double kDegenerateBudget = 1e-3;

template <class T>
struct Slot {
  T value{};
  std::size_t degenerate = 0;
};

// Runs `eval` on one draw per replication, redrawing from the same stream
// when a block variance is degenerate. Returns per-replication values in
// index order and the number of redraws.
template <class Eval>
auto replicate(const TruthSpec& truth, const McOptions& opts, Eval&& eval) {
  using T = std::invoke_result_t<Eval&, const Observations&>;
  if (opts.reps < 1) throw InvalidArgument("at least one replication is required");

  auto slots = run_replications(opts.reps, opts.exec, [&](std::size_t r) {
    auto rng = opts.seeds.stream(r);
    for (std::size_t attempt = 0;; ++attempt) {
      const auto obs = sample(truth, rng);
      try {
        return Slot<T>{eval(obs), attempt};
      } catch (const DegenerateVariance&) {
        if (attempt + 1 >= kMaxRedraws) throw;
      }
    }
  });

  std::vector<T> values;
  values.reserve(slots.size());
  std::size_t degenerate = 0;
  for (auto& s : slots) {
    values.push_back(std::move(s.value));
    degenerate += s.degenerate;
  }
  if (static_cast<double>(degenerate) > kDegenerateBudget * static_cast<double>(opts.reps)) {
    throw DegenerateVariance(std::to_string(degenerate) + " degenerate draws over " +
                             std::to_string(opts.reps) + " replications exceeds the 0.1% budget");
  }
  return std::pair{std::move(values), degenerate};
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = rows[r][j];
  return out;
}

double sample_sd(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size() - 1));
}

// Canonically sorted union of several collections.
std::vector<Model> merge_collections(const std::vector<std::vector<Model>>& parts) {
  std::vector<Model> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  std::sort(out.begin(), out.end(), canonical_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> positions_in(const std::vector<Model>& sub,
                                      const std::vector<Model>& all) {
  std::vector<std::size_t> out;
  out.reserve(sub.size());
  for (const auto& m : sub) {
    out.push_back(static_cast<std::size_t>(std::find(all.begin(), all.end(), m) - all.begin()));
  }
  return out;
}

}  // namespace

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;
  out.push_back(Scenario{
      "M1",
      [](double x) {
        if (x < 0.25) return 4.0;
        if (x < 0.5) return 0.0;
        if (x < 0.75) return 2.0;
        return 1.0;
      },
      [](double x) { return x < 0.5 ? 2.0 : 1.0; }, 2.0});
  out.push_back(Scenario{"M2", [](double x) { return 1.0 + std::sin(2.0 * kPi * x + kPi / 3.0); },
                         [](double) { return 1.0; }, 1.0});
  out.push_back(Scenario{"M3", [](double x) { return 1.5 * x; },
                         [](double x) {
                           const double c = std::min(x, 0.5);
                           return 0.5 + 2.0 * std::sin(4.0 * kPi * c * c) / 3.0;
                         },
                         7.0 / 3.0});
  out.push_back(Scenario{"M4",
                         [](double x) { return 1.0 + std::sin(4.0 * kPi * std::min(x, 0.5)); },
                         [](double x) { return (3.0 + std::sin(2.0 * kPi * x)) / 2.0; }, 2.0});
  return out;
}

HolderScenario lipschitz_scenario() {
  Scenario s{"lipschitz", [](double x) { return std::abs(2.0 * x - 1.0); },
             [](double x) { return 1.0 + x; }, 2.0};
  return HolderScenario{std::move(s), 1.0, 1.0, 2.0, 1.0};
}

Scenario scenario_by_name(std::string_view name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  if (name == "lipschitz") return lipschitz_scenario().scenario;
  throw InvalidArgument("unknown scenario '" + std::string(name) +
                        "' (expected M1, M2, M3, M4 or lipschitz)");
}

TruthSpec sample_truth(const Scenario& scenario, std::size_t n) {
  exact_log2(n);
  TruthSpec truth{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = design_point(i, n);
    truth.s[i] = scenario.mean_fn(x);
    truth.sigma[i] = scenario.var_fn(x);
    if (!(truth.sigma[i] > 0.0)) {
      throw InvalidArgument("scenario " + scenario.name + " has a nonpositive variance at x = " +
                            std::to_string(x));
    }
  }
  const auto [lo, hi] = std::minmax_element(truth.sigma.begin(), truth.sigma.end());
  if (*hi / *lo > scenario.true_gamma * (1.0 + 1e-12)) {
    throw InvalidArgument("scenario " + scenario.name + " exceeds its declared gamma");
  }
  return truth;
}

Observations sample(const TruthSpec& truth, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = truth.n();
  Observations obs{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) obs.y1[i] = truth.s[i] + std::sqrt(truth.sigma[i]) * normal(rng);
  for (std::size_t i = 0; i < n; ++i) obs.y2[i] = truth.s[i] + std::sqrt(truth.sigma[i]) * normal(rng);
  return obs;
}

Observations sample(const Scenario& scenario, std::size_t n, std::mt19937_64& rng) {
  return sample(sample_truth(scenario, n), rng);
}

std::string_view to_string(RiskKind kind) {
  switch (kind) {
    case RiskKind::Kullback: return "kullback";
    case RiskKind::QuadraticMean: return "quadratic_mean";
    case RiskKind::QuadraticVariance: return "quadratic_variance";
  }
  return "unknown";
}

RiskKind risk_kind_from_string(std::string_view name) {
  if (name == "kullback") return RiskKind::Kullback;
  if (name == "quadratic_mean") return RiskKind::QuadraticMean;
  if (name == "quadratic_variance") return RiskKind::QuadraticVariance;
  throw InvalidArgument("unknown risk kind '" + std::string(name) +
                        "' (expected kullback, quadratic_mean or quadratic_variance)");
}

double loss(RiskKind kind, const TruthSpec& truth, std::span<const double> mean,
            std::span<const double> variance) {
  auto squared_error = [](std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("loss: length mismatch");
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - b[i]) * (a[i] - b[i]);
    return pairwise_sum(sq);
  };
  switch (kind) {
    case RiskKind::Kullback: return kl_divergence(truth, mean, variance);
    case RiskKind::QuadraticMean: return squared_error(truth.s, mean);
    case RiskKind::QuadraticVariance: return squared_error(truth.sigma, variance);
  }
  throw InvalidArgument("unknown risk kind");
}

RiskReport summarize(std::span<const double> values, RiskKind kind, std::size_t degenerate) {
  RiskReport rep;
  rep.kind = kind;
  rep.replications = values.size();
  rep.degenerate = degenerate;
  rep.estimate = pairwise_mean(values);
  rep.std_error = sample_sd(values, rep.estimate) / std::sqrt(static_cast<double>(values.size()));
  return rep;
}

RiskReport mc_risk(const Scenario& scenario, std::size_t n, const Target& target, RiskKind kind,
                   const McOptions& opts) {
  if (opts.reps < 2) throw InvalidArgument("mc_risk requires at least 2 replications");
  const auto truth = sample_truth(scenario, n);

  auto eval = [&](const Observations& obs) -> double {
    return std::visit(
        [&](const auto& t) -> double {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, FixedModel>) {
            const auto est = fit(t.model, obs);
            return loss(kind, truth, est.mean, est.variance);
          } else if constexpr (std::is_same_v<T, SelectionTarget>) {
            const auto sel = select(t.collection, obs, t.penalty);
            return loss(kind, truth, sel.estimate.mean, sel.estimate.variance);
          } else {
            const auto [mean, variance] = t.fn(obs);
            return loss(kind, truth, mean, variance);
          }
        },
        target);
  };

  const auto [values, degenerate] = replicate(truth, opts, eval);
  return summarize(values, kind, degenerate);
}

namespace {

// Per-replication losses of every model in `collection`.
std::pair<std::vector<std::vector<double>>, std::size_t> model_losses(
    const TruthSpec& truth, std::span<const Model> collection, RiskKind kind,
    const McOptions& opts) {
  return replicate(truth, opts, [&](const Observations& obs) {
    std::vector<double> out(collection.size());
    for (std::size_t j = 0; j < collection.size(); ++j) {
      const auto est = fit(collection[j], obs);
      out[j] = loss(kind, truth, est.mean, est.variance);
    }
    return out;
  });
}

OracleResult oracle_from_losses(std::span<const Model> collection,
                                const std::vector<std::vector<double>>& losses, RiskKind kind,
                                std::size_t degenerate) {
  std::vector<RiskReport> per_model;
  std::vector<double> estimates;
  for (std::size_t j = 0; j < collection.size(); ++j) {
    per_model.push_back(summarize(column(losses, j), kind, degenerate));
    estimates.push_back(per_model.back().estimate);
  }
  const auto best = argmin_criterion(collection, estimates);
  return OracleResult{collection[best], best, per_model[best], std::move(per_model)};
}

}  // namespace

OracleResult oracle_risk(const Scenario& scenario, std::size_t n,
                         std::span<const Model> collection, RiskKind kind,
                         const McOptions& opts) {
  if (collection.empty()) throw EmptyCollection("oracle over an empty collection");
  if (opts.reps < 2) throw InvalidArgument("oracle_risk requires at least 2 replications");
  const auto truth = sample_truth(scenario, n);
  const auto [losses, degenerate] = model_losses(truth, collection, kind, opts);
  return oracle_from_losses(collection, losses, kind, degenerate);
}

RatioTable ratio_table(std::span<const Scenario> scenarios, std::span<const double> gamma_grid,
                       const TableParams& params, RiskKind kind, const McOptions& opts) {
  if (gamma_grid.empty()) throw InvalidArgument("gamma grid is empty");
  if (scenarios.empty()) throw InvalidArgument("no scenarios given");
  if (opts.reps < 2) throw InvalidArgument("ratio_table requires at least 2 replications");

  auto config_for = [&](double gamma) {
    return CollectionConfig{params.n, gamma, params.theta, params.epsilon, params.delta};
  };

  RatioTable table{kind, {}, {}};
  for (const auto& scenario : scenarios) {
    const auto truth = sample_truth(scenario, params.n);

    std::vector<std::vector<Model>> parts;
    parts.push_back(build_collection(config_for(scenario.true_gamma)));
    for (double g : gamma_grid) parts.push_back(build_collection(config_for(g)));
    const auto all = merge_collections(parts);

    const auto oracle_pos = positions_in(parts[0], all);
    std::vector<std::vector<std::size_t>> grid_pos;
    std::vector<std::vector<double>> grid_pen;
    for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
      grid_pos.push_back(positions_in(parts[g + 1], all));
      const PenaltySpec spec{gamma_grid[g], params.theta, params.epsilon, {}};
      std::vector<double> pens;
      for (const auto& m : parts[g + 1]) pens.push_back(penalty(m, spec));
      grid_pen.push_back(std::move(pens));
    }

    // Each row: losses of the oracle collection, then one selected loss per gamma.
    const auto [rows, degenerate] = replicate(truth, opts, [&](const Observations& obs) {
      std::vector<double> lik(all.size());
      std::vector<double> mloss(all.size());
      for (std::size_t j = 0; j < all.size(); ++j) {
        const auto est = fit(all[j], obs);
        lik[j] = log_likelihood(obs.y1, est.mean, est.variance);
        mloss[j] = loss(kind, truth, est.mean, est.variance);
      }
      std::vector<double> row;
      row.reserve(oracle_pos.size() + gamma_grid.size());
      for (auto p : oracle_pos) row.push_back(mloss[p]);
      for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
        std::vector<double> crit(grid_pos[g].size());
        for (std::size_t k = 0; k < crit.size(); ++k) crit[k] = lik[grid_pos[g][k]] + grid_pen[g][k];
        row.push_back(mloss[grid_pos[g][argmin_criterion(parts[g + 1], crit)]]);
      }
      return row;
    });

    std::vector<std::vector<double>> oracle_rows(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      oracle_rows[r].assign(rows[r].begin(),
                            rows[r].begin() + static_cast<std::ptrdiff_t>(oracle_pos.size()));
    }
    auto oracle = oracle_from_losses(parts[0], oracle_rows, kind, degenerate);
    const auto oracle_values = column(oracle_rows, oracle.best_index);
    const double denom = oracle.report.estimate;

    for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
      const auto selected_values = column(rows, oracle_pos.size() + g);
      auto selected = summarize(selected_values, kind, degenerate);
      const double ratio = selected.estimate / denom;
      // Delta method on common random numbers: se of mean(a - ratio * b) / mean(b).
      std::vector<double> lin(selected_values.size());
      for (std::size_t r = 0; r < lin.size(); ++r) {
        lin[r] = selected_values[r] - ratio * oracle_values[r];
      }
      const double se = sample_sd(lin, pairwise_mean(lin)) /
                        std::sqrt(static_cast<double>(lin.size())) / denom;
      table.cells.push_back(RatioCell{scenario.name, gamma_grid[g], ratio, se, selected});
    }
    table.oracles.push_back(ScenarioOracle{scenario.name, std::move(oracle)});
  }
  return table;
}

FrequencyReport selection_frequency(const Scenario& scenario, const CollectionConfig& cfg,
                                    const std::function<bool(const Model&)>& predicate,
                                    const McOptions& opts) {
  if (opts.reps < 1000) throw InvalidArgument("selection_frequency requires reps >= 1000");
  const auto collection = build_collection(cfg);
  const PenaltySpec spec{cfg.gamma, cfg.theta, cfg.epsilon, {}};
  const auto truth = sample_truth(scenario, cfg.n);
  const auto [hits, degenerate] = replicate(truth, opts, [&](const Observations& obs) {
    return predicate(select(collection, obs, spec).chosen) ? 1.0 : 0.0;
  });
  const auto rep = summarize(hits, RiskKind::Kullback, degenerate);
  return FrequencyReport{rep.estimate, rep.std_error, rep.replications};
}

double convergence_threshold(const HolderScenario& holder, std::size_t n, double epsilon) {
  const auto truth = sample_truth(holder.scenario, n);
  const double sigma_min = *std::min_element(truth.sigma.begin(), truth.sigma.end());
  const double l1 = holder.lipschitz_mean;
  const double l2 = holder.lipschitz_var;
  const double base = 2.0 * sigma_min * sigma_min / (l1 * l1 * sigma_min + l2 * l2);
  return std::max(base * base, std::exp(4.0 * (1.0 + epsilon) * (1.0 + epsilon)));
}

ConvergenceResult convergence_experiment(const HolderScenario& holder,
                                         std::span<const std::size_t> n_grid,
                                         const CollectionConfig& params, const McOptions& opts) {
  if (n_grid.size() < 2) throw InvalidArgument("the n grid needs at least two sizes to fit a slope");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    exact_log2(n_grid[i]);
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw InvalidArgument("the n grid must be strictly increasing");
    }
    const double threshold = convergence_threshold(holder, n_grid[i], params.epsilon);
    if (static_cast<double>(n_grid[i]) < threshold) {
      throw InvalidArgument("n = " + std::to_string(n_grid[i]) +
                            " is below the convergence threshold " + std::to_string(threshold));
    }
  }

  ConvergenceResult result{};
  std::vector<double> xs;
  std::vector<double> ys;
  for (auto n : n_grid) {
    CollectionConfig cfg = params;
    cfg.n = n;
    SelectionTarget target{build_collection(cfg), PenaltySpec{cfg.gamma, cfg.theta, cfg.epsilon, {}}};
    McOptions local = opts;
    local.seeds = opts.seeds.derive(n);
    auto rep = mc_risk(holder.scenario, n, target, RiskKind::Kullback, local);
    const double nd = static_cast<double>(n);
    rep.estimate /= nd;
    rep.std_error /= nd;
    result.points.push_back(ConvergencePoint{n, rep});
    xs.push_back(std::log(nd / log_pow(nd, 1.0 + params.epsilon)));
    ys.push_back(std::log(rep.estimate));
  }

  const double mx = pairwise_mean(xs);
  const double my = pairwise_mean(ys);
  std::vector<double> sxy(xs.size());
  std::vector<double> sxx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
  }
  result.slope = pairwise_sum(sxy) / pairwise_sum(sxx);
  result.intercept = my - result.slope * mx;
  const double alpha = std::min(holder.alpha_mean, holder.alpha_var);
  result.target_slope = -2.0 * alpha / (2.0 * alpha + 1.0);
  return result;
}

}  // namespace heteroselect
