#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "heteroselect/errors.hpp"
#include "heteroselect/simlab.hpp"

using namespace heteroselect;

namespace {

Scenario flat_scenario() {
  return Scenario{"flat", [](double) { return 1.0; }, [](double) { return 1.5; }, 1.0};
}

void check_same(const RiskReport& a, const RiskReport& b) {
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.replications == b.replications);
  CHECK(a.degenerate == b.degenerate);
}

}  // namespace

TEST_CASE("builtin scenarios") {
  const auto all = builtin_scenarios();
  REQUIRE(all.size() == 4);
  const auto& m1 = all[0];
  CHECK(m1.mean_fn(0.1) == 4.0);
  CHECK(m1.var_fn(0.1) == 2.0);
  CHECK(m1.mean_fn(0.3) == 0.0);
  CHECK(m1.mean_fn(0.6) == 2.0);
  CHECK(m1.mean_fn(1.0) == 1.0);
  CHECK(m1.var_fn(0.5) == 1.0);

  const auto m2 = sample_truth(all[1], 1024);
  CHECK(*std::max_element(m2.sigma.begin(), m2.sigma.end()) /
            *std::min_element(m2.sigma.begin(), m2.sigma.end()) ==
        1.0);
  CHECK(all[1].true_gamma == 1.0);

  CHECK(all[2].true_gamma == doctest::Approx(7.0 / 3.0));
  CHECK(all[2].var_fn(0.8) == doctest::Approx(0.5 + 2.0 / 3.0 * std::sin(std::numbers::pi)));
  CHECK(all[3].var_fn(0.75) == doctest::Approx(1.0));
  CHECK(all[3].mean_fn(0.9) == doctest::Approx(1.0));

  for (const auto& s : all) CHECK_NOTHROW(sample_truth(s, 1024));

  CHECK_THROWS_AS(scenario_by_name("M9"), InvalidArgument);
  Scenario bad{"bad", [](double) { return 0.0; }, [](double x) { return 1.0 + 9.0 * x; }, 2.0};
  CHECK_THROWS_AS(sample_truth(bad, 64), InvalidArgument);
  Scenario zero{"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, 1.0};
  CHECK_THROWS_AS(sample_truth(zero, 64), InvalidArgument);
}

TEST_CASE("M1 is exactly representable by the (k_m = 1, d_m = 2) model") {
  const auto truth = sample_truth(scenario_by_name("M1"), 1024);
  CHECK(best_approx(Model(1024, 1, 2), truth).bias == doctest::Approx(0.0).scale(1.0));
  CHECK(best_approx(Model(1024, 1, 1), truth).bias > 1.0);
  CHECK(best_approx(Model(1024, 0, 4), truth).bias > 1.0);
}

TEST_CASE("sample: deterministic with a fixed consumption order") {
  const auto truth = sample_truth(scenario_by_name("M4"), 16);
  auto a = SeedPolicy{5}.stream(3);
  auto b = SeedPolicy{5}.stream(3);
  const auto oa = sample(truth, a);
  const auto ob = sample(truth, b);
  CHECK(oa.y1 == ob.y1);
  CHECK(oa.y2 == ob.y2);

  auto c = SeedPolicy{5}.stream(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(32);
  for (auto& x : z) x = normal(c);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(oa.y1[i] == truth.s[i] + std::sqrt(truth.sigma[i]) * z[i]);
    CHECK(oa.y2[i] == truth.s[i] + std::sqrt(truth.sigma[i]) * z[16 + i]);
  }

  auto d = SeedPolicy{5}.stream(4);
  CHECK(sample(truth, d).y1 != oa.y1);
}

TEST_CASE("sample: empirical means converge to the scenario mean") {
  const std::size_t n = 8;
  const auto truth = sample_truth(scenario_by_name("M4"), n);
  const SeedPolicy seeds{123};
  const auto draws = run_replications(100000, ExecPolicy::parallel(), [&](std::size_t r) {
    auto rng = seeds.stream(r);
    return sample(truth, rng).y1;
  });
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(draws.size());
    for (std::size_t r = 0; r < draws.size(); ++r) col[r] = draws[r][i];
    const auto rep = summarize(col, RiskKind::Kullback);
    CHECK(std::abs(rep.estimate - truth.s[i]) <= 4.0 * rep.std_error);
  }
}

TEST_CASE("summarize: std_error is sd / sqrt(reps)") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto rep = summarize(v, RiskKind::QuadraticMean);
  CHECK(rep.estimate == doctest::Approx(2.5));
  CHECK(rep.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(rep.replications == 4);
}

TEST_CASE("mc_risk: plugging in the truth gives zero risk") {
  const auto scenario = scenario_by_name("M3");
  const auto truth = sample_truth(scenario, 64);
  CustomEstimator oracle{[&](const Observations&) { return std::pair{truth.s, truth.sigma}; }};
  for (auto kind : {RiskKind::Kullback, RiskKind::QuadraticMean, RiskKind::QuadraticVariance}) {
    const auto rep = mc_risk(scenario, 64, oracle, kind, McOptions{10, SeedPolicy{1}, {}});
    CHECK(rep.estimate == 0.0);
    CHECK(rep.std_error == 0.0);
  }
}

TEST_CASE("mc_risk: singleton selection equals the fixed model on the same seeds") {
  const auto scenario = scenario_by_name("M2");
  const auto collection = build_collection({16, 1.0, 2.0, 0.01, 3.0});
  REQUIRE(collection.size() == 1);
  const McOptions opts{400, SeedPolicy{8}, {}};
  const auto sel = mc_risk(scenario, 16, SelectionTarget{collection, PenaltySpec{}},
                           RiskKind::Kullback, opts);
  const auto fixed = mc_risk(scenario, 16, FixedModel{collection[0]}, RiskKind::Kullback, opts);
  check_same(sel, fixed);
}

TEST_CASE("mc_risk: single-model risk lies in the sandwich for a representable truth") {
  const auto scenario = flat_scenario();
  const auto truth = sample_truth(scenario, 256);
  for (const Model& m : {Model(256, 0, 1), Model(256, 1, 2), Model(256, 2, 4)}) {
    const auto rep = mc_risk(scenario, 256, FixedModel{m}, RiskKind::Kullback,
                             McOptions{2000, SeedPolicy{17}, {}});
    const auto b = prop1_bounds(m, truth, 1.0, 2.0);
    CHECK(rep.estimate >= b.lower - 3.0 * rep.std_error);
    CHECK(rep.estimate <= b.upper + 3.0 * rep.std_error);
  }
}

TEST_CASE("mc_risk: degenerate data exceeds the redraw budget") {
  const Scenario tiny{"tiny", [](double) { return 0.0; }, [](double) { return 1e-30; }, 1.0};
  CHECK_THROWS_AS(mc_risk(tiny, 64, FixedModel{Model(64, 0, 1)}, RiskKind::Kullback,
                          McOptions{10, SeedPolicy{1}, {}}),
                  DegenerateVariance);
  CHECK_THROWS_AS(mc_risk(flat_scenario(), 64, FixedModel{Model(64, 0, 1)}, RiskKind::Kullback,
                          McOptions{1, SeedPolicy{1}, {}}),
                  InvalidArgument);
}

TEST_CASE("serial and parallel replication kernels agree bit for bit") {
  const auto scenario = scenario_by_name("M4");
  const auto collection = build_collection({256, 2.0, 2.0, 0.01, 3.0});
  const Target target = SelectionTarget{collection, PenaltySpec{2.0, 2.0, 0.01, {}}};
  const auto serial =
      mc_risk(scenario, 256, target, RiskKind::Kullback, McOptions{300, SeedPolicy{4}, ExecPolicy::serial()});
  for (int threads : {1, 2, 3, 8}) {
    const auto par = mc_risk(scenario, 256, target, RiskKind::Kullback,
                             McOptions{300, SeedPolicy{4}, ExecPolicy::parallel(threads)});
    check_same(serial, par);
  }

  const auto direct = run_replications_serial(50, [](std::size_t r) { return r * r; });
  CHECK(run_replications_parallel(50, 4, [](std::size_t r) { return r * r; }) == direct);
}

TEST_CASE("parallel kernel rethrows the smallest failing replication") {
  auto fn = [](std::size_t r) -> int {
    if (r == 7 || r == 30) throw std::runtime_error(std::to_string(r));
    return 0;
  };
  try {
    run_replications_parallel(40, 4, fn);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
}

TEST_CASE("oracle_risk") {
  SUBCASE("singleton") {
    const std::vector<Model> one{Model(64, 1, 1)};
    const auto o = oracle_risk(scenario_by_name("M2"), 64, one, RiskKind::Kullback,
                               McOptions{50, SeedPolicy{2}, {}});
    CHECK(o.best == one[0]);
  }
  SUBCASE("M1 oracle is the minimal containing model and matches per-model mc_risk") {
    const auto scenario = scenario_by_name("M1");
    const auto collection = build_collection({1024, 2.0, 2.0, 0.01, 3.0});
    const McOptions opts{300, SeedPolicy{21}, {}};
    const auto o = oracle_risk(scenario, 1024, collection, RiskKind::Kullback, opts);
    CHECK(o.best == Model(1024, 1, 2));
    for (std::size_t j = 0; j < collection.size(); ++j) {
      CHECK(o.report.estimate <= o.per_model[j].estimate);
    }
    for (std::size_t j : {std::size_t{0}, o.best_index, collection.size() - 1}) {
      check_same(o.per_model[j],
                 mc_risk(scenario, 1024, FixedModel{collection[j]}, RiskKind::Kullback, opts));
    }
  }
  CHECK_THROWS_AS(oracle_risk(scenario_by_name("M1"), 64, std::vector<Model>{}, RiskKind::Kullback,
                              McOptions{}),
                  EmptyCollection);
}

TEST_CASE("ratio_table: cells agree with stand-alone selection risk on shared seeds") {
  const std::vector<Scenario> scenarios{scenario_by_name("M1"), scenario_by_name("M3")};
  const std::vector<double> grid{1.0, 2.5};
  const McOptions opts{60, SeedPolicy{31}, {}};
  const TableParams params{};
  const auto table = ratio_table(scenarios, grid, params, RiskKind::QuadraticMean, opts);
  REQUIRE(table.cells.size() == 4);
  REQUIRE(table.oracles.size() == 2);
  for (const auto& cell : table.cells) {
    const auto s = scenario_by_name(cell.scenario);
    const CollectionConfig cfg{params.n, cell.gamma, params.theta, params.epsilon, params.delta};
    const auto rep = mc_risk(s, params.n,
                             SelectionTarget{build_collection(cfg),
                                             PenaltySpec{cell.gamma, params.theta, params.epsilon, {}}},
                             RiskKind::QuadraticMean, opts);
    check_same(cell.selected, rep);
    const auto& oracle = cell.scenario == "M1" ? table.oracles[0].oracle : table.oracles[1].oracle;
    CHECK(cell.ratio == doctest::Approx(rep.estimate / oracle.report.estimate).epsilon(1e-14));
    CHECK(cell.std_error >= 0.0);
  }
  CHECK_THROWS_AS(ratio_table(scenarios, std::vector<double>{}, params, RiskKind::Kullback, opts),
                  InvalidArgument);
}

TEST_CASE("ratio_table: two replications still produce a table") {
  const std::vector<Scenario> scenarios{scenario_by_name("M2")};
  const auto table =
      ratio_table(scenarios, kDefaultGammaGrid, TableParams{}, RiskKind::Kullback,
                  McOptions{2, SeedPolicy{1}, {}});
  CHECK(table.cells.size() == 5);
  for (const auto& c : table.cells) CHECK(std::isfinite(c.ratio));
}

TEST_CASE("oracle does not beat selection beyond noise on shared seeds") {
  const auto scenario = scenario_by_name("M4");
  const auto collection = build_collection({1024, 2.0, 2.0, 0.01, 3.0});
  const McOptions opts{200, SeedPolicy{64}, {}};
  const auto o = oracle_risk(scenario, 1024, collection, RiskKind::Kullback, opts);
  const auto sel = mc_risk(scenario, 1024, SelectionTarget{collection, PenaltySpec{2.0, 2.0, 0.01, {}}},
                           RiskKind::Kullback, opts);
  const double se = std::hypot(o.report.std_error, sel.std_error);
  CHECK(o.report.estimate <= sel.estimate + 3.0 * se);
}

TEST_CASE("selection_frequency") {
  const auto scenario = scenario_by_name("M1");
  const CollectionConfig cfg{256, 2.0, 2.0, 0.01, 3.0};
  const auto always =
      selection_frequency(scenario, cfg, [](const Model&) { return true; }, McOptions{1000, SeedPolicy{3}, {}});
  CHECK(always.frequency == 1.0);
  CHECK(always.replications == 1000);
  CHECK_THROWS_AS(selection_frequency(scenario, cfg, [](const Model&) { return true; },
                                      McOptions{999, SeedPolicy{3}, {}}),
                  InvalidArgument);
}

TEST_CASE("convergence_experiment") {
  const auto holder = lipschitz_scenario();
  const CollectionConfig params{256, 2.0, 2.0, 0.01, 3.0};

  SUBCASE("guards") {
    const std::vector<std::size_t> single{256};
    CHECK_THROWS_AS(convergence_experiment(holder, single, params, McOptions{20, {}, {}}),
                    InvalidArgument);
    const std::vector<std::size_t> small{32, 64};
    CHECK_THROWS_AS(convergence_experiment(holder, small, params, McOptions{20, {}, {}}),
                    InvalidArgument);
    const std::vector<std::size_t> unsorted{512, 256};
    CHECK_THROWS_AS(convergence_experiment(holder, unsorted, params, McOptions{20, {}, {}}),
                    InvalidArgument);
    CHECK(convergence_threshold(holder, 256, 0.01) == doctest::Approx(std::exp(4.0 * 1.01 * 1.01)));
  }

  SUBCASE("normalized risk is the Kullback risk divided by n") {
    const std::vector<std::size_t> grid{256, 512};
    const McOptions opts{50, SeedPolicy{9}, {}};
    const auto res = convergence_experiment(holder, grid, params, opts);
    REQUIRE(res.points.size() == 2);
    CHECK(res.target_slope == doctest::Approx(-2.0 / 3.0));
    for (const auto& p : res.points) {
      CollectionConfig cfg = params;
      cfg.n = p.n;
      McOptions local = opts;
      local.seeds = opts.seeds.derive(p.n);
      const auto raw = mc_risk(holder.scenario, p.n,
                               SelectionTarget{build_collection(cfg), PenaltySpec{2.0, 2.0, 0.01, {}}},
                               RiskKind::Kullback, local);
      CHECK(p.normalized.estimate == raw.estimate / static_cast<double>(p.n));
    }
  }

  SUBCASE("constant functions: normalized risk falls with n") {
    HolderScenario constant{flat_scenario(), 1.0, 1.0, 1.0, 1.0};
    const std::vector<std::size_t> grid{256, 1024, 4096};
    const auto res = convergence_experiment(constant, grid, CollectionConfig{256, 1.0, 2.0, 0.01, 3.0},
                                            McOptions{100, SeedPolicy{2}, {}});
    CHECK(res.points[0].normalized.estimate > res.points[1].normalized.estimate);
    CHECK(res.points[1].normalized.estimate > res.points[2].normalized.estimate);
  }

  SUBCASE("doubling reps roughly halves the squared standard error") {
    const auto scenario = scenario_by_name("M2");
    const Model m(256, 0, 4);
    const auto a = mc_risk(scenario, 256, FixedModel{m}, RiskKind::Kullback, McOptions{2000, SeedPolicy{5}, {}});
    const auto b = mc_risk(scenario, 256, FixedModel{m}, RiskKind::Kullback, McOptions{4000, SeedPolicy{5}, {}});
    const double ratio = (b.std_error * b.std_error) / (a.std_error * a.std_error);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
  }
}
