#include "heteroselect/oracle_checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "heteroselect/errors.hpp"
#include "heteroselect/summation.hpp"

namespace heteroselect {

void InverseMomentCase::validate() const {
  if (a.size() != b.size()) throw InvalidArgument("inverse-moment case: length mismatch");
  if (a.size() <= 2) throw InvalidArgument("inverse-moment case needs n > 2");
  for (double x : b) {
    if (!(x > 0.0)) throw InvalidArgument("inverse-moment case needs b > 0");
  }
}

InverseMomentCheck lemma11_check(const InverseMomentCase& c, const McOptions& opts,
                                 double kappa) {
  c.validate();
  if (opts.reps < 10000) throw InvalidArgument("lemma11_check requires reps >= 10^4");

  const std::size_t n = c.n();
  std::vector<double> sqrt_b(n);
  for (std::size_t i = 0; i < n; ++i) sqrt_b[i] = std::sqrt(c.b[i]);

  const auto draws = run_replications(opts.reps, opts.exec, [&](std::size_t r) {
    auto rng = opts.seeds.stream(r);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = c.a[i] + sqrt_b[i] * normal(rng);
      terms[i] = v * v;
    }
    return pairwise_sum(terms);
  });

  std::vector<double> inverse(draws.size());
  for (std::size_t r = 0; r < draws.size(); ++r) inverse[r] = 1.0 / draws[r];
  const auto inv = summarize(inverse, RiskKind::Kullback);
  const auto z = summarize(draws, RiskKind::Kullback);

  std::vector<double> moments(n);
  for (std::size_t i = 0; i < n; ++i) moments[i] = c.a[i] * c.a[i] + c.b[i];
  const double expected_z = pairwise_sum(moments);

  const auto [b_lo, b_hi] = std::minmax_element(c.b.begin(), c.b.end());
  const double ratio = *b_hi / *b_lo;
  const double bound =
      (1.0 + 2.0 * kappa * ratio * ratio / static_cast<double>(n - 2)) / expected_z;

  return InverseMomentCheck{inv.estimate, inv.std_error, bound,    expected_z,
                            z.estimate,   z.std_error,   inv.estimate <= bound + 3.0 * inv.std_error};
}

CompressionCheck lemma10_check(std::span<const double> sigma_diag, const Model& m) {
  if (sigma_diag.size() != m.n()) throw InvalidArgument("lemma10_check: length mismatch");
  for (double s : sigma_diag) {
    if (!(s > 0.0)) throw InvalidArgument("lemma10_check needs positive variances");
  }
  const auto& fine = m.fine();
  CompressionCheck out;
  out.eigenvalues.resize(fine.block_count());
  for (std::size_t b = 0; b < fine.block_count(); ++b) {
    out.eigenvalues[b] = pairwise_mean(sigma_diag.subspan(fine.block_begin(b), fine.block_size()));
  }
  const auto [tau_lo, tau_hi] = std::minmax_element(out.eigenvalues.begin(), out.eigenvalues.end());
  const auto [s_lo, s_hi] = std::minmax_element(sigma_diag.begin(), sigma_diag.end());
  out.tau_min = *tau_lo;
  out.tau_max = *tau_hi;
  out.holds = *s_lo <= out.tau_min && out.tau_max <= *s_hi;
  return out;
}

std::vector<CheckOutcome> lemma11_battery(const SeedPolicy& seeds, std::size_t cases,
                                          std::size_t reps, const ExecPolicy& exec,
                                          double kappa) {
  std::vector<CheckOutcome> out;

  {
    InverseMomentCase exact{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
    const auto res = lemma11_check(exact, McOptions{reps, seeds.derive(0), exec}, kappa);
    // chi-square with 4 degrees of freedom: E[1/Z] = 1/(4 - 2).
    const bool near_exact = std::abs(res.mc_estimate - 0.5) <= 4.0 * res.std_error;
    out.push_back(CheckOutcome{
        "lemma11/exact_chi2_4", res.holds && near_exact,
        fmt::format("mc={:.6f} se={:.6f} exact=0.5 bound={:.6f}", res.mc_estimate,
                    res.std_error, res.bound)});
  }

  auto gen = seeds.derive(1).stream(0);
  std::uniform_int_distribution<std::size_t> size_dist(4, 64);
  std::uniform_real_distribution<double> scale_dist(1.0, 5.0);
  std::normal_distribution<double> offset_dist(0.0, 1.0);
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t n = size_dist(gen);
    InverseMomentCase c{std::vector<double>(n), std::vector<double>(n)};
    const double base = scale_dist(gen);
    for (std::size_t i = 0; i < n; ++i) {
      c.b[i] = base * scale_dist(gen);
      c.a[i] = offset_dist(gen);
    }
    const auto res = lemma11_check(c, McOptions{reps, seeds.derive(100 + k), exec}, kappa);
    out.push_back(CheckOutcome{fmt::format("lemma11/random_{:02}", k), res.holds,
                               fmt::format("n={} mc={:.6g} se={:.3g} bound={:.6g}", n,
                                           res.mc_estimate, res.std_error, res.bound)});
  }
  return out;
}

std::vector<CheckOutcome> lemma10_battery(const SeedPolicy& seeds, std::size_t cases) {
  std::vector<CheckOutcome> out;
  auto gen = seeds.stream(0);
  std::uniform_int_distribution<unsigned> level_dist(2, 8);
  std::uniform_real_distribution<double> var_dist(0.1, 10.0);
  for (std::size_t k = 0; k < cases; ++k) {
    const std::size_t n = std::size_t{1} << level_dist(gen);
    const unsigned kn = exact_log2(n);
    std::uniform_int_distribution<unsigned> coarse_dist(0, kn);
    const unsigned coarse = coarse_dist(gen);
    std::uniform_int_distribution<unsigned> dim_dist(0, kn - coarse);
    const Model m(n, coarse, std::size_t{1} << dim_dist(gen));
    std::vector<double> sigma(n);
    for (auto& s : sigma) s = var_dist(gen);
    const auto res = lemma10_check(sigma, m);
    out.push_back(CheckOutcome{fmt::format("lemma10/random_{:03}", k), res.holds,
                               fmt::format("n={} k_m={} d_m={} tau=[{:.6g}, {:.6g}]", n,
                                           m.coarse_level(), m.per_block_dim(), res.tau_min,
                                           res.tau_max)});
  }
  return out;
}

std::vector<CheckOutcome> risk_sandwich(const Scenario& scenario, const CollectionConfig& cfg,
                                        const McOptions& opts, double kappa) {
  const auto collection = build_collection(cfg);
  const auto truth = sample_truth(scenario, cfg.n);
  const auto oracle = oracle_risk(scenario, cfg.n, collection, RiskKind::Kullback, opts);
  std::vector<CheckOutcome> out;
  for (std::size_t j = 0; j < collection.size(); ++j) {
    const auto& m = collection[j];
    const auto& rep = oracle.per_model[j];
    const auto bounds = prop1_bounds(m, truth, cfg.gamma, cfg.theta, kappa);
    const bool ok = rep.estimate >= bounds.lower - 3.0 * rep.std_error &&
                    rep.estimate <= bounds.upper + 3.0 * rep.std_error;
    out.push_back(CheckOutcome{
        fmt::format("sandwich/{}/k{}_d{}", scenario.name, m.coarse_level(), m.per_block_dim()), ok,
        fmt::format("risk={:.4f} se={:.4f} lower={:.4f} upper={:.4f}", rep.estimate,
                    rep.std_error, bounds.lower, bounds.upper)});
  }
  return out;
}

std::vector<CheckOutcome> block_variance_expectation(const Scenario& scenario, const Model& m,
                                                     const McOptions& opts,
                                                     double tolerance_se) {
  const auto truth = sample_truth(scenario, m.n());
  const auto expected = expected_block_variance(m, truth);
  const auto draws = run_replications(opts.reps, opts.exec, [&](std::size_t r) {
    auto rng = opts.seeds.stream(r);
    return fit(m, sample(truth, rng)).block_variance;
  });
  std::vector<CheckOutcome> out;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    std::vector<double> values(draws.size());
    for (std::size_t r = 0; r < draws.size(); ++r) values[r] = draws[r][b];
    const auto rep = summarize(values, RiskKind::QuadraticVariance);
    const bool ok = std::abs(rep.estimate - expected[b]) <= tolerance_se * rep.std_error;
    out.push_back(CheckOutcome{
        fmt::format("sigma_hat_mean/{}/k{}_d{}/block{}", scenario.name, m.coarse_level(),
                    m.per_block_dim(), b),
        ok,
        fmt::format("mc={:.6f} se={:.6f} expected={:.6f}", rep.estimate, rep.std_error,
                    expected[b])});
  }
  return out;
}

}  // namespace heteroselect
