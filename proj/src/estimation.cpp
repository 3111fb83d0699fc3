#include "heteroselect/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heteroselect/errors.hpp"
#include "heteroselect/summation.hpp"

namespace heteroselect {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

void require_positive(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!(x > 0.0)) throw InvalidArgument(std::string(what) + ": nonpositive variance entry");
  }
}

// Spreads one value per block of `part` over the full index range.
std::vector<double> expand_blocks(const DyadicPartition& part, std::span<const double> values) {
  std::vector<double> out(part.n());
  const std::size_t size = part.block_size();
  for (std::size_t b = 0; b < part.block_count(); ++b) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(part.block_begin(b)), size, values[b]);
  }
  return out;
}

}  // namespace

void Observations::validate() const {
  require_same_length(y1.size(), y2.size(), "observations");
  if (!is_power_of_two(y1.size())) {
    throw InvalidArgument("observation length " + std::to_string(y1.size()) +
                          " is not a power of two");
  }
}

void TruthSpec::validate() const {
  require_same_length(s.size(), sigma.size(), "truth");
  require_positive(sigma, "truth");
}

double phi(double u) {
  if (!(u > 0.0)) throw InvalidArgument("phi requires u > 0");
  return std::log(u) + 1.0 / u - 1.0;
}

double kl_divergence(const TruthSpec& truth, std::span<const double> mean,
                     std::span<const double> variance) {
  require_same_length(truth.s.size(), mean.size(), "kl_divergence");
  require_same_length(truth.sigma.size(), variance.size(), "kl_divergence");
  require_same_length(mean.size(), variance.size(), "kl_divergence");
  require_positive(variance, "kl_divergence");
  std::vector<double> terms(mean.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double diff = truth.s[i] - mean[i];
    terms[i] = diff * diff / variance[i] + phi(variance[i] / truth.sigma[i]);
  }
  return 0.5 * pairwise_sum(terms);
}

double log_likelihood(std::span<const double> y1, std::span<const double> mean,
                      std::span<const double> variance) {
  require_same_length(y1.size(), mean.size(), "log_likelihood");
  require_same_length(y1.size(), variance.size(), "log_likelihood");
  require_positive(variance, "log_likelihood");
  std::vector<double> terms(y1.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double diff = y1[i] - mean[i];
    terms[i] = diff * diff / variance[i] + std::log(variance[i]);
  }
  return 0.5 * pairwise_sum(terms);
}

Estimate fit(const Model& m, const Observations& obs) {
  require_same_length(obs.y1.size(), m.n(), "fit");
  require_same_length(obs.y2.size(), m.n(), "fit");

  auto mean = project(m, obs.y1);

  auto residual = project(m, obs.y2);
  for (std::size_t i = 0; i < residual.size(); ++i) {
    const double r = obs.y2[i] - residual[i];
    residual[i] = r * r;
  }

  const auto& coarse = m.coarse();
  std::vector<double> block_variance(coarse.block_count());
  for (std::size_t b = 0; b < block_variance.size(); ++b) {
    const std::span<const double> block(residual.data() + coarse.block_begin(b),
                                        coarse.block_size());
    block_variance[b] = pairwise_mean(block);
    if (!(block_variance[b] >= kVarianceFloor)) {
      throw DegenerateVariance("variance estimate on block " + std::to_string(b) +
                               " is below the floor; y2 is exactly in the mean space there");
    }
  }
  auto variance = expand_blocks(coarse, block_variance);
  return Estimate{m, std::move(mean), std::move(variance), std::move(block_variance)};
}

BestApproximation best_approx(const Model& m, const TruthSpec& truth) {
  truth.validate();
  require_same_length(truth.n(), m.n(), "best_approx");

  auto mean = project(m, truth.s);

  const auto& coarse = m.coarse();
  const std::size_t size = coarse.block_size();
  std::vector<double> terms(m.n());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double diff = truth.s[i] - mean[i];
    terms[i] = diff * diff + truth.sigma[i];
  }
  std::vector<double> block_variance(coarse.block_count());
  for (std::size_t b = 0; b < block_variance.size(); ++b) {
    block_variance[b] = pairwise_mean(std::span<const double>(terms).subspan(coarse.block_begin(b), size));
  }

  for (std::size_t i = 0; i < terms.size(); ++i) {
    terms[i] = std::log(block_variance[coarse.block_of(i)] / truth.sigma[i]);
  }
  const double bias = 0.5 * pairwise_sum(terms);

  auto variance = expand_blocks(coarse, block_variance);
  return BestApproximation{
      Estimate{m, std::move(mean), std::move(variance), std::move(block_variance)}, bias};
}

std::vector<double> expected_block_variance(const Model& m, const TruthSpec& truth) {
  const auto best = best_approx(m, truth);
  const auto diag = projection_diagonal(m);
  const auto& coarse = m.coarse();
  const std::size_t size = coarse.block_size();

  std::vector<double> weighted(m.n());
  for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] = diag[i] * truth.sigma[i];

  std::vector<double> out(coarse.block_count());
  for (std::size_t b = 0; b < out.size(); ++b) {
    const double sigma_block = best.pair.block_variance[b];
    const double rho =
        pairwise_sum(std::span<const double>(weighted).subspan(coarse.block_begin(b), size)) /
        (static_cast<double>(size) * sigma_block);
    out[b] = sigma_block * (1.0 - rho);
  }
  return out;
}

RiskBounds prop1_bounds(const Model& m, const TruthSpec& truth, double gamma, double theta,
                        double kappa) {
  if (!satisfies_dimension_hypothesis(m.dimension(), m.n(), gamma, theta)) {
    throw InvalidArgument("model dimension " + std::to_string(m.dimension()) +
                          " is too large for n = " + std::to_string(m.n()) +
                          " under the given gamma and theta");
  }
  const double bias = best_approx(m, truth).bias;
  const double dim = static_cast<double>(m.dimension());
  return RiskBounds{std::max(bias, dim / (4.0 * gamma)),
                    bias + kappa * gamma * gamma * theta * theta * dim};
}

}  // namespace heteroselect
