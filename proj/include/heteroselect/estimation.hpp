#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "heteroselect/model_space.hpp"

namespace heteroselect {

/// Block variance estimates below this value are rejected as degenerate.
inline constexpr double kVarianceFloor = 1e-12;

/// kappa = 1 + 2/e, the constant shared by the single-model risk bound and
/// the inverse-moment bound.
inline const double kKappa = 1.0 + 2.0 / std::numbers::e;

/// Two independent replicates of the same Gaussian vector.
struct Observations {
  std::vector<double> y1;
  std::vector<double> y2;

  std::size_t n() const { return y1.size(); }
  /// Equal lengths, length a power of two.
  void validate() const;
};

/// The true parameters (s, sigma). sigma holds variances, not deviations.
struct TruthSpec {
  std::vector<double> s;
  std::vector<double> sigma;

  std::size_t n() const { return s.size(); }
  void validate() const;
};

/// A pair (mean, variance) attached to the model it lives in. The mean is
/// constant on fine blocks, the variance on coarse blocks; `block_variance`
/// holds the one value per coarse block.
struct Estimate {
  Model model;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> block_variance;
};

/// log u + 1/u - 1.
double phi(double u);

/// Kullback-Leibler divergence K(P_{s,sigma}, P_{mean,variance}).
double kl_divergence(const TruthSpec& truth, std::span<const double> mean,
                     std::span<const double> variance);

/// 1/2 sum[(y1_i - mean_i)^2 / variance_i + log variance_i]. Smaller is
/// better; the n/2 log(2 pi) constant is omitted.
double log_likelihood(std::span<const double> y1, std::span<const double> mean,
                      std::span<const double> variance);

/// Mean from y1 by projection, variance from the residuals of y2 averaged
/// over each coarse block. Throws DegenerateVariance if a block variance
/// falls below kVarianceFloor.
Estimate fit(const Model& m, const Observations& obs);

struct BestApproximation {
  Estimate pair;
  /// K(P_{s,sigma}, P_{s_m,sigma_m}) via the log-ratio form.
  double bias;
};

/// Minimizer of the divergence over S_m x Sigma_m, and the attained bias.
BestApproximation best_approx(const Model& m, const TruthSpec& truth);

/// E[sigma_hat_{m,I}] = sigma_{m,I} (1 - rho_I) for every coarse block I.
std::vector<double> expected_block_variance(const Model& m, const TruthSpec& truth);

struct RiskBounds {
  double lower;
  double upper;
};

/// Single-model Kullback risk sandwich:
/// max(bias, D_m / (4 gamma)) <= E[K] <= bias + kappa gamma^2 theta^2 D_m.
/// Throws InvalidArgument if the model is too large for (gamma, theta).
RiskBounds prop1_bounds(const Model& m, const TruthSpec& truth, double gamma, double theta,
                        double kappa = kKappa);

}  // namespace heteroselect
