#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "heteroselect/estimation.hpp"
#include "heteroselect/model_space.hpp"
#include "heteroselect/simlab.hpp"

namespace heteroselect {

/// Z = sum_i (a_i + sqrt(b_i) z_i)^2 with z standard Gaussian.
struct InverseMomentCase {
  std::vector<double> a;
  std::vector<double> b;

  std::size_t n() const { return a.size(); }
  /// n > 2, equal lengths, b > 0.
  void validate() const;
};

struct InverseMomentCheck {
  double mc_estimate;  ///< Monte Carlo E[1/Z]
  double std_error;
  double bound;        ///< (1/E[Z]) (1 + 2 kappa (b*/b_*)^2 / (n - 2))
  double expected_z;   ///< exact E[Z] = sum(a^2 + b)
  double mc_z;         ///< Monte Carlo E[Z]
  double mc_z_std_error;
  bool holds;          ///< mc_estimate <= bound + 3 se
};

/// Requires reps >= 10^4.
InverseMomentCheck lemma11_check(const InverseMomentCase& c, const McOptions& opts,
                                 double kappa = kKappa);

struct CompressionCheck {
  /// Nonzero eigenvalues of P Sigma P, one per fine block (block means of sigma).
  std::vector<double> eigenvalues;
  double tau_min;
  double tau_max;
  bool holds;  ///< min sigma <= tau_min and tau_max <= max sigma
};

/// Eigenvalue bounds for P diag(sigma) P where P projects onto the model's
/// mean space.
CompressionCheck lemma10_check(std::span<const double> sigma_diag, const Model& m);

struct CheckOutcome {
  std::string name;
  bool passed;
  std::string detail;
};

/// The exact chi-square case (a = 0, b = 1, n = 4) followed by `cases`
/// random cases with b*/b_* <= 5 and n in [4, 64].
std::vector<CheckOutcome> lemma11_battery(const SeedPolicy& seeds, std::size_t cases,
                                          std::size_t reps, const ExecPolicy& exec,
                                          double kappa = kKappa);

/// Random (sigma, model) pairs with n in {4, ..., 256}.
std::vector<CheckOutcome> lemma10_battery(const SeedPolicy& seeds, std::size_t cases);

/// For every model of the collection, the Monte Carlo Kullback risk lies in
/// [lower - 3 se, upper + 3 se] of prop1_bounds.
std::vector<CheckOutcome> risk_sandwich(const Scenario& scenario, const CollectionConfig& cfg,
                                        const McOptions& opts, double kappa = kKappa);

/// Empirical mean of each block variance estimate against
/// sigma_{m,I} (1 - rho_I), within `tolerance_se` standard errors.
std::vector<CheckOutcome> block_variance_expectation(const Scenario& scenario, const Model& m,
                                                     const McOptions& opts,
                                                     double tolerance_se = 4.0);

}  // namespace heteroselect
