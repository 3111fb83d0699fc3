#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "heteroselect/estimation.hpp"
#include "heteroselect/model_space.hpp"

namespace heteroselect {

/// pen(m) = gamma * theta * D_m + x_m. Without a custom weight,
/// x_m = D_m log^{1+epsilon} D_m, which gives (gamma theta + log^{1+eps} D_m) D_m.
struct PenaltySpec {
  double gamma = 1.0;
  double theta = 2.0;
  double epsilon = 0.01;
  /// Optional nonnegative weight x_m.
  std::function<double(const Model&)> extra_weight;

  void validate() const;
};

double default_weight(const Model& m, double epsilon);

double penalty(const Model& m, const PenaltySpec& spec);

struct CriterionEntry {
  Model model;
  double likelihood;
  double penalty;
  double criterion;
};

struct SelectionResult {
  Model chosen;
  /// Position of `chosen` in the collection passed to select().
  std::size_t chosen_index;
  Estimate estimate;
  double criterion_value;
  std::vector<CriterionEntry> per_model;
};

/// Index of the smallest criterion; ties go to the canonically smallest model.
std::size_t argmin_criterion(std::span<const Model> models, std::span<const double> criteria);

/// Minimizes likelihood + penalty over the collection. Propagates
/// DegenerateVariance from fit(); throws EmptyCollection on an empty input.
SelectionResult select(std::span<const Model> collection, const Observations& obs,
                       const PenaltySpec& spec);

}  // namespace heteroselect
