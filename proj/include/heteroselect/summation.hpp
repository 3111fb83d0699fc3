#pragma once

#include <cstddef>
#include <span>

namespace heteroselect {

/// Pairwise (tree) summation. The result depends only on the values and their
/// order, so reductions are reproducible regardless of how they are scheduled.
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 8;
  if (xs.size() <= kLeaf) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double pairwise_mean(std::span<const double> xs) {
  return xs.empty() ? 0.0 : pairwise_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace heteroselect
