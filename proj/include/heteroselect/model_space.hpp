#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace heteroselect {

bool is_power_of_two(std::size_t n);

/// Exponent k with 2^k == n. Throws InvalidArgument if n is not a power of two.
unsigned exact_log2(std::size_t n);

/// log(x)^power, evaluated as exp(power * log(log(x))). Requires x > 1.
double log_pow(double x, double power);

/// Regular partition of {0, ..., n-1} into 2^level consecutive blocks of
/// equal size. Indices are 0-based throughout the library.
class DyadicPartition {
 public:
  DyadicPartition(std::size_t n, unsigned level);

  std::size_t n() const { return n_; }
  unsigned level() const { return level_; }
  std::size_t block_count() const { return std::size_t{1} << level_; }
  std::size_t block_size() const { return n_ >> level_; }
  std::size_t block_begin(std::size_t block) const { return block * block_size(); }
  std::size_t block_of(std::size_t index) const { return index / block_size(); }

  /// True if every block of *this is a union of blocks of `finer`.
  bool is_refined_by(const DyadicPartition& finer) const;

  friend bool operator==(const DyadicPartition&, const DyadicPartition&) = default;

 private:
  std::size_t n_;
  unsigned level_;
};

/// One model of the piecewise-constant collection: the variance lives on the
/// coarse partition (|p_m| = 2^k_m blocks) and the mean on its dyadic
/// refinement with d_m sub-blocks per coarse block.
class Model {
 public:
  /// Throws InvalidArgument unless d_m is a power of two with
  /// 1 <= d_m <= n / 2^k_m.
  Model(std::size_t n, unsigned coarse_level, std::size_t per_block_dim);

  std::size_t n() const { return coarse_.n(); }
  unsigned coarse_level() const { return coarse_.level(); }
  std::size_t per_block_dim() const { return per_block_dim_; }
  std::size_t coarse_blocks() const { return coarse_.block_count(); }
  /// D_m = |p_m| (d_m + 1).
  std::size_t dimension() const { return coarse_blocks() * (per_block_dim_ + 1); }

  const DyadicPartition& coarse() const { return coarse_; }
  const DyadicPartition& fine() const { return fine_; }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  DyadicPartition coarse_;
  std::size_t per_block_dim_;
  DyadicPartition fine_;
};

/// Canonical order: ascending D_m, then ascending |p_m|.
bool canonical_less(const Model& a, const Model& b);

struct CollectionConfig {
  std::size_t n = 1024;
  double gamma = 1.0;
  double theta = 2.0;
  double epsilon = 0.01;
  double delta = 3.0;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

/// n >= theta / (theta - 1) * (gamma + 2) * D_m.
bool satisfies_dimension_hypothesis(std::size_t dimension, std::size_t n, double gamma,
                                    double theta);

/// Every admissible (k_m, d_m) pair, in canonical order. Throws
/// EmptyCollection if the constraints filter out every model.
std::vector<Model> build_collection(const CollectionConfig& cfg);

/// Orthogonal projection onto the mean space: blockwise means over the fine
/// partition.
std::vector<double> project(const Model& m, std::span<const double> y);

/// Diagonal of the projection matrix: 1/|J| for the fine block J holding i.
std::vector<double> projection_diagonal(const Model& m);

}  // namespace heteroselect
