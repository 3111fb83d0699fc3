#include "heteroselect/model_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "heteroselect/errors.hpp"
#include "heteroselect/summation.hpp"

namespace heteroselect {

bool is_power_of_two(std::size_t n) { return std::has_single_bit(n); }

unsigned exact_log2(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw InvalidArgument("expected a power of two, got " + std::to_string(n));
  }
  return static_cast<unsigned>(std::countr_zero(n));
}

double log_pow(double x, double power) {
  if (!(x > 1.0)) {
    throw InvalidArgument("log_pow requires x > 1");
  }
  return std::exp(power * std::log(std::log(x)));
}

DyadicPartition::DyadicPartition(std::size_t n, unsigned level) : n_(n), level_(level) {
  const unsigned kn = exact_log2(n);
  if (level > kn) {
    throw InvalidArgument("partition level " + std::to_string(level) + " exceeds log2(n) = " +
                          std::to_string(kn));
  }
}

bool DyadicPartition::is_refined_by(const DyadicPartition& finer) const {
  return n_ == finer.n_ && level_ <= finer.level_;
}

namespace {

unsigned fine_level(std::size_t n, unsigned coarse_level, std::size_t per_block_dim) {
  const unsigned kn = exact_log2(n);
  if (coarse_level > kn) {
    throw InvalidArgument("coarse level exceeds log2(n)");
  }
  if (!is_power_of_two(per_block_dim)) {
    throw InvalidArgument("per-block dimension must be a power of two, got " +
                          std::to_string(per_block_dim));
  }
  const unsigned extra = exact_log2(per_block_dim);
  if (coarse_level + extra > kn) {
    throw InvalidArgument("per-block dimension " + std::to_string(per_block_dim) +
                          " exceeds the coarse block size " +
                          std::to_string(n >> coarse_level));
  }
  return coarse_level + extra;
}

}  // namespace

Model::Model(std::size_t n, unsigned coarse_level, std::size_t per_block_dim)
    : coarse_(n, coarse_level),
      per_block_dim_(per_block_dim),
      fine_(n, fine_level(n, coarse_level, per_block_dim)) {}

bool canonical_less(const Model& a, const Model& b) {
  if (a.dimension() != b.dimension()) return a.dimension() < b.dimension();
  return a.coarse_blocks() < b.coarse_blocks();
}

void CollectionConfig::validate() const {
  if (!is_power_of_two(n) || n < 2) {
    throw InvalidArgument("n must be a power of two >= 2, got " + std::to_string(n));
  }
  if (!(gamma >= 1.0)) throw InvalidArgument("gamma must be >= 1");
  if (!(theta > 1.0)) throw InvalidArgument("theta must be > 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
}

bool satisfies_dimension_hypothesis(std::size_t dimension, std::size_t n, double gamma,
                                    double theta) {
  return static_cast<double>(n) >=
         theta / (theta - 1.0) * (gamma + 2.0) * static_cast<double>(dimension);
}

std::vector<Model> build_collection(const CollectionConfig& cfg) {
  cfg.validate();
  const unsigned kn = exact_log2(cfg.n);
  const double nd = static_cast<double>(cfg.n);
  const double dim_cap = 5.0 * cfg.delta * cfg.gamma * nd / log_pow(nd, 1.0 + cfg.epsilon);

  std::vector<Model> out;
  for (unsigned k = 0; k <= kn; ++k) {
    for (std::size_t d = 1; d <= (cfg.n >> k); d <<= 1) {
      Model m(cfg.n, k, d);
      const auto dim = m.dimension();
      if (satisfies_dimension_hypothesis(dim, cfg.n, cfg.gamma, cfg.theta) &&
          static_cast<double>(dim) <= dim_cap) {
        out.push_back(m);
      }
    }
  }
  if (out.empty()) {
    throw EmptyCollection("no admissible model for n = " + std::to_string(cfg.n) +
                          "; increase n or relax gamma/theta/delta");
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<double> project(const Model& m, std::span<const double> y) {
  if (y.size() != m.n()) {
    throw InvalidArgument("projection input has length " + std::to_string(y.size()) +
                          ", model expects " + std::to_string(m.n()));
  }
  const auto& fine = m.fine();
  const std::size_t size = fine.block_size();
  std::vector<double> out(y.size());
  for (std::size_t b = 0; b < fine.block_count(); ++b) {
    const std::size_t begin = fine.block_begin(b);
    const double mean = pairwise_mean(y.subspan(begin, size));
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(begin), size, mean);
  }
  return out;
}

std::vector<double> projection_diagonal(const Model& m) {
  return std::vector<double>(m.n(), 1.0 / static_cast<double>(m.fine().block_size()));
}

}  // namespace heteroselect
