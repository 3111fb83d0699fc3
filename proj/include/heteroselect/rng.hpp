#pragma once

#include <cstdint>
#include <random>

namespace heteroselect {

/// SplitMix64 finalizer; used to derive independent seeds from (seed, tag).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Replication r always draws from the stream seeded by (master_seed, r), so
/// results do not depend on execution order or thread count.
struct SeedPolicy {
  std::uint64_t master_seed = 20090101;

  std::mt19937_64 stream(std::uint64_t replication) const {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(replication >> 32)};
    return std::mt19937_64(seq);
  }

  /// A policy for an unrelated experiment sharing the same master seed.
  SeedPolicy derive(std::uint64_t tag) const { return {mix64(master_seed ^ mix64(tag))}; }
};

}  // namespace heteroselect
