#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

#include <omp.h>

namespace heteroselect {

/// How replication loops are executed. Results never depend on the choice:
/// every replication owns its random stream and writes to its own slot, and
/// reductions happen afterwards in replication order.
struct ExecPolicy {
  enum class Mode { Serial, Parallel };
  Mode mode = Mode::Parallel;
  /// Thread count for Parallel; 0 keeps the OpenMP default.
  int threads = 0;

  static ExecPolicy serial() { return {Mode::Serial, 1}; }
  static ExecPolicy parallel(int threads = 0) { return {Mode::Parallel, threads}; }
};

/// Reference implementation: plain loop over replication indices.
template <class Fn>
auto run_replications_serial(std::size_t reps, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> out(reps);
  for (std::size_t r = 0; r < reps; ++r) out[r] = fn(r);
  return out;
}

/// OpenMP version of run_replications_serial. If several replications throw,
/// the exception of the smallest replication index is rethrown, matching
/// the serial loop.
template <class Fn>
auto run_replications_parallel(std::size_t reps, int threads, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> out(reps);
  std::vector<std::exception_ptr> errors(reps);
  const auto count = static_cast<std::ptrdiff_t>(reps);
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 4) num_threads(team)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    try {
      out[static_cast<std::size_t>(r)] = fn(static_cast<std::size_t>(r));
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

template <class Fn>
auto run_replications(std::size_t reps, const ExecPolicy& policy, Fn&& fn) {
  if (policy.mode == ExecPolicy::Mode::Serial) {
    return run_replications_serial(reps, std::forward<Fn>(fn));
  }
  return run_replications_parallel(reps, policy.threads, std::forward<Fn>(fn));
}

}  // namespace heteroselect
