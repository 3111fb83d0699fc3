// Serial vs OpenMP timing of the Monte Carlo kernels.
//
//   bench_replications [reps] [threads]

#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>

#include <fmt/format.h>
#include <omp.h>

#include "heteroselect/simlab.hpp"

using namespace heteroselect;

namespace {

template <class Fn>
double seconds(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const std::string& name, const std::function<double(const ExecPolicy&)>& kernel,
            int threads) {
  double serial_value = 0.0;
  double parallel_value = 0.0;
  const double ts = seconds([&] { serial_value = kernel(ExecPolicy::serial()); });
  const double tp = seconds([&] { parallel_value = kernel(ExecPolicy::parallel(threads)); });
  fmt::print("{:<28} serial {:8.3f}s  parallel {:8.3f}s  speedup {:5.2f}x  {}\n", name, ts, tp,
             ts / tp, serial_value == parallel_value ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t reps = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200;
  const int threads = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();
  fmt::print("reps={} threads={}\n", reps, threads);

  const auto m4 = scenario_by_name("M4");
  const auto collection = build_collection({1024, 2.0, 2.0, 0.01, 3.0});
  const SeedPolicy seeds{1};

  report("mc_risk (selection)", [&](const ExecPolicy& exec) {
    return mc_risk(m4, 1024, SelectionTarget{collection, PenaltySpec{2.0, 2.0, 0.01, {}}},
                   RiskKind::Kullback, McOptions{reps, seeds, exec}).estimate;
  }, threads);

  report("oracle_risk", [&](const ExecPolicy& exec) {
    return oracle_risk(m4, 1024, collection, RiskKind::Kullback, McOptions{reps, seeds, exec})
        .report.estimate;
  }, threads);

  report("ratio_table (M1..M4)", [&](const ExecPolicy& exec) {
    const auto scenarios = builtin_scenarios();
    const auto t = ratio_table(scenarios, kDefaultGammaGrid, TableParams{}, RiskKind::Kullback,
                               McOptions{reps, seeds, exec});
    double sum = 0.0;
    for (const auto& c : t.cells) sum += c.ratio;
    return sum;
  }, threads);
  return 0;
}
