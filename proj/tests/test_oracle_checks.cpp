#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "heteroselect/errors.hpp"
#include "heteroselect/oracle_checks.hpp"

using namespace heteroselect;

namespace {

// Dense orthogonal projector onto vectors constant on the model's fine blocks.
Eigen::MatrixXd projector(const Model& m) {
  const auto& fine = m.fine();
  const auto n = static_cast<Eigen::Index>(m.n());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  const double w = 1.0 / static_cast<double>(fine.block_size());
  for (std::size_t b = 0; b < fine.block_count(); ++b) {
    const auto begin = static_cast<Eigen::Index>(fine.block_begin(b));
    const auto size = static_cast<Eigen::Index>(fine.block_size());
    p.block(begin, begin, size, size).setConstant(w);
  }
  return p;
}

// Nonzero eigenvalues of P diag(sigma) P, ascending.
std::vector<double> dense_eigenvalues(const std::vector<double>& sigma, const Model& m) {
  const Eigen::MatrixXd p = projector(m);
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(sigma.data(),
                                                              static_cast<Eigen::Index>(sigma.size()));
  const Eigen::MatrixXd a = p * s.asDiagonal() * p;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  std::vector<double> ev(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + solver.eigenvalues().size());
  const auto rank = static_cast<std::ptrdiff_t>(m.fine().block_count());
  return {ev.end() - rank, ev.end()};
}

}  // namespace

TEST_CASE("lemma10_check: closed form matches a dense eigen-decomposition") {
  SUBCASE("2 x 2 averaging") {
    const std::vector<double> sigma{1.0, 2.0};
    const auto res = lemma10_check(sigma, Model(2, 0, 1));
    REQUIRE(res.eigenvalues.size() == 1);
    CHECK(res.eigenvalues[0] == doctest::Approx(1.5));
    CHECK(dense_eigenvalues(sigma, Model(2, 0, 1))[0] == doctest::Approx(1.5));
    CHECK(res.holds);
  }
  SUBCASE("identity projector") {
    const std::vector<double> sigma{1.0, 2.0};
    const auto res = lemma10_check(sigma, Model(2, 0, 2));
    CHECK(res.eigenvalues == std::vector<double>{1.0, 2.0});
    CHECK(res.tau_min == 1.0);
    CHECK(res.tau_max == 2.0);
    CHECK(res.holds);
  }
  SUBCASE("constant variance") {
    const std::vector<double> sigma(16, 3.0);
    const auto res = lemma10_check(sigma, Model(16, 1, 2));
    for (double t : res.eigenvalues) CHECK(t == 3.0);
  }
  SUBCASE("random cases") {
    std::mt19937_64 gen(1234);
    std::uniform_real_distribution<double> var(0.1, 10.0);
    for (int t = 0; t < 100; ++t) {
      const std::size_t n = std::size_t{1} << std::uniform_int_distribution<int>(1, 6)(gen);
      const unsigned kn = exact_log2(n);
      const unsigned k = std::uniform_int_distribution<unsigned>(0, kn)(gen);
      const Model m(n, k, std::size_t{1} << std::uniform_int_distribution<unsigned>(0, kn - k)(gen));
      std::vector<double> sigma(n);
      for (auto& s : sigma) s = var(gen);

      const auto res = lemma10_check(sigma, m);
      CHECK(res.holds);
      auto closed = res.eigenvalues;
      std::sort(closed.begin(), closed.end());
      const auto dense = dense_eigenvalues(sigma, m);
      REQUIRE(dense.size() == closed.size());
      for (std::size_t i = 0; i < closed.size(); ++i) {
        CHECK(closed[i] == doctest::Approx(dense[i]).epsilon(1e-10));
      }

      // Trace of P Sigma P equals the sum of the nonzero eigenvalues.
      const Eigen::MatrixXd p = projector(m);
      const Eigen::VectorXd s =
          Eigen::Map<const Eigen::VectorXd>(sigma.data(), static_cast<Eigen::Index>(n));
      double sum = 0.0;
      for (double x : closed) sum += x;
      CHECK((p * s.asDiagonal() * p).trace() == doctest::Approx(sum).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(lemma10_check(std::vector<double>{1.0}, Model(2, 0, 1)), InvalidArgument);
  CHECK_THROWS_AS(lemma10_check(std::vector<double>{1.0, 0.0}, Model(2, 0, 1)), InvalidArgument);
}

TEST_CASE("lemma10_battery passes") {
  for (const auto& c : lemma10_battery(SeedPolicy{10}, 100)) {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("lemma11_check: chi-square with four degrees of freedom") {
  const InverseMomentCase exact{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
  const auto res = lemma11_check(exact, McOptions{40000, SeedPolicy{3}, {}});
  CHECK(res.bound == doctest::Approx(0.6839397205857212).epsilon(1e-14));
  CHECK(res.expected_z == 4.0);
  CHECK(std::abs(res.mc_estimate - 0.5) <= 4.0 * res.std_error);
  CHECK(std::abs(res.mc_z - 4.0) <= 4.0 * res.mc_z_std_error);
  CHECK(res.holds);
}

TEST_CASE("lemma11_check: scaling b by c scales estimate and bound by 1/c") {
  const InverseMomentCase base{{0.5, -1.0, 0.0, 2.0, 0.3}, {1.0, 2.0, 1.5, 3.0, 1.0}};
  const double c = 4.0;
  InverseMomentCase scaled = base;
  for (auto& a : scaled.a) a *= std::sqrt(c);
  for (auto& b : scaled.b) b *= c;
  const McOptions opts{10000, SeedPolicy{8}, {}};
  const auto r1 = lemma11_check(base, opts);
  const auto r2 = lemma11_check(scaled, opts);
  CHECK(r2.mc_estimate == doctest::Approx(r1.mc_estimate / c).epsilon(1e-12));
  CHECK(r2.bound == doctest::Approx(r1.bound / c).epsilon(1e-12));
  CHECK(r2.expected_z == doctest::Approx(r1.expected_z * c).epsilon(1e-12));
  CHECK(std::abs(r1.mc_z - r1.expected_z) <= 4.0 * r1.mc_z_std_error);
}

TEST_CASE("lemma11_check guards") {
  const McOptions opts{10000, SeedPolicy{1}, {}};
  CHECK_THROWS_AS(lemma11_check({{0, 0}, {1, 1}}, opts), InvalidArgument);
  CHECK_THROWS_AS(lemma11_check({{0, 0, 0}, {1, 1}}, opts), InvalidArgument);
  CHECK_THROWS_AS(lemma11_check({{0, 0, 0}, {1, 0, 1}}, opts), InvalidArgument);
  CHECK_THROWS_AS(lemma11_check({{0, 0, 0}, {1, 1, 1}}, McOptions{9999, {}, {}}), InvalidArgument);
}

TEST_CASE("lemma11_battery") {
  const auto outcomes = lemma11_battery(SeedPolicy{11}, 50, 20000, ExecPolicy::parallel());
  REQUIRE(outcomes.size() == 51);
  for (const auto& c : outcomes) {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }

  // With kappa well below its true value the exact case can no longer pass.
  const auto weak = lemma11_battery(SeedPolicy{11}, 0, 20000, ExecPolicy::parallel(), -0.9);
  CHECK_FALSE(weak[0].passed);
}

TEST_CASE("risk_sandwich holds for a small collection") {
  const auto outcomes = risk_sandwich(scenario_by_name("M2"), CollectionConfig{256, 1.0, 2.0, 0.01, 3.0},
                                      McOptions{1000, SeedPolicy{12}, {}});
  REQUIRE(!outcomes.empty());
  for (const auto& c : outcomes) {
    INFO(c.name << " " << c.detail);
    CHECK(c.passed);
  }
}

TEST_CASE("block_variance_expectation flags a wrong expectation") {
  const auto ok = block_variance_expectation(scenario_by_name("M4"), Model(64, 1, 4),
                                             McOptions{100000, SeedPolicy{13}, {}});
  REQUIRE(ok.size() == 2);
  for (const auto& c : ok) {
    INFO(c.detail);
    CHECK(c.passed);
  }
  // A zero tolerance cannot be met by a Monte Carlo mean.
  const auto strict = block_variance_expectation(scenario_by_name("M4"), Model(64, 1, 4),
                                                 McOptions{1000, SeedPolicy{13}, {}}, 0.0);
  CHECK_FALSE(strict[0].passed);
}
