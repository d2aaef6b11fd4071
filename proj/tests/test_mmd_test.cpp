#include "catch_amalgamated.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "censored_mmd/mmd_test.hpp"
#include "censored_mmd/survival_sim.hpp"

using namespace censored_mmd;
using Catch::Approx;

namespace {

JGram random_gram(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> v(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) v[i * n + j] = v[j * n + i] = 2.0 * rng.uniform() - 1.0;
  }
  return JGram(n, std::move(v));
}

TransformedDataset null_sample(std::size_t n, std::uint64_t seed) {
  RandomStream stream(seed);
  return transform(sample_dataset(ConstantHazard{1.0}, 3.0 / 7.0, n, stream), exponential_null(1.0));
}

}  // namespace

TEST_CASE("v_statistic and u_statistic", "[mmd]") {
  CHECK(v_statistic(JGram(3, std::vector<double>(9, 0.0))) == 0.0);
  const double a = 0.7, b = -0.2;
  CHECK(v_statistic(JGram(2, {a, b, b, a})) == Approx((2 * a + 2 * b) / 4).epsilon(1e-15));

  std::vector<double> c(16, 0.3);
  for (std::size_t i = 0; i < 4; ++i) c[i * 4 + i] = 5.0;
  CHECK(u_statistic(JGram(4, c)) == Approx(0.3).epsilon(1e-15));

  const auto g = random_gram(8, 1);
  double all = 0.0, upper = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      all += g(i, j);
      if (i < j) upper += g(i, j);
    }
  }
  CHECK(v_statistic(g) == Approx(all / 64.0).epsilon(1e-14));
  CHECK(u_statistic(g) == Approx(upper / 28.0).epsilon(1e-14));
  CHECK_THROWS_AS(v_statistic(JGram(1, {1.0})), std::invalid_argument);
}

TEST_CASE("V/U identity on gram matrices of data", "[mmd]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = null_sample(10 + 5 * seed, seed);
    const auto gram = j_gram(data, KernelSpec(0.2 + 0.1 * static_cast<double>(seed)));
    const auto n = static_cast<double>(gram.size());
    const double lhs = n * n * v_statistic(gram);
    const double rhs = gram.trace() + n * (n - 1.0) * u_statistic(gram);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("draw_weights", "[mmd]") {
  RandomStream rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const auto m = draw_weights(WeightScheme::multinomial, 17, rng);
    CHECK(std::accumulate(m.begin(), m.end(), 0.0) == 0.0);
    for (double w : m) CHECK(w >= -1.0);
    for (double w : draw_weights(WeightScheme::rademacher, 17, rng)) CHECK(std::abs(w) == 1.0);
  }
  RandomStream big(3);
  const auto g = draw_weights(WeightScheme::gaussian, 1000000, big);
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / 1e6;
  double var = 0.0;
  for (double w : g) var += (w - mean) * (w - mean);
  var /= 1e6 - 1.0;
  CHECK(std::abs(mean) <= 3.0 / 1000.0);
  CHECK(std::abs(var - 1.0) <= 0.01);
  CHECK_THROWS_AS(draw_weights(WeightScheme::gaussian, 0, big), std::invalid_argument);
}

TEST_CASE("bootstrap_statistic", "[mmd]") {
  const auto g = random_gram(9, 4);
  CHECK(bootstrap_statistic(g, std::vector<double>(9, 1.0)) == v_statistic(g));
  CHECK(bootstrap_statistic(g, std::vector<double>(9, 0.0)) == 0.0);
  RandomStream rng(5);
  const auto w = draw_weights(WeightScheme::gaussian, 9, rng);
  double brute = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = 0; j < 9; ++j) brute += w[i] * w[j] * g(i, j);
  }
  CHECK(bootstrap_statistic(g, w) == Approx(brute / 81.0).epsilon(1e-13));
  CHECK_THROWS_AS(bootstrap_statistic(g, std::vector<double>(8, 1.0)), DimensionMismatch);
}

TEST_CASE("run_test is deterministic and well-formed", "[mmd]") {
  const auto data = null_sample(40, 6);
  const std::array<double, 3> levels{0.01, 0.05, 0.1};
  for (auto kind : {WeightScheme::gaussian, WeightScheme::multinomial, WeightScheme::rademacher}) {
    const BootstrapScheme scheme{kind, 199, 42};
    const auto a = run_test(data, KernelSpec(1.0), scheme, levels);
    const auto b = run_test(data, KernelSpec(1.0), scheme, levels);
    CHECK(a == b);
    CHECK(a.statistic >= 0.0);
    CHECK(a.p_value >= 1.0 / 200.0);
    CHECK(a.p_value <= 1.0);
    CHECK(a.n_boot == 199);
    CHECK(a.lengthscale_used == 1.0);
    REQUIRE(a.reject.size() == 3);
    for (double alpha : levels) CHECK(a.reject.at(alpha) == (a.p_value <= alpha));
  }
  const auto med = run_test(data, MedianHeuristic{}, {WeightScheme::gaussian, 50, 1}, levels);
  CHECK(med.lengthscale_used == median_heuristic(data).lengthscale());
  CHECK_THROWS_AS(run_test(data, KernelSpec(1.0), {WeightScheme::gaussian, 0, 1}, levels), std::invalid_argument);
  const std::array<double, 1> bad{1.5};
  CHECK_THROWS_AS(run_test(data, KernelSpec(1.0), {WeightScheme::gaussian, 10, 1}, bad), std::invalid_argument);
}

TEST_CASE("run_test detects a strong alternative", "[mmd]") {
  RandomStream stream(7);
  const auto data =
      transform(sample_dataset(WeibullHazard{3.0, 1.0}, 0.3, 100, stream), exponential_null(1.0));
  const std::array<double, 1> levels{0.05};
  const auto out = run_test(data, MedianHeuristic{}, {WeightScheme::gaussian, 200, 3}, levels);
  CHECK(out.reject.at(0.05));
}

TEST_CASE("p-values are roughly uniform under the null", "[mmd][statistical]") {
  const std::array<double, 1> levels{0.1};
  int rejections = 0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    const auto data = null_sample(50, 1000 + static_cast<std::uint64_t>(r));
    if (run_test(data, KernelSpec(1.0), {WeightScheme::rademacher, 199, static_cast<std::uint64_t>(r)}, levels)
            .reject.at(0.1)) {
      ++rejections;
    }
  }
  const double rate = static_cast<double>(rejections) / reps;
  const double se = std::sqrt(0.1 * 0.9 / reps);
  INFO("rate=" << rate);
  CHECK(std::abs(rate - 0.1) <= 4.0 * se);
}

TEST_CASE("compensated sums survive cancellation", "[mmd]") {
  CompensatedSum s;
  for (double x : {1.0, 1e100, 1.0, -1e100}) s.add(x);
  CHECK(s.value() == 2.0);
}
