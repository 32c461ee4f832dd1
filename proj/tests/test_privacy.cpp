#include <cmath>
#include <vector>

#include <doctest.h>

#include "fedbayes/errors.hpp"
#include "fedbayes/privacy.hpp"
#include "fedbayes/rng.hpp"
#include "oracles.hpp"

using namespace fedbayes;

TEST_SUITE("privacy") {

TEST_CASE("clip leaves short vectors alone and rescales long ones") {
  const std::vector<double> half{3.0, 4.0};  // norm 5
  const auto same = clip(half, 10.0);
  CHECK(same == half);

  const auto scaled = clip(half, 2.5);  // norm 2 * bound
  CHECK(l2_norm(scaled) == doctest::Approx(2.5));
  CHECK(scaled[0] == doctest::Approx(1.5));
  CHECK(scaled[1] == doctest::Approx(2.0));
  // Direction preserved.
  CHECK(scaled[0] / scaled[1] == doctest::Approx(half[0] / half[1]));

  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(clip(zero, 1.0) == zero);
  CHECK_THROWS(clip(half, 0.0));
}

TEST_CASE("clip never increases the norm") {
  Generator rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = rng.normal_vector(8);
    const double c = 0.1 + 3.0 * rng.uniform();
    const auto out = clip(g, c);
    CHECK(l2_norm(out) <= c * (1.0 + 1e-12));
    CHECK(l2_norm(out) <= l2_norm(g) * (1.0 + 1e-12));
  }
}

TEST_CASE("noisy average base cases") {
  const std::vector<double> zeros(3, 0.0);
  CHECK(noisy_average({}, 1.0, 1.0, 4.0, zeros) == zeros);

  const std::vector<std::vector<double>> one{{0.5, -0.25, 0.0}};
  const auto out = noisy_average(one, 1.0, 1.0, 1.0, zeros);
  CHECK(out == one[0]);

  // Inputs above the bound violate the mechanism's contract.
  const std::vector<std::vector<double>> big{{10.0, 0.0, 0.0}};
  CHECK_THROWS_AS(noisy_average(big, 1.0, 1.0, 1.0, zeros), contract_violation_error);
}

TEST_CASE("noisy average is unbiased") {
  Generator rng(4);
  const double c = 2.0, sigma = 1.5, lot = 10.0;
  const std::vector<std::vector<double>> clipped{{1.0, -0.5}, {0.3, 0.9}, {-1.1, 0.2}};
  std::vector<double> target(2, 0.0);
  for (const auto& g : clipped)
    for (std::size_t i = 0; i < 2; ++i) target[i] += g[i] / lot;

  const int reps = 10000;
  std::vector<double> mean(2, 0.0);
  std::vector<double> gauss(2);
  for (int r = 0; r < reps; ++r) {
    rng.normal_fill(gauss);
    const auto out = noisy_average(clipped, c, sigma, lot, gauss);
    for (std::size_t i = 0; i < 2; ++i) mean[i] += out[i];
  }
  const double se = sigma * c / lot / std::sqrt(static_cast<double>(reps));
  for (std::size_t i = 0; i < 2; ++i) {
    mean[i] /= reps;
    CHECK(std::abs(mean[i] - target[i]) < 3.0 * se);
  }
}

TEST_CASE("renyi cost of the unsubsampled mechanism is exactly alpha over two sigma squared") {
  for (double sigma : {0.5, 1.0, 5.0})
    for (double alpha : MomentsLedger::order_grid())
      CHECK(rdp_subsampled_gaussian(1.0, sigma, alpha) ==
            doctest::Approx(alpha / (2.0 * sigma * sigma)).epsilon(1e-12));
}

TEST_CASE("renyi cost vanishes as the sample rate vanishes") {
  CHECK(rdp_subsampled_gaussian(1e-12, 5.0, 8.0) < 1e-12);
}

TEST_CASE("renyi cost is monotone in sample rate and order") {
  double prev = 0.0;
  for (double q : {0.001, 0.01, 0.02, 0.1, 0.5, 1.0}) {
    const double r = rdp_subsampled_gaussian(q, 5.0, 16.0);
    CHECK(r >= prev);
    prev = r;
  }
  prev = 0.0;
  for (double alpha : {1.5, 2.0, 4.0, 16.0, 64.0, 256.0}) {
    const double r = rdp_subsampled_gaussian(0.02, 5.0, alpha);
    CHECK(r >= prev - 1e-15);
    prev = r;
  }
}

TEST_CASE("renyi cost matches direct numerical integration") {
  for (double alpha : {2.0, 8.0, 16.0, 64.0}) {
    const double mine = rdp_subsampled_gaussian(0.02, 5.0, alpha);
    const double ref = oracles::rdp_quadrature(0.02, 5.0, alpha);
    CHECK(mine == doctest::Approx(ref).epsilon(0.01));
  }
  // Different regime: aggressive sampling, weak noise.
  const double mine = rdp_subsampled_gaussian(0.3, 1.0, 8.0);
  const double ref = oracles::rdp_quadrature(0.3, 1.0, 8.0);
  CHECK(mine == doctest::Approx(ref).epsilon(0.01));
}

TEST_CASE("fractional order is an upper bound near its integer brackets") {
  const double r15 = rdp_subsampled_gaussian(0.02, 5.0, 1.5);
  const double exact = oracles::rdp_quadrature(0.02, 5.0, 1.5);
  CHECK(r15 >= exact * (1.0 - 1e-9));
  CHECK(r15 <= rdp_subsampled_gaussian(0.02, 5.0, 2.0) * (1.0 + 1e-12) + 1e-15);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(rdp_subsampled_gaussian(0.02, 5.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(rdp_subsampled_gaussian(0.0, 5.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(rdp_subsampled_gaussian(1.5, 5.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(rdp_subsampled_gaussian(0.02, 0.0, 2.0), std::domain_error);
  MomentsLedger ledger;
  CHECK_THROWS_AS(epsilon(ledger, 0.0), std::domain_error);
  CHECK_THROWS_AS(epsilon(ledger, 1.0), std::domain_error);
}

TEST_CASE("epsilon of a fresh ledger is the pure conversion term") {
  MomentsLedger ledger;
  CHECK(ledger.steps() == 0);
  // min over the grid of log(1/delta)/(alpha-1); the largest order wins.
  CHECK(epsilon(ledger, 1e-4) == doctest::Approx(std::log(1e4) / 255.0).epsilon(1e-12));
}

TEST_CASE("one full-batch step matches a grid search of the conversion") {
  MomentsLedger ledger;
  accumulate_step(ledger, 1.0, 1.0);
  CHECK(ledger.steps() == 1);
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : MomentsLedger::order_grid())
    best = std::min(best, alpha / 2.0 + std::log(1e5) / (alpha - 1.0));
  CHECK(epsilon(ledger, 1e-5) == doctest::Approx(best).epsilon(1e-12));
  // The minimiser sits at alpha = 6: 3 + log(1e5)/5.
  CHECK(epsilon(ledger, 1e-5) == doctest::Approx(3.0 + std::log(1e5) / 5.0).epsilon(1e-12));
}

TEST_CASE("epsilon grows with steps and shrinks with delta") {
  MomentsLedger ledger;
  double prev = epsilon(ledger, 1e-4);
  for (int t = 0; t < 5; ++t) {
    accumulate_step(ledger, 0.02, 5.0);
    const double cur = epsilon(ledger, 1e-4);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK(epsilon(ledger, 1e-3) < epsilon(ledger, 1e-4));
  CHECK(epsilon(ledger, 1e-5) > epsilon(ledger, 1e-4));
}

TEST_CASE("composed epsilon matches the quadrature accountant") {
  const auto mine = step_rdp(0.02, 5.0);
  const auto ref = oracles::rdp_grid_quadrature(0.02, 5.0);
  MomentsLedger ledger;
  std::size_t done = 0;
  for (std::size_t steps : {std::size_t{1}, std::size_t{10}, std::size_t{100}}) {
    for (; done < steps; ++done) ledger.accumulate(mine);
    CHECK(epsilon(ledger, 1e-4) ==
          doctest::Approx(oracles::epsilon_from_rdp(ref, steps, 1e-4)).epsilon(0.01));
  }
}

TEST_CASE("client delta is the largest power of ten at most one over the shard size") {
  CHECK(delta_for_client(390) == doctest::Approx(1e-3));
  CHECK(delta_for_client(3907) == doctest::Approx(1e-4));
  CHECK(delta_for_client(7424) == doctest::Approx(1e-4));
  CHECK(delta_for_client(1) == doctest::Approx(1.0));
  CHECK(delta_for_client(10) == doctest::Approx(0.1));
  CHECK(delta_for_client(11) == doctest::Approx(0.01));
  CHECK(delta_for_client(1000) == doctest::Approx(1e-3));
  CHECK(delta_for_client(1001) == doctest::Approx(1e-4));
  CHECK_THROWS(delta_for_client(0));
}

TEST_CASE("budget check trips before the step that would overshoot") {
  PrivacyParams priv;
  priv.clip_c = 1.0;
  priv.noise_scale = 1.0;
  priv.sample_rate = 1.0;
  priv.delta = 1e-5;
  // One step costs about 5.30 at this delta; allow just over two steps.
  const double eps1 = 3.0 + std::log(1e5) / 5.0;
  MomentsLedger probe;
  accumulate_step(probe, 1.0, 1.0);
  accumulate_step(probe, 1.0, 1.0);
  const double eps2 = epsilon(probe, priv.delta);
  priv.epsilon_max = eps2 + 1e-9;

  MomentsLedger ledger;
  int steps = 0;
  while (!budget_exhausted(ledger, priv)) {
    accumulate_step(ledger, priv.sample_rate, priv.noise_scale);
    ++steps;
    REQUIRE(steps < 100);
  }
  CHECK(steps == 2);
  CHECK(epsilon(ledger, priv.delta) <= priv.epsilon_max);
  CHECK(epsilon(ledger, priv.delta) == doctest::Approx(eps2));
  CHECK(eps1 < eps2);
}

TEST_CASE("cached per-step costs agree with the direct budget check") {
  PrivacyParams priv;
  priv.clip_c = 75.0;
  priv.noise_scale = 5.0;
  priv.sample_rate = 0.02;
  priv.delta = 1e-4;
  priv.epsilon_max = 0.05;
  const auto cached = step_rdp(priv.sample_rate, priv.noise_scale);
  MomentsLedger ledger;
  for (int t = 0; t < 200; ++t) {
    CHECK(budget_exhausted(ledger, priv) == budget_exhausted(ledger, priv, cached));
    if (budget_exhausted(ledger, priv)) break;
    ledger.accumulate(cached);
  }
}

}  // TEST_SUITE
