#include <cmath>

#include <doctest.h>

#include "fedbayes/errors.hpp"
#include "fedbayes/expfam.hpp"
#include "fedbayes/rng.hpp"
#include "oracles.hpp"

using namespace fedbayes;

TEST_SUITE("expfam") {

TEST_CASE("moment and natural parameterisations invert each other") {
  const GaussianMoment m({0.5, -2.0, 3.0}, {1.0, 0.25, 4.0});
  const GaussianNatural n = to_natural(m);
  CHECK(n.eta1[0] == doctest::Approx(0.5));
  CHECK(n.eta2[0] == doctest::Approx(-0.5));
  CHECK(n.eta1[1] == doctest::Approx(-8.0));
  CHECK(n.eta2[1] == doctest::Approx(-2.0));

  const GaussianMoment back = to_moment(n);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    CHECK(back.mean[i] == doctest::Approx(m.mean[i]).epsilon(1e-12));
    CHECK(back.variance[i] == doctest::Approx(m.variance[i]).epsilon(1e-12));
  }
}

TEST_CASE("moment construction rejects non-positive variance") {
  CHECK_THROWS_AS(GaussianMoment({0.0}, {0.0}), invalid_moment_error);
  CHECK_THROWS_AS(GaussianMoment({0.0}, {-1.0}), invalid_moment_error);
  CHECK_THROWS_AS(GaussianMoment({0.0, 0.0}, {1.0}), dimension_mismatch_error);
}

TEST_CASE("factor product adds natural parameters and division undoes it") {
  Generator rng(7);
  const GaussianNatural a = to_natural(GaussianMoment(rng.normal_vector(4), {1.0, 2.0, 0.5, 3.0}));
  const GaussianNatural b = to_natural(GaussianMoment(rng.normal_vector(4), {2.0, 1.0, 4.0, 0.25}));

  const GaussianNatural ab = multiply(a, b);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ab.eta1[i] == doctest::Approx(a.eta1[i] + b.eta1[i]));
    CHECK(ab.eta2[i] == doctest::Approx(a.eta2[i] + b.eta2[i]));
  }

  const GaussianNatural back = divide(ab, b);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.eta1[i] == doctest::Approx(a.eta1[i]).epsilon(1e-12));
    CHECK(back.eta2[i] == doctest::Approx(a.eta2[i]).epsilon(1e-12));
  }
}

TEST_CASE("product of two unit Gaussians halves the variance") {
  const GaussianMoment m({1.0}, {1.0});
  const GaussianMoment prod = to_moment(multiply(to_natural(m), to_natural(m)));
  CHECK(prod.variance[0] == doctest::Approx(0.5));
  CHECK(prod.mean[0] == doctest::Approx(1.0));
}

TEST_CASE("zero factor is the multiplicative identity") {
  const GaussianNatural a = to_natural(GaussianMoment({1.0, -1.0}, {2.0, 0.5}));
  const GaussianNatural z = GaussianNatural::zero(2);
  const GaussianNatural prod = multiply(a, z);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(prod.eta1[i] == a.eta1[i]);
    CHECK(prod.eta2[i] == a.eta2[i]);
  }
  CHECK_FALSE(z.normalizable());
}

TEST_CASE("conversion to moments requires negative eta2 everywhere") {
  GaussianNatural n = GaussianNatural::zero(3);
  n.eta2 = {-0.5, 0.0, -1.0};
  CHECK_FALSE(n.normalizable());
  CHECK_THROWS_AS(to_moment(n), non_normalizable_error);
  try {
    to_moment(n);
  } catch (const non_normalizable_error& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
  n.eta2 = {-0.5, -0.25, -1.0};
  CHECK(n.normalizable());
  CHECK_NOTHROW(to_moment(n));
}

TEST_CASE("division mismatched dimensions raise") {
  const GaussianNatural a = GaussianNatural::zero(2);
  const GaussianNatural b = GaussianNatural::zero(3);
  CHECK_THROWS_AS(multiply(a, b), dimension_mismatch_error);
  CHECK_THROWS_AS(divide(a, b), dimension_mismatch_error);
}

TEST_CASE("kl divergence closed form") {
  // KL(N(1,1) || N(0,1)) = 1/2 exactly.
  CHECK(kl_divergence(GaussianMoment({1.0}, {1.0}), GaussianMoment({0.0}, {1.0})) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Same distribution: zero.
  const GaussianMoment m({0.3, -0.7}, {2.0, 0.4});
  CHECK(kl_divergence(m, m) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kl divergence matches quadrature") {
  const GaussianMoment q({0.7}, {0.6});
  const GaussianMoment p({-0.4}, {1.7});
  const oracles::GaussHermite gh(64);
  // E_{x~q}[log q(x) - log p(x)] with x = mu + sqrt(var) u.
  const double mu = q.mean[0], s = std::sqrt(q.variance[0]);
  const double expected = gh.expect([&](double u) {
    const double x = mu + s * u;
    const double lq = -0.5 * std::log(2.0 * M_PI * q.variance[0]) -
                      (x - q.mean[0]) * (x - q.mean[0]) / (2.0 * q.variance[0]);
    const double lp = -0.5 * std::log(2.0 * M_PI * p.variance[0]) -
                      (x - p.mean[0]) * (x - p.mean[0]) / (2.0 * p.variance[0]);
    return lq - lp;
  });
  CHECK(kl_divergence(q, p) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("kl divergence is nonnegative on random pairs and additive over dimensions") {
  Generator rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> vq(3), vp(3);
    for (auto* v : {&vq, &vp})
      for (double& x : *v) x = 0.1 + std::abs(rng.normal());
    const GaussianMoment q(rng.normal_vector(3), vq);
    const GaussianMoment p(rng.normal_vector(3), vp);
    const double kl = kl_divergence(q, p);
    CHECK(kl >= -1e-12);
    double per_dim = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      per_dim += kl_divergence(GaussianMoment({q.mean[i]}, {q.variance[i]}),
                               GaussianMoment({p.mean[i]}, {p.variance[i]}));
    CHECK(kl == doctest::Approx(per_dim).epsilon(1e-10));
  }
}

}  // TEST_SUITE
