#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"
#include "oracles.hpp"

using bnu::RngStream;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs |= x != c();
  }
  CHECK(differs);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("half-normal mean") {
  RngStream rng(1);
  std::vector<double> xs(100000);
  for (double& x : xs) x = bnu::sample_truncated_normal({0.0, 1.0, 0.0}, rng);
  CHECK(mean_of(xs) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.0125));
}

TEST_CASE("truncation far below the mean is negligible") {
  RngStream rng(2);
  std::vector<double> xs(100000);
  for (double& x : xs) x = bnu::sample_truncated_normal({5.0, 1.0, 0.0}, rng);
  CHECK(std::abs(mean_of(xs) - 5.0) < 0.02);
}

TEST_CASE("vanishing variance returns the mean") {
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    CHECK(bnu::sample_truncated_normal({0.7, 1e-30, 0.0}, rng) == doctest::Approx(0.7));
  }
}

TEST_CASE("truncated normal matches rejection sampling") {
  std::mt19937_64 gen(99);
  RngStream rng(4);
  const double means[] = {-1.0, 0.0, 2.0};
  const double offsets[] = {-2.5, 0.5, 2.9};  // (lower - mean) / sd
  for (double mean : means) {
    for (double z : offsets) {
      const double variance = 0.25 + std::abs(mean);
      const double lower = mean + z * std::sqrt(variance);
      std::vector<double> ours(20000), naive(20000);
      for (double& x : ours) {
        x = bnu::sample_truncated_normal({mean, variance, lower}, rng);
        REQUIRE(x >= lower);
      }
      for (double& x : naive) x = oracle::naive_truncated_normal(mean, variance, lower, gen);
      CAPTURE(mean);
      CAPTURE(z);
      CHECK(oracle::ks_statistic(ours, naive) < oracle::ks_critical(20000, 20000, 0.001));
    }
  }
}

TEST_CASE("far tail never undershoots the bound") {
  RngStream rng(5);
  for (int i = 0; i < 100000; ++i) {
    CHECK(bnu::sample_truncated_normal({0.0, 1.0, 12.0}, rng) >= 12.0);
  }
}

TEST_CASE("interval truncation") {
  RngStream rng(6);
  std::mt19937_64 gen(6);
  std::vector<double> ours(20000), naive(20000);
  for (double& x : ours) {
    x = bnu::sample_truncated_normal_interval(0.3, 0.5, -0.2, 0.4, rng);
    REQUIRE(x >= -0.2);
    REQUIRE(x <= 0.4);
  }
  std::normal_distribution<double> normal(0.3, 0.5);
  for (double& x : naive) {
    do {
      x = normal(gen);
    } while (x < -0.2 || x > 0.4);
  }
  CHECK(oracle::ks_statistic(ours, naive) < oracle::ks_critical(20000, 20000, 0.001));

  // Infinite spread means uniform on the interval.
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) sum += bnu::sample_truncated_normal_interval(0.0, INFINITY, 1.0, 3.0, rng);
  CHECK(sum / 20000 == doctest::Approx(2.0).epsilon(0.01));
  CHECK(bnu::sample_truncated_normal_interval(0.0, 1.0, 0.5, 0.5, rng) == 0.5);
}

TEST_CASE("invalid parameters are rejected") {
  RngStream rng(7);
  CHECK_THROWS_AS(bnu::sample_truncated_normal({NAN, 1.0, 0.0}, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_truncated_normal({0.0, INFINITY, 0.0}, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_truncated_normal({0.0, -1.0, 0.0}, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_gamma(0.0, 1.0, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_gamma(1.0, -2.0, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_inverse_gamma(1.0, 0.0, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_poisson(-1.0, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_beta(1.0, 0.0, rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::sample_dirichlet(Eigen::Vector2d(1.0, 0.0), rng), bnu::InvalidParameter);
  CHECK_THROWS_AS(bnu::log_beta_fn(0.0, 1.0), bnu::InvalidParameter);
}

TEST_CASE("standard distribution moments") {
  RngStream rng(8);
  const int n = 100000;

  Eigen::Vector3d dir_mean = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = bnu::sample_dirichlet(Eigen::Vector3d::Ones(), rng);
    CHECK(std::abs(x.sum() - 1.0) < 1e-12);
    dir_mean += x / n;
  }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(dir_mean[k] - 1.0 / 3.0) < 0.005);

  double ig = 0.0, gam = 0.0, beta = 0.0, pois = 0.0;
  for (int i = 0; i < n; ++i) {
    ig += bnu::sample_inverse_gamma(3.0, 2.0, rng) / n;
    gam += bnu::sample_gamma(6.0, 3.0, rng) / n;
    beta += bnu::sample_beta(2.0, 6.0, rng) / n;
    pois += static_cast<double>(bnu::sample_poisson(2.5, rng)) / n;
  }
  CHECK(std::abs(ig - 1.0) < 0.02);
  CHECK(std::abs(gam - 2.0) < 0.01);
  CHECK(std::abs(beta - 0.25) < 0.003);
  CHECK(std::abs(pois - 2.5) < 0.02);

  for (int i = 0; i < 1000; ++i) CHECK(bnu::sample_poisson(0.0, rng) == 0);
}

TEST_CASE("log beta function") {
  CHECK(bnu::log_beta_fn(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(bnu::log_beta_fn(2.0, 3.0) == doctest::Approx(-2.4849066497880004).epsilon(1e-14));
  CHECK(bnu::log_beta_fn(0.5, 0.5) == doctest::Approx(1.1447298858494002).epsilon(1e-14));
  // Large arguments: compare against a lgamma difference in long double.
  for (double a : {1e-3, 0.7, 30.0, 1e4, 1e6}) {
    for (double b : {1e-3, 2.5, 1e3, 1e6}) {
      const long double ref = std::lgamma(static_cast<long double>(a)) +
                              std::lgamma(static_cast<long double>(b)) -
                              std::lgamma(static_cast<long double>(a) + b);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(std::abs(bnu::log_beta_fn(a, b) - static_cast<double>(ref)) <=
            1e-12 * std::max(1.0, std::abs(static_cast<double>(ref))));
    }
  }
}

TEST_CASE("log densities") {
  CHECK(bnu::log_gamma_pdf(1.3, 2.0, 0.5) == doctest::Approx(oracle::log_gamma_density(1.3, 2.0, 0.5)));
  CHECK(bnu::log_inverse_gamma_pdf(0.4, 3.0, 2.0) ==
        doctest::Approx(oracle::log_inverse_gamma_density(0.4, 3.0, 2.0)));
  CHECK(bnu::log_poisson_pmf(3, 2.0) == doctest::Approx(std::log(std::exp(-2.0) * 8.0 / 6.0)));
  CHECK(bnu::log_poisson_pmf(0, 0.0) == 0.0);
  CHECK(bnu::log_poisson_pmf(1, 0.0) == -INFINITY);
  CHECK(bnu::log_gamma_pdf(-1.0, 1.0, 1.0) == -INFINITY);
}
