#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>

#include "bnu/errors.hpp"
#include "bnu/simplex.hpp"

using bnu::RngStream;

namespace {

// Long-run mean of the scan started at the barycenter, rotating the
// redundant coordinate as the sampler does.
Eigen::VectorXd chain_mean(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int scans,
                           std::uint64_t seed, double* worst_violation = nullptr) {
  const Eigen::Index k = mean.size();
  RngStream rng(seed);
  Eigen::VectorXd s = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
  double worst = 0.0;
  for (int i = 0; i < scans; ++i) {
    s = bnu::sample_simplex_gaussian(mean, cov, s, rng, i % k);
    worst = std::max({worst, std::abs(s.sum() - 1.0), -s.minCoeff()});
    acc += s;
  }
  if (worst_violation) *worst_violation = worst;
  return acc / scans;
}

}  // namespace

TEST_CASE("single component is pinned") {
  RngStream rng(1);
  const Eigen::VectorXd s = bnu::sample_simplex_gaussian(
      Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Ones(1), rng);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == 1.0);
}

TEST_CASE("flat target is uniform on the simplex") {
  for (Eigen::Index k : {2, 3, 5}) {
    double worst = 0.0;
    const Eigen::VectorXd m = chain_mean(Eigen::VectorXd::Zero(k), 1e12 * Eigen::MatrixXd::Identity(k, k),
                                         100000, 10 + static_cast<std::uint64_t>(k), &worst);
    CAPTURE(k);
    for (Eigen::Index j = 0; j < k; ++j) CHECK(std::abs(m[j] - 1.0 / static_cast<double>(k)) < 0.01);
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("sharp mode at a vertex") {
  RngStream rng(2);
  Eigen::VectorXd s = Eigen::Vector3d::Constant(1.0 / 3.0);
  for (int i = 0; i < 20; ++i) {
    s = bnu::sample_simplex_gaussian(Eigen::Vector3d(1, 0, 0), 1e-10 * Eigen::Matrix3d::Identity(), s, rng, i % 3);
  }
  CHECK((s - Eigen::Vector3d(1, 0, 0)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("constrained Gaussian matches rejection from the uniform simplex") {
  const Eigen::Vector3d mu(0.2, 0.5, 0.3);
  Eigen::Matrix3d cov;
  cov << 0.05, 0.01, 0.0, 0.01, 0.03, 0.0, 0.0, 0.0, 0.08;
  const Eigen::Matrix3d prec = cov.inverse();

  std::mt19937_64 gen(5);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();
  int accepted = 0;
  while (accepted < 200000) {
    Eigen::Vector3d s(expo(gen), expo(gen), expo(gen));
    s /= s.sum();
    const Eigen::Vector3d r = s - mu;
    if (unif(gen) < std::exp(-0.5 * r.dot(prec * r))) {
      ref += s;
      ++accepted;
    }
  }
  ref /= accepted;

  const Eigen::VectorXd m = chain_mean(mu, cov, 200000, 6);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(m[j] - ref[j]) < 0.005);
}

TEST_CASE("singular precision is sampled along flat directions") {
  RngStream rng(3);
  Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
  p(0, 0) = 4.0;
  Eigen::VectorXd s = Eigen::Vector3d::Constant(1.0 / 3.0);
  for (int i = 0; i < 1000; ++i) {
    s = bnu::sample_simplex_gaussian_natural(p, Eigen::Vector3d::Zero(), s, rng, i % 3);
    REQUIRE(bnu::on_simplex(s, 1e-12));
  }
}

TEST_CASE("off-simplex input is a contract error") {
  RngStream rng(4);
  const Eigen::Vector2d mean(0.5, 0.5);
  const Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  CHECK_THROWS_AS(bnu::sample_simplex_gaussian(mean, cov, Eigen::Vector2d(0.5, 0.6), rng), bnu::ContractError);
  CHECK_THROWS_AS(bnu::sample_simplex_gaussian(mean, cov, Eigen::Vector2d(1.1, -0.1), rng), bnu::ContractError);
  CHECK_NOTHROW(bnu::sample_simplex_gaussian(mean, cov, Eigen::Vector2d(0.5, 0.5 + 1e-10), rng));
  CHECK_THROWS_AS(bnu::sample_simplex_gaussian(Eigen::Vector3d::Zero(), cov, Eigen::Vector2d(0.5, 0.5), rng),
                  bnu::ContractError);
}
