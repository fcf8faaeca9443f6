#include "bnu/simplex.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"

namespace bnu {

namespace {

void check_simplex_input(const Eigen::Ref<const Eigen::VectorXd>& current) {
  if (!on_simplex(current)) {
    throw ContractError("simplex sampler: current point is off the simplex");
  }
}

Eigen::VectorXd project_to_simplex(Eigen::VectorXd s) {
  s = s.cwiseMax(0.0);
  const double total = s.sum();
  if (total > 0.0) {
    s /= total;
  } else {
    s.setConstant(1.0 / static_cast<double>(s.size()));
  }
  return s;
}

}  // namespace

Eigen::VectorXd sample_simplex_gaussian_natural(const Eigen::Ref<const Eigen::MatrixXd>& precision,
                                                const Eigen::Ref<const Eigen::VectorXd>& linear,
                                                const Eigen::Ref<const Eigen::VectorXd>& current,
                                                RngStream& rng, Eigen::Index redundant) {
  const Eigen::Index k = current.size();
  if (precision.rows() != k || precision.cols() != k || linear.size() != k) {
    throw ContractError("simplex sampler: dimension mismatch");
  }
  check_simplex_input(current);
  if (k <= 1) return Eigen::VectorXd::Ones(k);
  if (redundant < 0) redundant = k - 1;
  if (redundant >= k) redundant %= k;

  Eigen::VectorXd s = project_to_simplex(current);
  // Energy gradient P s - h, kept current as coordinates move.
  Eigen::VectorXd grad = precision * s - linear;

  const Eigen::Index r = redundant;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j == r) continue;
    // Move along e_j - e_r: s_j = t, s_r = c - t with t in [0, c].
    const double c = s[j] + s[r];
    const double curvature = precision(j, j) + precision(r, r) - 2.0 * precision(j, r);
    const double slope = grad[j] - grad[r];
    double t;
    if (c <= 0.0) {
      t = 0.0;
    } else if (!(curvature > 0.0) || !std::isfinite(1.0 / std::sqrt(curvature))) {
      t = c * rng.uniform();
    } else {
      const double mode = s[j] - slope / curvature;
      t = sample_truncated_normal_interval(mode, 1.0 / std::sqrt(curvature), 0.0, c, rng);
    }
    const double delta = t - s[j];
    s[j] = t;
    s[r] = c - t;
    grad += delta * (precision.col(j) - precision.col(r));
  }
  return project_to_simplex(std::move(s));
}

Eigen::VectorXd sample_simplex_gaussian(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                        const Eigen::Ref<const Eigen::MatrixXd>& covariance,
                                        const Eigen::Ref<const Eigen::VectorXd>& current,
                                        RngStream& rng, Eigen::Index redundant) {
  const Eigen::Index k = current.size();
  if (mean.size() != k || covariance.rows() != k || covariance.cols() != k) {
    throw ContractError("simplex sampler: dimension mismatch");
  }
  check_simplex_input(current);
  if (k <= 1) return Eigen::VectorXd::Ones(k);

  Eigen::MatrixXd cov = 0.5 * (covariance + covariance.transpose());
  const double jitter = 1e-10 * cov.trace() / static_cast<double>(k);
  cov.diagonal().array() += jitter;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw ContractError("simplex sampler: covariance is not positive definite");
  }
  const Eigen::MatrixXd precision = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::VectorXd linear = precision * mean;
  return sample_simplex_gaussian_natural(precision, linear, current, rng, redundant);
}

}  // namespace bnu
