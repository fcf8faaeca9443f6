#pragma once

#include <Eigen/Core>

#include "bnu/rng.hpp"

namespace bnu {

/// Tolerance used to decide whether an input vector lies on the probability simplex.
inline constexpr double kSimplexTolerance = 1e-9;

template <typename Derived>
bool on_simplex(const Eigen::MatrixBase<Derived>& s, double tol = kSimplexTolerance) {
  if (s.size() == 0) return true;
  return std::abs(s.sum() - 1.0) <= tol && s.minCoeff() >= -tol;
}

/// One Gibbs scan of N(mean, covariance) restricted to the simplex.
///
/// The coordinate `redundant` is implied by the sum constraint; every other
/// coordinate is redrawn in index order from its conditional along the edge
/// that trades mass with the redundant one. Pass a different `redundant`
/// index each scan (the sampler rotates it) to avoid favouring one corner.
/// Defaults to the last coordinate when negative.
Eigen::VectorXd sample_simplex_gaussian(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                        const Eigen::Ref<const Eigen::MatrixXd>& covariance,
                                        const Eigen::Ref<const Eigen::VectorXd>& current,
                                        RngStream& rng, Eigen::Index redundant = -1);

/// Same scan for a target written in natural parameters,
/// p(s) ∝ exp(-½ sᵀ P s + hᵀ s). A direction with zero precision is sampled
/// uniformly over its feasible segment, so singular P needs no special care.
Eigen::VectorXd sample_simplex_gaussian_natural(const Eigen::Ref<const Eigen::MatrixXd>& precision,
                                                const Eigen::Ref<const Eigen::VectorXd>& linear,
                                                const Eigen::Ref<const Eigen::VectorXd>& current,
                                                RngStream& rng, Eigen::Index redundant = -1);

}  // namespace bnu
