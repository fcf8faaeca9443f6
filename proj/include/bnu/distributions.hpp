#pragma once

#include <Eigen/Core>

#include "bnu/rng.hpp"

namespace bnu {

/// Normal(mean, variance) conditioned on x >= lower.
struct TruncatedNormalSpec {
  double mean = 0.0;
  double variance = 1.0;
  double lower = 0.0;
};

/// Exact draw from a lower-truncated normal. Uses plain rejection when the
/// bound sits below the mean, inverse-CDF for standardized bounds in [0, 2],
/// and exponential-proposal rejection further out in the tail.
double sample_truncated_normal(const TruncatedNormalSpec& spec, RngStream& rng);

/// Normal(mean, sd^2) restricted to [lower, upper]. An infinite sd yields the
/// uniform distribution on the interval.
double sample_truncated_normal_interval(double mean, double sd, double lower, double upper,
                                        RngStream& rng);

// Gamma is shape-rate throughout.
double sample_gamma(double shape, double rate, RngStream& rng);
double sample_inverse_gamma(double shape, double scale, RngStream& rng);
long sample_poisson(double rate, RngStream& rng);
double sample_beta(double a, double b, RngStream& rng);
Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alphas, RngStream& rng);

/// ln B(a, b).
double log_beta_fn(double a, double b);

double log_gamma_pdf(double x, double shape, double rate);
double log_inverse_gamma_pdf(double x, double shape, double scale);
double log_poisson_pmf(long k, double rate);

}  // namespace bnu
