#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>

#include "bnu/ibp.hpp"

namespace bnu {

/// Log of zero probability. IEEE -inf already propagates through sums and loses
/// every comparison, which is all the sampler needs from the sentinel.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Temperature that switches the likelihood off entirely.
inline constexpr double kLikelihoodOff = std::numeric_limits<double>::infinity();

/// N×D pixel spectra with their grid geometry.
struct ObservedImage {
  Eigen::MatrixXd pixels;
  Eigen::Index width = 0;
  Eigen::Index height = 0;
  std::optional<Eigen::VectorXd> band_centers;  // micrometers

  ObservedImage() = default;
  /// Treats the rows as a 1×N strip when no geometry is given.
  explicit ObservedImage(Eigen::MatrixXd z, Eigen::Index w = 0, Eigen::Index h = 0);

  Eigen::Index pixel_count() const { return pixels.rows(); }
  Eigen::Index band_count() const { return pixels.cols(); }

  /// Throws InputError when the image cannot be unmixed.
  void validate() const;
};

/// Fixed model and sampler settings. Defaults follow the published simulation
/// setup; the tempering ladder defaults are our own.
struct HyperConfig {
  double gamma_w = 100.0;

  double alpha_sigma_shape = 1.0;
  double alpha_sigma_rate = 1.0;
  double beta_sigma_shape = 1.0;
  double beta_sigma_rate = 1.0;

  double alpha_a_shape = 1.0;
  double alpha_a_rate = 1.0;
  double beta_a_shape = 1.0;
  double beta_a_rate = 10.0;

  double p_plus = 0.1;
  double t_corr = 0.95;
  long n_iter = 10000;

  int n_chains = 5;
  double ladder_ratio = 5.0;  // T = 1, 5, 25, 125, 625
  double cooling = 0.95;
  long swap_period = 10;
  double burn_in = 0.2;
  long merge_period = 1;
  /// Joint (a_kd, w_kd) updates before the per-band activation scan.
  bool block_activations = true;

  /// Gibbs scans used to draw proposed weight rows from the distance prior.
  int new_weight_scans = 5;
  /// Resample alpha_a/beta_a each sweep. Off only for prior-reproduction checks.
  bool sample_ibp_hypers = true;
  /// Worker threads for chain updates; 0 means one per chain.
  int threads = 1;

  IbpParams ibp_prior(double alpha, double beta) const {
    return IbpParams{alpha, beta, alpha_a_shape, alpha_a_rate, beta_a_shape, beta_a_rate};
  }

  /// Throws InputError on out-of-range values.
  void validate() const;
};

/// One posterior sample.
struct ModelState {
  ActivationMatrix a;  // K×D
  Eigen::MatrixXd w;   // K×D, non-negative
  Eigen::MatrixXd s;   // N×K, rows on the simplex
  double sigma2 = 1.0;
  double alpha_sigma = 1.0;
  double beta_sigma = 1.0;
  IbpParams ibp;

  Eigen::Index feature_count() const { return a.rows(); }

  /// Shapes agree, A binary, W >= 0, S rows on the simplex, sigma2 > 0.
  bool satisfies_invariants(double simplex_tol = 1e-9) const;
};

/// F = A ⊙ W.
Eigen::MatrixXd endmembers(const ModelState& state);

/// Reconstruction S F.
Eigen::MatrixXd reconstruction(const ModelState& state);

/// Squared Frobenius norm of Z - S F.
double residual_sum_squares(const Eigen::MatrixXd& z, const ModelState& state);

/// (1/T) Σ_n ln N(z_n | s_n F, σ² I). Zero when temperature is kLikelihoodOff.
double log_likelihood(const Eigen::MatrixXd& z, const ModelState& state, double temperature = 1.0);

/// -γ Σ_k ||w_k - mean_k' w_k'||², or kLogZero when any weight is negative.
double log_prior_weights(const Eigen::MatrixXd& w, double gamma_w);

/// ln InvGamma(σ²) + Gamma hyperpriors of α_σ, β_σ, α_a, β_a.
double log_prior_scalars(const ModelState& state, const HyperConfig& cfg);

/// Unnormalized joint log posterior with the likelihood at the given temperature.
double log_posterior(const Eigen::MatrixXd& z, const ModelState& state, const HyperConfig& cfg,
                     double temperature = 1.0);

}  // namespace bnu
