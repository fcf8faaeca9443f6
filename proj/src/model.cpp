#include "bnu/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"
#include "bnu/simplex.hpp"

namespace bnu {

ObservedImage::ObservedImage(Eigen::MatrixXd z, Eigen::Index w, Eigen::Index h)
    : pixels(std::move(z)), width(w), height(h) {
  if (width == 0 && height == 0) {
    width = pixels.rows();
    height = 1;
  }
}

void ObservedImage::validate() const {
  if (pixels.rows() < 1) throw InputError("image needs at least one pixel");
  if (pixels.cols() < 2) throw InputError("image needs at least two bands");
  if (width * height != pixels.rows()) {
    throw InputError("image geometry " + std::to_string(width) + "x" + std::to_string(height) +
                     " does not match " + std::to_string(pixels.rows()) + " pixels");
  }
  if (!pixels.allFinite()) throw InputError("image contains non-finite values");
  if (band_centers && band_centers->size() != pixels.cols()) {
    throw InputError("band centers do not match the band count");
  }
}

void HyperConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be positive");
  };
  positive(gamma_w, "gamma_w");
  positive(alpha_sigma_shape, "h1_alpha_sigma");
  positive(alpha_sigma_rate, "h2_alpha_sigma");
  positive(beta_sigma_shape, "h1_beta_sigma");
  positive(beta_sigma_rate, "h2_beta_sigma");
  positive(alpha_a_shape, "h1_alpha_a");
  positive(alpha_a_rate, "h2_alpha_a");
  positive(beta_a_shape, "h1_beta_a");
  positive(beta_a_rate, "h2_beta_a");
  if (!(p_plus > 0.0 && p_plus < 1.0)) throw InputError("p_plus must lie in (0, 1)");
  if (!(t_corr > 0.0 && t_corr <= 1.0)) throw InputError("t_corr must lie in (0, 1]");
  if (n_iter < 1) throw InputError("n_iter must be at least 1");
  if (n_chains < 1) throw InputError("n_chains must be at least 1");
  if (!(ladder_ratio >= 1.0)) throw InputError("ladder_ratio must be >= 1");
  if (!(cooling > 0.0 && cooling <= 1.0)) throw InputError("cooling must lie in (0, 1]");
  if (swap_period < 1) throw InputError("swap_period must be at least 1");
  if (merge_period < 1) throw InputError("merge_period must be at least 1");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw InputError("burn_in must lie in [0, 1)");
  if (new_weight_scans < 1) throw InputError("new_weight_scans must be at least 1");
  if (threads < 0) throw InputError("threads must be non-negative");
}

bool ModelState::satisfies_invariants(double simplex_tol) const {
  const Eigen::Index k = a.rows();
  if (w.rows() != k || s.cols() != k || w.cols() != a.cols()) return false;
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return false;
  if ((a.array() > 1).any()) return false;
  if (k > 0 && (!w.allFinite() || w.minCoeff() < 0.0)) return false;
  if (k > 0) {
    for (Eigen::Index n = 0; n < s.rows(); ++n) {
      if (!on_simplex(s.row(n).transpose(), simplex_tol)) return false;
    }
  }
  return true;
}

Eigen::MatrixXd endmembers(const ModelState& state) {
  return state.a.cast<double>().cwiseProduct(state.w);
}

Eigen::MatrixXd reconstruction(const ModelState& state) {
  if (state.s.cols() == 0) return Eigen::MatrixXd::Zero(state.s.rows(), state.w.cols());
  return state.s * endmembers(state);
}

double residual_sum_squares(const Eigen::MatrixXd& z, const ModelState& state) {
  if (z.rows() != state.s.rows() || z.cols() != state.a.cols() || state.s.cols() != state.a.rows()) {
    throw ContractError("residual: dimensions of Z, S, A disagree");
  }
  return (z - reconstruction(state)).squaredNorm();
}

double log_likelihood(const Eigen::MatrixXd& z, const ModelState& state, double temperature) {
  const double rss = residual_sum_squares(z, state);
  if (temperature == kLikelihoodOff) return 0.0;
  const double count = static_cast<double>(z.size());
  const double full =
      -0.5 * count * std::log(2.0 * std::numbers::pi * state.sigma2) - rss / (2.0 * state.sigma2);
  return full / temperature;
}

double log_prior_weights(const Eigen::MatrixXd& w, double gamma_w) {
  if (w.rows() == 0) return 0.0;
  if (w.minCoeff() < 0.0) return kLogZero;
  const Eigen::RowVectorXd mean = w.colwise().mean();
  return -gamma_w * (w.rowwise() - mean).squaredNorm();
}

double log_prior_scalars(const ModelState& state, const HyperConfig& cfg) {
  return log_inverse_gamma_pdf(state.sigma2, state.alpha_sigma, state.beta_sigma) +
         log_gamma_pdf(state.alpha_sigma, cfg.alpha_sigma_shape, cfg.alpha_sigma_rate) +
         log_gamma_pdf(state.beta_sigma, cfg.beta_sigma_shape, cfg.beta_sigma_rate) +
         log_gamma_pdf(state.ibp.alpha, cfg.alpha_a_shape, cfg.alpha_a_rate) +
         log_gamma_pdf(state.ibp.beta, cfg.beta_a_shape, cfg.beta_a_rate);
}

double log_posterior(const Eigen::MatrixXd& z, const ModelState& state, const HyperConfig& cfg,
                     double temperature) {
  if (!state.satisfies_invariants()) return kLogZero;
  const double weights = log_prior_weights(state.w, cfg.gamma_w);
  if (weights == kLogZero) return kLogZero;
  return log_likelihood(z, state, temperature) + weights + log_prob_activations(state.a, state.ibp) +
         log_prior_scalars(state, cfg);
}

}  // namespace bnu
