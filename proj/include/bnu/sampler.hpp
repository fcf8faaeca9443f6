#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "bnu/model.hpp"
#include "bnu/rng.hpp"

namespace bnu {

// ---------------------------------------------------------------------------
// Conditionals. Every function takes the likelihood temperature T and targets
// p(Z | θ)^(1/T) p(θ): quadratic terms see the variance T·σ², and the σ²
// normalizer is scaled by 1/T as well. kLikelihoodOff removes the likelihood
// from the conditional altogether.
// ---------------------------------------------------------------------------

struct InverseGammaParams {
  double shape;
  double scale;
};

/// Parameters of p(σ² | -).
InverseGammaParams sigma2_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                      double temperature);
double sample_sigma2(const Eigen::MatrixXd& z, const ModelState& state, double temperature,
                     RngStream& rng);

/// Random-walk step size for α_σ and β_σ.
inline constexpr double kNoiseHyperStep = 0.1;

struct NoiseHypers {
  double alpha_sigma;
  double beta_sigma;
};

/// ln InvGamma(σ² | α, β) + ln Gamma(α) + ln Gamma(β): the target of the noise-hyper step.
double noise_hyper_log_target(double sigma2, double alpha_sigma, double beta_sigma,
                              const HyperConfig& cfg);

/// Metropolis updates of α_σ then β_σ with a reflected Gaussian random walk.
NoiseHypers mh_step_noise_hypers(const ModelState& state, const HyperConfig& cfg, RngStream& rng);

/// Natural parameters of the (unconstrained) Gaussian p(s_n | -): precision F Fᵀ/(Tσ²),
/// linear term F z_nᵀ/(Tσ²). A jitter of 1e-8·tr/K is added to a singular F Fᵀ.
struct AbundanceConditional {
  Eigen::MatrixXd precision;
  Eigen::MatrixXd linear;  // N×K, one row per pixel
};
AbundanceConditional abundance_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                           double temperature);

/// One constrained Gibbs scan of abundance row n. `redundant` picks the
/// coordinate implied by the sum constraint (rotated by the caller).
Eigen::VectorXd sample_abundance_row(const Eigen::Ref<const Eigen::RowVectorXd>& z_n,
                                     const ModelState& state, Eigen::Index n, double temperature,
                                     RngStream& rng, Eigen::Index redundant = -1);

/// Updates every abundance row in place.
void sample_abundances(const Eigen::MatrixXd& z, ModelState& state, double temperature,
                       RngStream& rng, long sweep);

/// Diagonal precision and linear term of p(w_k | -) before truncation at zero.
/// The mean is linear / precision.
struct WeightConditional {
  Eigen::VectorXd precision;
  Eigen::VectorXd linear;
  Eigen::VectorXd mean() const { return linear.cwiseQuotient(precision); }
};
WeightConditional weight_row_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                         Eigen::Index k, double temperature, double gamma_w);

/// Draws w_k band by band from its truncated conditional. Bands with zero
/// total precision (K = 1 and inactive) keep their current value.
Eigen::VectorXd sample_weight_row(const Eigen::MatrixXd& z, const ModelState& state,
                                  Eigen::Index k, double temperature, double gamma_w,
                                  RngStream& rng);

/// Posterior probability that a_{k,d} = 1 given everything else.
double activation_probability(const Eigen::MatrixXd& z, const ModelState& state, Eigen::Index k,
                              Eigen::Index d, double temperature);

/// Joint conditional of (a_kd, w_kd) with w_kd integrated out of the
/// activation odds. Undefined (no update) for K = 1 or when band d is the
/// feature's only active band.
struct BlockConditional {
  bool defined = false;
  double log_odds = 0.0;  // ln P(a=1) - ln P(a=0)
  double prior_mean = 0.0, prior_precision = 0.0;    // w_kd | a_kd = 0, before truncation
  double active_mean = 0.0, active_precision = 0.0;  // w_kd | a_kd = 1, before truncation
};
BlockConditional activation_weight_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                               Eigen::Index k, Eigen::Index d, double temperature,
                                               double gamma_w);

/// Draws a_kd from its collapsed odds, then w_kd given a_kd. Returns false when
/// the conditional is undefined and the state is left alone.
bool resample_activation_weight(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index k,
                                Eigen::Index d, double temperature, double gamma_w, RngStream& rng);

/// Drops features with no active band, renormalizing the abundance rows over
/// the surviving features. Returns the number removed.
Eigen::Index remove_empty_features(ModelState& state);

/// ln r_aug for a birth of k_plus features given the tempered log-likelihood ratio.
double augmented_log_acceptance(double log_likelihood_ratio, long k_plus, double rate,
                                double p_plus);

/// Number of features proposed for one band: 1 with probability P⁺, otherwise
/// a draw from the IBP Poisson prior. The augmented acceptance ratio corrects
/// for this mixture.
long propose_feature_count(const IbpParams& p, Eigen::Index bands, double p_plus, RngStream& rng);

struct BirthOutcome {
  long proposed = 0;  // K⁺
  bool accepted = false;
  double log_acceptance = 0.0;
};

/// Builds a K⁺-feature birth for band d (rows active only at d, weights from a
/// short Gibbs run on the distance prior, abundances Gamma(1/K, 1) then
/// renormalized). `k_plus` < 0 draws K⁺ with propose_feature_count.
/// The state is untouched on rejection.
BirthOutcome propose_new_features(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index d,
                                  const HyperConfig& cfg, double temperature, RngStream& rng,
                                  long k_plus = -1);

struct BandOutcome {
  Eigen::Index removed = 0;
  BirthOutcome birth;
};

/// Gibbs update of column d of A, removal of emptied features, then a birth proposal.
BandOutcome update_activations_band(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index d,
                                    const HyperConfig& cfg, double temperature, RngStream& rng);

/// Pearson correlation between rows of F; NaN where a row is constant.
Eigen::MatrixXd row_correlations(const Eigen::MatrixXd& f);

/// State with features `keep` and `drop` fused: OR of activations,
/// abundance-mass-weighted weights, summed abundance columns. The survivor is
/// `keep` and takes the position it had; `drop` is removed.
ModelState merged_state(const ModelState& state, Eigen::Index keep, Eigen::Index drop);

struct MergeOutcome {
  int proposed = 0;
  int accepted = 0;
};

/// Metropolis merge proposals for every feature pair whose correlation exceeds
/// T_corr, strongest first, each feature used at most once.
MergeOutcome propose_merge(const Eigen::MatrixXd& z, ModelState& state, const HyperConfig& cfg,
                           double temperature, RngStream& rng);

// ---------------------------------------------------------------------------
// Parallel tempering.
// ---------------------------------------------------------------------------

struct Chain {
  ModelState state;
  double temperature = 1.0;
  RngStream rng;
  long sweeps = 0;
};

struct TemperedEnsemble {
  std::vector<Chain> chains;
  long swap_period = 10;
  double cooling = 0.95;
  long sweep_counter = 0;
  RngStream swap_rng;
};

/// Initial state: one feature active in every band, weights near the data
/// mean spectrum, all abundance on that feature, scalars from their priors.
ModelState initial_state(const ObservedImage& image, const HyperConfig& cfg, RngStream& rng);

/// Chains at temperatures ratio^i, chain i drawing from stream i of `seed`.
TemperedEnsemble make_ensemble(const ObservedImage& image, const HyperConfig& cfg,
                               std::uint64_t seed);

/// Untempered log-likelihood of a chain's state.
double swap_energy(const Eigen::MatrixXd& z, const ModelState& state);

/// ln of the swap acceptance ratio for chains at t_i and t_j holding states
/// with swap energies ell_i and ell_j.
double swap_log_acceptance(double t_i, double t_j, double ell_i, double ell_j);

/// Proposes a swap for each adjacent pair (0,1), (1,2), ... Returns accepted count.
int pt_swap(TemperedEnsemble& ensemble, const Eigen::MatrixXd& z);

/// T_i <- max(1, cooling·T_i) for every chain but the first.
void cool(TemperedEnsemble& ensemble);

// ---------------------------------------------------------------------------
// Driver.
// ---------------------------------------------------------------------------

struct SweepRecord {
  long sweep = 0;
  Eigen::Index k = 0;
  double sigma2 = 0.0;
  double log_posterior = 0.0;
  long births_accepted = 0;
  long merges_accepted = 0;
  long swaps_accepted = 0;
  double map_log_posterior = kLogZero;
};

using SweepTrace = std::vector<SweepRecord>;

struct SweepStats {
  long births_proposed = 0;
  long births_accepted = 0;
  long merges_proposed = 0;
  long merges_accepted = 0;
};

/// One full sweep of a chain in the fixed order: σ², noise hypers, abundances,
/// weights, band loop (activations and births), merges, IBP hypers.
SweepStats gibbs_sweep(const Eigen::MatrixXd& z, Chain& chain, const HyperConfig& cfg);

struct UnmixingResult {
  ModelState map_state;
  double map_log_posterior = kLogZero;
  long map_sweep = -1;
  SweepTrace trace;
  Eigen::Index estimated_k = 0;

  Eigen::MatrixXd endmembers() const { return bnu::endmembers(map_state); }
};

/// Full inference: n_iter sweeps of the tempered ensemble, swaps and cooling
/// every swap_period sweeps, approximate MAP over post-burn-in chain-0 samples.
UnmixingResult run(const ObservedImage& image, const HyperConfig& cfg, std::uint64_t seed);

}  // namespace bnu
