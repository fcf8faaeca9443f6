#include "bnu/sampler.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>
#include <tuple>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"
#include "bnu/simplex.hpp"

namespace bnu {

namespace {

// 1/(Tσ²), zero when the likelihood is switched off.
double likelihood_precision(double sigma2, double temperature) {
  if (temperature == kLikelihoodOff) return 0.0;
  return 1.0 / (temperature * sigma2);
}

void check_shapes(const Eigen::MatrixXd& z, const ModelState& state) {
  if (z.rows() != state.s.rows() || z.cols() != state.a.cols() ||
      state.s.cols() != state.a.rows() || state.w.rows() != state.a.rows() ||
      state.w.cols() != state.a.cols()) {
    throw ContractError("sampler: dimensions of Z, A, W, S disagree");
  }
}

// Mean spectrum of the data clipped at zero; anchors weight rows when the
// distance prior has no other row to pull towards.
Eigen::RowVectorXd reference_spectrum(const Eigen::MatrixXd& z) {
  return z.colwise().mean().cwiseMax(0.0);
}

double fallback_precision(double gamma_w) { return 2.0 * gamma_w; }

bool metropolis_accept(double log_ratio, RngStream& rng) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

}  // namespace

// --- σ² and its hyperparameters --------------------------------------------

InverseGammaParams sigma2_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                      double temperature) {
  check_shapes(z, state);
  if (temperature == kLikelihoodOff) return {state.alpha_sigma, state.beta_sigma};
  const double rss = residual_sum_squares(z, state);
  // A very hot chain can wander far enough for the RSS to overflow.
  const double scale = std::min(state.beta_sigma + 0.5 * rss / temperature,
                                std::numeric_limits<double>::max());
  return {state.alpha_sigma + 0.5 * static_cast<double>(z.size()) / temperature, scale};
}

double sample_sigma2(const Eigen::MatrixXd& z, const ModelState& state, double temperature,
                     RngStream& rng) {
  const InverseGammaParams p = sigma2_conditional(z, state, temperature);
  return sample_inverse_gamma(p.shape, p.scale, rng);
}

double noise_hyper_log_target(double sigma2, double alpha_sigma, double beta_sigma,
                              const HyperConfig& cfg) {
  if (!(alpha_sigma > 0.0) || !(beta_sigma > 0.0)) return kLogZero;
  return log_inverse_gamma_pdf(sigma2, alpha_sigma, beta_sigma) +
         log_gamma_pdf(alpha_sigma, cfg.alpha_sigma_shape, cfg.alpha_sigma_rate) +
         log_gamma_pdf(beta_sigma, cfg.beta_sigma_shape, cfg.beta_sigma_rate);
}

NoiseHypers mh_step_noise_hypers(const ModelState& state, const HyperConfig& cfg, RngStream& rng) {
  NoiseHypers h{state.alpha_sigma, state.beta_sigma};
  double current = noise_hyper_log_target(state.sigma2, h.alpha_sigma, h.beta_sigma, cfg);

  const double alpha_new = std::abs(h.alpha_sigma + kNoiseHyperStep * rng.normal());
  const double with_alpha = noise_hyper_log_target(state.sigma2, alpha_new, h.beta_sigma, cfg);
  if (metropolis_accept(with_alpha - current, rng)) {
    h.alpha_sigma = alpha_new;
    current = with_alpha;
  }
  const double beta_new = std::abs(h.beta_sigma + kNoiseHyperStep * rng.normal());
  const double with_beta = noise_hyper_log_target(state.sigma2, h.alpha_sigma, beta_new, cfg);
  if (metropolis_accept(with_beta - current, rng)) h.beta_sigma = beta_new;
  return h;
}

// --- abundances --------------------------------------------------------------

AbundanceConditional abundance_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                           double temperature) {
  check_shapes(z, state);
  const Eigen::Index k = state.feature_count();
  const Eigen::MatrixXd f = endmembers(state);
  Eigen::MatrixXd gram = f * f.transpose();
  if (k > 0) {
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
      const double trace = gram.trace();
      const double jitter = trace > 0.0 ? 1e-8 * trace / static_cast<double>(k) : 1e-12;
      gram.diagonal().array() += jitter;
    }
  }
  const double lambda = likelihood_precision(state.sigma2, temperature);
  return {gram * lambda, (z * f.transpose()) * lambda};
}

Eigen::VectorXd sample_abundance_row(const Eigen::Ref<const Eigen::RowVectorXd>& z_n,
                                     const ModelState& state, Eigen::Index n, double temperature,
                                     RngStream& rng, Eigen::Index redundant) {
  const Eigen::Index k = state.feature_count();
  if (z_n.size() != state.a.cols() || n < 0 || n >= state.s.rows()) {
    throw ContractError("sample_abundance_row: pixel index or band count out of range");
  }
  if (k <= 1) return Eigen::VectorXd::Ones(k);
  const Eigen::MatrixXd f = endmembers(state);
  ModelState single = state;
  single.s = state.s.row(n);
  const AbundanceConditional cond = abundance_conditional(z_n, single, temperature);
  return sample_simplex_gaussian_natural(cond.precision, cond.linear.row(0).transpose(),
                                         state.s.row(n).transpose(), rng, redundant);
}

void sample_abundances(const Eigen::MatrixXd& z, ModelState& state, double temperature,
                       RngStream& rng, long sweep) {
  const Eigen::Index k = state.feature_count();
  if (k == 0) return;
  if (k == 1) {
    state.s.setOnes();
    return;
  }
  const AbundanceConditional cond = abundance_conditional(z, state, temperature);
  const Eigen::Index redundant = static_cast<Eigen::Index>(sweep % k);
  for (Eigen::Index n = 0; n < state.s.rows(); ++n) {
    state.s.row(n) = sample_simplex_gaussian_natural(cond.precision, cond.linear.row(n).transpose(),
                                                     state.s.row(n).transpose(), rng, redundant)
                         .transpose();
  }
}

// --- weights -----------------------------------------------------------------

WeightConditional weight_row_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                         Eigen::Index k, double temperature, double gamma_w) {
  check_shapes(z, state);
  const Eigen::Index rows = state.feature_count();
  if (k < 0 || k >= rows) throw ContractError("weight_row_conditional: feature index out of range");

  const Eigen::MatrixXd f = endmembers(state);
  const Eigen::VectorXd s_k = state.s.col(k);
  const double mass2 = s_k.squaredNorm();
  const double lambda = likelihood_precision(state.sigma2, temperature);
  const Eigen::VectorXd active = state.a.row(k).cast<double>().transpose();

  // s_kᵀ (Z - Σ_{k'≠k} s_k' f_k'), band by band.
  const Eigen::VectorXd projected =
      (s_k.transpose() * z - (s_k.transpose() * state.s) * f).transpose() + mass2 * f.row(k).transpose();

  const double n_features = static_cast<double>(rows);
  const double prior_precision = 2.0 * gamma_w * (1.0 - 1.0 / n_features);
  const Eigen::VectorXd others = (state.w.colwise().sum() - state.w.row(k)).transpose();

  WeightConditional c;
  c.precision = (lambda * mass2) * active;
  c.precision.array() += prior_precision;
  c.linear = lambda * active.cwiseProduct(projected) + (2.0 * gamma_w / n_features) * others;
  return c;
}

Eigen::VectorXd sample_weight_row(const Eigen::MatrixXd& z, const ModelState& state,
                                  Eigen::Index k, double temperature, double gamma_w,
                                  RngStream& rng) {
  const WeightConditional c = weight_row_conditional(z, state, k, temperature, gamma_w);
  Eigen::VectorXd w = state.w.row(k).transpose();
  for (Eigen::Index d = 0; d < w.size(); ++d) {
    const double precision = c.precision[d];
    if (!(precision > 0.0)) continue;
    w[d] = sample_truncated_normal({c.linear[d] / precision, 1.0 / precision, 0.0}, rng);
  }
  return w;
}

// --- activations and births --------------------------------------------------

double activation_probability(const Eigen::MatrixXd& z, const ModelState& state, Eigen::Index k,
                              Eigen::Index d, double temperature) {
  const Eigen::Index bands = state.a.cols();
  const Eigen::Index m_excl = state.a.row(k).cast<Eigen::Index>().sum() - state.a(k, d);
  const double prior_on = prior_prob_entry_active(m_excl, bands, state.ibp.beta);
  if (prior_on <= 0.0) return 0.0;

  const double lambda = likelihood_precision(state.sigma2, temperature);
  double log_lik_ratio = 0.0;
  if (lambda > 0.0) {
    const Eigen::VectorXd f_d =
        state.a.col(d).cast<double>().cwiseProduct(state.w.col(d));
    const Eigen::VectorXd s_k = state.s.col(k);
    // Residual of band d with feature k's contribution taken out.
    const Eigen::VectorXd e = z.col(d) - state.s * f_d + s_k * f_d[k];
    const double w = state.w(k, d);
    const double delta_rss = w * w * s_k.squaredNorm() - 2.0 * w * s_k.dot(e);
    log_lik_ratio = -0.5 * lambda * delta_rss;
  }
  const double log_odds = std::log(prior_on) - std::log1p(-prior_on) + log_lik_ratio;
  return 1.0 / (1.0 + std::exp(-log_odds));
}

namespace {

// ln Φ(x), with the asymptotic tail where erfc underflows.
double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / (x * x));
}

}  // namespace

BlockConditional activation_weight_conditional(const Eigen::MatrixXd& z, const ModelState& state,
                                               Eigen::Index k, Eigen::Index d, double temperature,
                                               double gamma_w) {
  const Eigen::Index rows = state.feature_count();
  const Eigen::Index bands = state.a.cols();
  BlockConditional c;
  const Eigen::Index m_excl = state.a.row(k).cast<Eigen::Index>().sum() - state.a(k, d);
  if (rows < 2 || m_excl == 0) return c;

  const double n_features = static_cast<double>(rows);
  c.prior_precision = 2.0 * gamma_w * (1.0 - 1.0 / n_features);
  c.prior_mean = (state.w.col(d).sum() - state.w(k, d)) / (n_features - 1.0);

  const double lambda = likelihood_precision(state.sigma2, temperature);
  double a_lik = 0.0, b_lik = 0.0;
  if (lambda > 0.0) {
    const Eigen::VectorXd f_d = state.a.col(d).cast<double>().cwiseProduct(state.w.col(d));
    const Eigen::VectorXd s_k = state.s.col(k);
    const Eigen::VectorXd e = z.col(d) - state.s * f_d + s_k * f_d[k];
    a_lik = lambda * s_k.squaredNorm();
    b_lik = lambda * s_k.dot(e);
  }
  c.active_precision = c.prior_precision + a_lik;
  c.active_mean = (c.prior_precision * c.prior_mean + b_lik) / c.active_precision;

  const double prior_on = prior_prob_entry_active(m_excl, bands, state.ibp.beta);
  // Both cases integrate w_kd over [0, inf) against the same Gaussian prior factor.
  const double log_on = 0.5 * std::log(c.prior_precision / c.active_precision) +
                        0.5 * c.active_precision * c.active_mean * c.active_mean -
                        0.5 * c.prior_precision * c.prior_mean * c.prior_mean +
                        log_normal_cdf(c.active_mean * std::sqrt(c.active_precision));
  const double log_off = log_normal_cdf(c.prior_mean * std::sqrt(c.prior_precision));
  c.log_odds = std::log(prior_on) - std::log1p(-prior_on) + log_on - log_off;
  c.defined = true;
  return c;
}

bool resample_activation_weight(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index k,
                                Eigen::Index d, double temperature, double gamma_w, RngStream& rng) {
  const BlockConditional c = activation_weight_conditional(z, state, k, d, temperature, gamma_w);
  if (!c.defined) return false;
  const bool on = rng.uniform() < 1.0 / (1.0 + std::exp(-c.log_odds));
  state.a(k, d) = on ? 1 : 0;
  state.w(k, d) = on ? sample_truncated_normal({c.active_mean, 1.0 / c.active_precision, 0.0}, rng)
                     : sample_truncated_normal({c.prior_mean, 1.0 / c.prior_precision, 0.0}, rng);
  return true;
}

Eigen::Index remove_empty_features(ModelState& state) {
  const std::vector<Eigen::Index> rows = empty_rows(state.a);
  if (rows.empty()) return 0;
  erase_rows(state.a, rows);
  erase_rows(state.w, rows);
  Eigen::MatrixXd st = state.s.transpose();
  erase_rows(st, rows);
  state.s = st.transpose();
  const Eigen::Index k = state.s.cols();
  if (k > 0) {
    for (Eigen::Index n = 0; n < state.s.rows(); ++n) {
      const double total = state.s.row(n).sum();
      if (total > 1e-12) {
        state.s.row(n) /= total;
      } else {
        state.s.row(n).setConstant(1.0 / static_cast<double>(k));
      }
    }
  }
  return static_cast<Eigen::Index>(rows.size());
}

double augmented_log_acceptance(double log_likelihood_ratio, long k_plus, double rate,
                                double p_plus) {
  const double log_prior = log_poisson_pmf(k_plus, rate);
  const double proposal =
      (k_plus == 1 ? p_plus : 0.0) + (1.0 - p_plus) * std::exp(log_prior);
  return log_likelihood_ratio + log_prior - std::log(proposal);
}

long propose_feature_count(const IbpParams& p, Eigen::Index bands, double p_plus, RngStream& rng) {
  if (rng.uniform() < p_plus) return 1;
  return sample_new_feature_count(p, bands, rng);
}

BirthOutcome propose_new_features(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index d,
                                  const HyperConfig& cfg, double temperature, RngStream& rng,
                                  long k_plus) {
  check_shapes(z, state);
  const Eigen::Index bands = state.a.cols();
  const Eigen::Index pixels = state.s.rows();
  const Eigen::Index k = state.feature_count();
  if (d < 0 || d >= bands) throw ContractError("propose_new_features: band index out of range");

  BirthOutcome out;
  if (k_plus < 0) k_plus = propose_feature_count(state.ibp, bands, cfg.p_plus, rng);
  out.proposed = k_plus;
  if (k_plus == 0) return out;

  const Eigen::Index k_new = k + k_plus;
  const Eigen::RowVectorXd anchor = k > 0 ? Eigen::RowVectorXd(state.w.colwise().mean())
                                          : reference_spectrum(z);

  // Weights of the new rows: a few Gibbs scans over the distance prior with the
  // existing rows held fixed.
  Eigen::MatrixXd w_new = anchor.replicate(k_plus, 1);
  if (k_new == 1) {
    const double var = 1.0 / fallback_precision(cfg.gamma_w);
    for (Eigen::Index b = 0; b < bands; ++b) {
      w_new(0, b) = sample_truncated_normal({anchor[b], var, 0.0}, rng);
    }
  } else {
    const double precision = 2.0 * cfg.gamma_w * (1.0 - 1.0 / static_cast<double>(k_new));
    const Eigen::RowVectorXd existing =
        k > 0 ? Eigen::RowVectorXd(state.w.colwise().sum()) : Eigen::RowVectorXd::Zero(bands);
    for (int scan = 0; scan < cfg.new_weight_scans; ++scan) {
      for (Eigen::Index j = 0; j < k_plus; ++j) {
        const Eigen::RowVectorXd others = existing + w_new.colwise().sum() - w_new.row(j);
        for (Eigen::Index b = 0; b < bands; ++b) {
          const double mean = others[b] / static_cast<double>(k_new - 1);
          w_new(j, b) = sample_truncated_normal({mean, 1.0 / precision, 0.0}, rng);
        }
      }
    }
  }

  ModelState proposed = state;
  proposed.a.conservativeResize(k_new, Eigen::NoChange);
  proposed.a.bottomRows(k_plus).setZero();
  proposed.a.bottomRows(k_plus).col(d).setOnes();
  proposed.w.conservativeResize(k_new, Eigen::NoChange);
  proposed.w.bottomRows(k_plus) = w_new;
  proposed.s.conservativeResize(Eigen::NoChange, k_new);
  const double shape = 1.0 / static_cast<double>(std::max<Eigen::Index>(k, 1));
  for (Eigen::Index n = 0; n < pixels; ++n) {
    for (Eigen::Index j = k; j < k_new; ++j) proposed.s(n, j) = sample_gamma(shape, 1.0, rng);
    proposed.s.row(n) /= proposed.s.row(n).sum();
  }

  const double log_lik_ratio =
      temperature == kLikelihoodOff
          ? 0.0
          : log_likelihood(z, proposed, temperature) - log_likelihood(z, state, temperature);
  out.log_acceptance = augmented_log_acceptance(log_lik_ratio, k_plus,
                                                new_feature_rate(state.ibp, bands), cfg.p_plus);
  if (metropolis_accept(out.log_acceptance, rng)) {
    state = std::move(proposed);
    out.accepted = true;
  }
  return out;
}

BandOutcome update_activations_band(const Eigen::MatrixXd& z, ModelState& state, Eigen::Index d,
                                    const HyperConfig& cfg, double temperature, RngStream& rng) {
  check_shapes(z, state);
  for (Eigen::Index k = 0; k < state.feature_count(); ++k) {
    const double on = activation_probability(z, state, k, d, temperature);
    state.a(k, d) = rng.uniform() < on ? 1 : 0;
  }
  BandOutcome out;
  out.removed = remove_empty_features(state);
  out.birth = propose_new_features(z, state, d, cfg, temperature, rng);
  return out;
}

// --- merges ------------------------------------------------------------------

Eigen::MatrixXd row_correlations(const Eigen::MatrixXd& f) {
  const Eigen::MatrixXd centered = f.colwise() - f.rowwise().mean();
  const Eigen::VectorXd norms = centered.rowwise().norm();
  Eigen::MatrixXd c = centered * centered.transpose();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const double denom = norms[i] * norms[j];
      c(i, j) = denom > 0.0 ? c(i, j) / denom : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return c;
}

ModelState merged_state(const ModelState& state, Eigen::Index keep, Eigen::Index drop) {
  const Eigen::Index k = state.feature_count();
  if (keep == drop || keep < 0 || drop < 0 || keep >= k || drop >= k) {
    throw ContractError("merged_state: invalid feature pair");
  }
  ModelState m = state;
  const double mass_keep = state.s.col(keep).sum();
  const double mass_drop = state.s.col(drop).sum();
  const double total = mass_keep + mass_drop;
  if (total > 0.0) {
    m.w.row(keep) = (mass_keep * state.w.row(keep) + mass_drop * state.w.row(drop)) / total;
  } else {
    m.w.row(keep) = 0.5 * (state.w.row(keep) + state.w.row(drop));
  }
  m.a.row(keep) = state.a.row(keep).cwiseMax(state.a.row(drop));
  m.s.col(keep) += state.s.col(drop);

  const std::vector<Eigen::Index> gone{drop};
  erase_rows(m.a, gone);
  erase_rows(m.w, gone);
  Eigen::MatrixXd st = m.s.transpose();
  erase_rows(st, gone);
  m.s = st.transpose();
  return m;
}

MergeOutcome propose_merge(const Eigen::MatrixXd& z, ModelState& state, const HyperConfig& cfg,
                           double temperature, RngStream& rng) {
  check_shapes(z, state);
  MergeOutcome out;
  const Eigen::Index k = state.feature_count();
  if (k < 2) return out;

  const Eigen::MatrixXd corr = row_correlations(endmembers(state));
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      if (corr(i, j) > cfg.t_corr) pairs.emplace_back(corr(i, j), i, j);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });

  // position[original] = current row, -1 once merged away.
  std::vector<Eigen::Index> position(static_cast<std::size_t>(k));
  std::iota(position.begin(), position.end(), Eigen::Index{0});
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  double current_lp = log_posterior(z, state, cfg, temperature);

  for (const auto& [c, i, j] : pairs) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    if (used[ui] || used[uj]) continue;
    used[ui] = used[uj] = true;
    const Eigen::Index pi = position[ui];
    const Eigen::Index pj = position[uj];
    const bool keep_i = state.s.col(pi).sum() >= state.s.col(pj).sum();
    const Eigen::Index keep = keep_i ? pi : pj;
    const Eigen::Index drop = keep_i ? pj : pi;

    ++out.proposed;
    ModelState candidate = merged_state(state, keep, drop);
    const double candidate_lp = log_posterior(z, candidate, cfg, temperature);
    if (!metropolis_accept(candidate_lp - current_lp, rng)) continue;

    state = std::move(candidate);
    current_lp = candidate_lp;
    ++out.accepted;
    for (auto& p : position) {
      if (p == drop) {
        p = -1;
      } else if (p > drop) {
        --p;
      }
    }
  }
  return out;
}

// --- tempering ---------------------------------------------------------------

ModelState initial_state(const ObservedImage& image, const HyperConfig& cfg, RngStream& rng) {
  const Eigen::MatrixXd& z = image.pixels;
  const Eigen::Index bands = z.cols();
  ModelState st;
  st.alpha_sigma = sample_gamma(cfg.alpha_sigma_shape, cfg.alpha_sigma_rate, rng);
  st.beta_sigma = sample_gamma(cfg.beta_sigma_shape, cfg.beta_sigma_rate, rng);
  st.sigma2 = sample_inverse_gamma(st.alpha_sigma, st.beta_sigma, rng);
  st.ibp = cfg.ibp_prior(sample_gamma(cfg.alpha_a_shape, cfg.alpha_a_rate, rng),
                         sample_gamma(cfg.beta_a_shape, cfg.beta_a_rate, rng));
  st.a = ActivationMatrix::Ones(1, bands);
  st.w.resize(1, bands);
  const Eigen::RowVectorXd anchor = reference_spectrum(z);
  const double var = 1.0 / fallback_precision(cfg.gamma_w);
  for (Eigen::Index b = 0; b < bands; ++b) {
    st.w(0, b) = sample_truncated_normal({anchor[b], var, 0.0}, rng);
  }
  st.s = Eigen::MatrixXd::Ones(z.rows(), 1);
  return st;
}

TemperedEnsemble make_ensemble(const ObservedImage& image, const HyperConfig& cfg,
                               std::uint64_t seed) {
  TemperedEnsemble e;
  e.swap_period = cfg.swap_period;
  e.cooling = cfg.cooling;
  e.swap_rng = RngStream(seed, static_cast<std::uint64_t>(cfg.n_chains));
  e.chains.reserve(static_cast<std::size_t>(cfg.n_chains));
  for (int i = 0; i < cfg.n_chains; ++i) {
    Chain c;
    c.rng = RngStream(seed, static_cast<std::uint64_t>(i));
    c.temperature = std::pow(cfg.ladder_ratio, i);
    c.state = initial_state(image, cfg, c.rng);
    e.chains.push_back(std::move(c));
  }
  return e;
}

double swap_energy(const Eigen::MatrixXd& z, const ModelState& state) {
  return log_likelihood(z, state, 1.0);
}

double swap_log_acceptance(double t_i, double t_j, double ell_i, double ell_j) {
  return (1.0 / t_i - 1.0 / t_j) * (ell_j - ell_i);
}

int pt_swap(TemperedEnsemble& ensemble, const Eigen::MatrixXd& z) {
  int accepted = 0;
  auto& chains = ensemble.chains;
  for (std::size_t i = 0; i + 1 < chains.size(); ++i) {
    const double log_a =
        swap_log_acceptance(chains[i].temperature, chains[i + 1].temperature,
                            swap_energy(z, chains[i].state), swap_energy(z, chains[i + 1].state));
    if (metropolis_accept(log_a, ensemble.swap_rng)) {
      std::swap(chains[i].state, chains[i + 1].state);
      ++accepted;
    }
  }
  return accepted;
}

void cool(TemperedEnsemble& ensemble) {
  for (std::size_t i = 1; i < ensemble.chains.size(); ++i) {
    auto& t = ensemble.chains[i].temperature;
    t = std::max(1.0, ensemble.cooling * t);
  }
}

// --- driver ------------------------------------------------------------------

SweepStats gibbs_sweep(const Eigen::MatrixXd& z, Chain& chain, const HyperConfig& cfg) {
  SweepStats stats;
  ModelState& st = chain.state;
  const double t = chain.temperature;
  RngStream& rng = chain.rng;

  st.sigma2 = sample_sigma2(z, st, t, rng);
  const NoiseHypers hypers = mh_step_noise_hypers(st, cfg, rng);
  st.alpha_sigma = hypers.alpha_sigma;
  st.beta_sigma = hypers.beta_sigma;

  sample_abundances(z, st, t, rng, chain.sweeps);
  for (Eigen::Index k = 0; k < st.feature_count(); ++k) {
    st.w.row(k) = sample_weight_row(z, st, k, t, cfg.gamma_w, rng).transpose();
  }
  if (cfg.block_activations) {
    for (Eigen::Index d = 0; d < st.a.cols(); ++d) {
      for (Eigen::Index k = 0; k < st.feature_count(); ++k) {
        resample_activation_weight(z, st, k, d, t, cfg.gamma_w, rng);
      }
    }
  }
  for (Eigen::Index d = 0; d < st.a.cols(); ++d) {
    const BandOutcome band = update_activations_band(z, st, d, cfg, t, rng);
    if (band.birth.proposed > 0) ++stats.births_proposed;
    if (band.birth.accepted) stats.births_accepted += band.birth.proposed;
  }
  if (chain.sweeps % cfg.merge_period == 0) {
    const MergeOutcome merge = propose_merge(z, st, cfg, t, rng);
    stats.merges_proposed = merge.proposed;
    stats.merges_accepted = merge.accepted;
  }
  if (cfg.sample_ibp_hypers) {
    st.ibp.alpha = sample_alpha_a(st.feature_count(), st.ibp, st.a.cols(), rng);
    st.ibp = mh_step_beta_a(st.a, st.ibp, rng);
  }
  ++chain.sweeps;
  return stats;
}

UnmixingResult run(const ObservedImage& image, const HyperConfig& cfg, std::uint64_t seed) {
  image.validate();
  cfg.validate();
  const Eigen::MatrixXd& z = image.pixels;

  TemperedEnsemble ensemble = make_ensemble(image, cfg, seed);
  const long burn = static_cast<long>(std::floor(cfg.burn_in * static_cast<double>(cfg.n_iter)));

  UnmixingResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.n_iter));

  auto advance = [&](std::size_t index, long sweeps) {
    Chain& chain = ensemble.chains[index];
    for (long i = 0; i < sweeps; ++i) {
      const SweepStats stats = gibbs_sweep(z, chain, cfg);
      if (index != 0) continue;
      SweepRecord rec;
      rec.sweep = chain.sweeps - 1;
      rec.k = chain.state.feature_count();
      rec.sigma2 = chain.state.sigma2;
      rec.log_posterior = log_posterior(z, chain.state, cfg, 1.0);
      rec.births_accepted = stats.births_accepted;
      rec.merges_accepted = stats.merges_accepted;
      if (rec.sweep >= burn && rec.log_posterior > result.map_log_posterior) {
        result.map_log_posterior = rec.log_posterior;
        result.map_state = chain.state;
        result.map_sweep = rec.sweep;
      }
      rec.map_log_posterior = result.map_log_posterior;
      result.trace.push_back(rec);
    }
  };

  const std::size_t n_chains = ensemble.chains.size();
  const std::size_t workers =
      cfg.threads == 0 ? n_chains : std::min<std::size_t>(n_chains, static_cast<std::size_t>(cfg.threads));

  while (ensemble.sweep_counter < cfg.n_iter) {
    const long to_swap = ensemble.swap_period - ensemble.sweep_counter % ensemble.swap_period;
    const long block = std::min(to_swap, cfg.n_iter - ensemble.sweep_counter);
    if (workers <= 1) {
      for (std::size_t c = 0; c < n_chains; ++c) advance(c, block);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t c = w; c < n_chains; c += workers) advance(c, block);
        });
      }
    }
    ensemble.sweep_counter += block;
    if (ensemble.sweep_counter % ensemble.swap_period == 0 && n_chains > 1) {
      const int swaps = pt_swap(ensemble, z);
      cool(ensemble);
      result.trace.back().swaps_accepted = swaps;
    }
  }

  if (result.map_sweep < 0) {
    throw std::runtime_error("no post-burn-in sample with finite posterior");
  }
  result.estimated_k = result.map_state.feature_count();
  return result;
}

}  // namespace bnu
