#include "bnu/ibp.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"

namespace bnu {

namespace {

std::string row_key(const ActivationMatrix& a, Eigen::Index k) {
  std::string key(static_cast<std::size_t>(a.cols()), '0');
  for (Eigen::Index d = 0; d < a.cols(); ++d) {
    if (a(k, d)) key[static_cast<std::size_t>(d)] = '1';
  }
  return key;
}

}  // namespace

double expected_feature_count(double alpha, double beta, Eigen::Index bands) {
  double sum = 0.0;
  for (Eigen::Index d = 1; d <= bands; ++d) sum += beta / (beta + static_cast<double>(d) - 1.0);
  return alpha * sum;
}

Eigen::VectorXi active_counts(const ActivationMatrix& a) {
  return a.cast<int>().rowwise().sum();
}

std::vector<Eigen::Index> empty_rows(const ActivationMatrix& a) {
  std::vector<Eigen::Index> rows;
  const Eigen::VectorXi m = active_counts(a);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    if (m[k] == 0) rows.push_back(k);
  }
  return rows;
}

double log_prob_activations(const ActivationMatrix& a, const IbpParams& p) {
  const Eigen::Index bands = a.cols();
  const Eigen::VectorXi m = active_counts(a);
  std::unordered_map<std::string, int> histories;
  double log_p = -expected_feature_count(p.alpha, p.beta, bands);
  int active = 0;
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    if (m[k] == 0) continue;
    ++active;
    ++histories[row_key(a, k)];
    log_p += log_beta_fn(static_cast<double>(m[k]),
                         static_cast<double>(bands - m[k]) + p.beta);
  }
  if (active > 0) log_p += active * std::log(p.alpha * p.beta);
  for (const auto& [key, count] : histories) log_p -= std::lgamma(count + 1.0);
  return log_p;
}

double prior_prob_entry_active(Eigen::Index m_excl, Eigen::Index bands, double beta) {
  if (m_excl < 0 || m_excl > bands - 1) {
    throw ContractError("prior_prob_entry_active: m_excl out of range");
  }
  return static_cast<double>(m_excl) / (static_cast<double>(bands) + beta - 1.0);
}

double new_feature_rate(const IbpParams& p, Eigen::Index bands) {
  return p.alpha * p.beta / (p.beta + static_cast<double>(bands) - 1.0);
}

long sample_new_feature_count(const IbpParams& p, Eigen::Index bands, RngStream& rng) {
  return sample_poisson(new_feature_rate(p, bands), rng);
}

double sample_alpha_a(Eigen::Index active_features, const IbpParams& p, Eigen::Index bands,
                      RngStream& rng) {
  const double shape = static_cast<double>(active_features) + p.alpha_shape;
  const double rate = expected_feature_count(1.0, p.beta, bands) + p.alpha_rate;
  return sample_gamma(shape, rate, rng);
}

double log_ratio_beta_a(const ActivationMatrix& a, const IbpParams& p, double beta_new) {
  IbpParams proposed = p;
  proposed.beta = beta_new;
  return log_prob_activations(a, proposed) - log_prob_activations(a, p);
}

IbpParams mh_step_beta_a(const ActivationMatrix& a, const IbpParams& p, RngStream& rng) {
  const double proposal = sample_gamma(p.beta_shape, p.beta_rate, rng);
  const double log_r = log_ratio_beta_a(a, p, proposal);
  IbpParams next = p;
  if (log_r >= 0.0 || std::log(rng.uniform()) < log_r) next.beta = proposal;
  return next;
}

void gibbs_sweep_prior(ActivationMatrix& a, const IbpParams& p, RngStream& rng) {
  const Eigen::Index bands = a.cols();
  for (Eigen::Index d = 0; d < bands; ++d) {
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      const Eigen::Index m_excl = a.row(k).cast<Eigen::Index>().sum() - a(k, d);
      const double on = prior_prob_entry_active(m_excl, bands, p.beta);
      a(k, d) = rng.uniform() < on ? 1 : 0;
    }
    erase_rows(a, empty_rows(a));
    const long extra = sample_new_feature_count(p, bands, rng);
    if (extra > 0) {
      const Eigen::Index old_rows = a.rows();
      a.conservativeResize(old_rows + extra, Eigen::NoChange);
      a.bottomRows(extra).setZero();
      a.bottomRows(extra).col(d).setOnes();
    }
  }
}

}  // namespace bnu
