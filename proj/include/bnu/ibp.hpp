#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "bnu/rng.hpp"

namespace bnu {

/// K×D binary feature-activation matrix: rows are endmembers, columns bands.
using ActivationMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Two-parameter IBP concentration (alpha) and stick (beta) with their Gamma
/// hyperpriors in shape-rate form.
struct IbpParams {
  double alpha = 1.0;
  double beta = 1.0;
  double alpha_shape = 1.0;
  double alpha_rate = 1.0;
  double beta_shape = 1.0;
  double beta_rate = 10.0;
};

/// Expected number of active rows, alpha * sum_{d=1..D} beta / (beta + d - 1).
double expected_feature_count(double alpha, double beta, Eigen::Index bands);

/// Log class probability of A under the infinite two-parameter IBP, including
/// the 1/prod K_h! term for repeated rows. All-zero rows are inactive and ignored.
double log_prob_activations(const ActivationMatrix& a, const IbpParams& p);

/// Prior probability that entry (k, d) is on given the other D-1 entries of row k.
double prior_prob_entry_active(Eigen::Index m_excl, Eigen::Index bands, double beta);

/// Poisson rate of brand-new features per band.
double new_feature_rate(const IbpParams& p, Eigen::Index bands);

long sample_new_feature_count(const IbpParams& p, Eigen::Index bands, RngStream& rng);

/// Gibbs draw of alpha given K active features.
double sample_alpha_a(Eigen::Index active_features, const IbpParams& p, Eigen::Index bands,
                      RngStream& rng);

/// log p(A | alpha, beta_new) - log p(A | alpha, beta).
double log_ratio_beta_a(const ActivationMatrix& a, const IbpParams& p, double beta_new);

/// Independence Metropolis step for beta with the Gamma hyperprior as proposal.
IbpParams mh_step_beta_a(const ActivationMatrix& a, const IbpParams& p, RngStream& rng);

/// Row sums m_k.
Eigen::VectorXi active_counts(const ActivationMatrix& a);

/// Indices of all-zero rows, ascending.
std::vector<Eigen::Index> empty_rows(const ActivationMatrix& a);

/// Removes the listed rows (ascending indices) from any dense matrix.
template <typename Matrix>
void erase_rows(Matrix& m, const std::vector<Eigen::Index>& ascending) {
  if (ascending.empty()) return;
  Matrix kept(m.rows() - static_cast<Eigen::Index>(ascending.size()), m.cols());
  Eigen::Index out = 0;
  std::size_t next = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (next < ascending.size() && ascending[next] == r) {
      ++next;
      continue;
    }
    kept.row(out++) = m.row(r);
  }
  m = std::move(kept);
}

/// One prior-only sweep of the IBP over the bands: entry updates, removal of
/// features left with no active band, then Poisson new features that are
/// active only in the current band.
void gibbs_sweep_prior(ActivationMatrix& a, const IbpParams& p, RngStream& rng);

}  // namespace bnu
