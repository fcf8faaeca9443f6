#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

#include "bnu/rng.hpp"

namespace bnu {

struct SceneSpec {
  Eigen::Index k = 3;
  Eigen::Index bands = 224;
  Eigen::Index width = 40;
  Eigen::Index height = 40;
  std::optional<double> snr_db;
  std::optional<double> beta_ip;
  std::optional<double> dirichlet_alpha;  // 1/K when unset
  std::string library_path;               // empty: synthetic bumps
  std::uint64_t seed = 0;

  Eigen::Index pixel_count() const { return width * height; }
  double concentration() const {
    return dirichlet_alpha ? *dirichlet_alpha : 1.0 / static_cast<double>(k);
  }
  /// Throws InputError on impossible sizes or parameters.
  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd f_true;   // K×D
  Eigen::MatrixXd s_true;   // N×K, possibly brightness-scaled
  Eigen::MatrixXd z_clean;  // N×D
  Eigen::MatrixXd z_noisy;  // N×D
};

/// Synthetic endmembers are sums of a few Gaussian bumps per row, scaled so
/// their maximum is 1, redrawn until every pair correlates below
/// kMaxEndmemberCorrelation. A library file is loaded and returned as is.
inline constexpr double kMaxEndmemberCorrelation = 0.95;
Eigen::MatrixXd generate_endmembers(const SceneSpec& spec, RngStream& rng);

/// Iid symmetric Dirichlet rows.
Eigen::MatrixXd generate_abundances(const SceneSpec& spec, RngStream& rng);

/// Additive white noise with variance mean(Z²)·10^(-snr/10).
double awgn_variance(const Eigen::MatrixXd& z_clean, double snr_db);
Eigen::MatrixXd apply_awgn(const Eigen::MatrixXd& z_clean, std::optional<double> snr_db,
                           RngStream& rng);

/// Scales each abundance row by an iid Beta(beta_ip, 1) draw.
Eigen::MatrixXd apply_illumination(const Eigen::MatrixXd& s, double beta_ip, RngStream& rng);

/// 10·log10(mean(clean²) / mean((noisy - clean)²)).
double empirical_snr_db(const Eigen::MatrixXd& z_clean, const Eigen::MatrixXd& z_noisy);

/// Endmembers, abundances, optional illumination, composition, optional noise;
/// each stage on its own stream of spec.seed.
GroundTruth compose_scene(const SceneSpec& spec);

}  // namespace bnu
