#pragma once

#include <Eigen/Core>
#include <vector>

namespace bnu {

/// Pairs (estimated row, true row).
struct Matching {
  std::vector<Eigen::Index> estimated;
  std::vector<Eigen::Index> truth;
  std::vector<Eigen::Index> unmatched_estimated;
  double total_angle = 0.0;  // radians

  std::size_t size() const { return estimated.size(); }
};

/// Angle in radians between two vectors; 90° if either is zero.
double spectral_angle(const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b);

/// One-to-one assignment of min(K̂, K) rows minimizing the summed angle.
/// Exhaustive up to kExhaustiveMatchLimit matched rows, Hungarian above.
inline constexpr Eigen::Index kExhaustiveMatchLimit = 8;
Matching match_endmembers(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true);

/// Solves the rectangular assignment problem (rows ≤ cols) for a cost matrix;
/// returns the column assigned to each row.
std::vector<Eigen::Index> hungarian(const Eigen::MatrixXd& cost);

// Averages in degrees over the matched pairs (rows of F, columns of S).
double mean_angle_endmembers(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true,
                             const Matching& m);
double mean_angle_abundances(const Eigen::MatrixXd& s_est, const Eigen::MatrixXd& s_true,
                             const Matching& m);

/// Floor applied to L1-normalized entries before taking logs.
inline constexpr double kSidFloor = 1e-12;
double spectral_information_divergence(const Eigen::Ref<const Eigen::VectorXd>& a,
                                       const Eigen::Ref<const Eigen::VectorXd>& b);
double mean_sid(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true, const Matching& m);

double rmse_over_runs(const std::vector<double>& values);

struct DimensionalityScores {
  double accuracy = 0.0;
  double rmse_k = 0.0;
};
DimensionalityScores dimensionality_scores(const std::vector<Eigen::Index>& k_est,
                                           Eigen::Index k_true);

struct EvalReport {
  double theta_f = 0.0;  // degrees
  double theta_s = 0.0;  // degrees
  double mean_sid = 0.0;
  Matching matching;
  Eigen::Index k_true = 0;
  Eigen::Index k_est = 0;
};

EvalReport evaluate(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& s_est,
                    const Eigen::MatrixXd& f_true, const Eigen::MatrixXd& s_true);

}  // namespace bnu
