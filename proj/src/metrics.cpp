#include "bnu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "bnu/errors.hpp"

namespace bnu {

namespace {

constexpr double kDegrees = 180.0 / std::numbers::pi;

// Depth-first enumeration of injective maps rows -> cols of a small cost
// matrix, rows <= cols.
void search(const Eigen::MatrixXd& cost, Eigen::Index row, std::vector<bool>& taken,
            std::vector<Eigen::Index>& current, double partial, double& best,
            std::vector<Eigen::Index>& best_map) {
  if (row == cost.rows()) {
    if (partial < best) {
      best = partial;
      best_map = current;
    }
    return;
  }
  for (Eigen::Index c = 0; c < cost.cols(); ++c) {
    if (taken[static_cast<std::size_t>(c)]) continue;
    taken[static_cast<std::size_t>(c)] = true;
    current[static_cast<std::size_t>(row)] = c;
    search(cost, row + 1, taken, current, partial + cost(row, c), best, best_map);
    taken[static_cast<std::size_t>(c)] = false;
  }
}

std::vector<Eigen::Index> exhaustive(const Eigen::MatrixXd& cost) {
  std::vector<bool> taken(static_cast<std::size_t>(cost.cols()), false);
  std::vector<Eigen::Index> current(static_cast<std::size_t>(cost.rows()));
  std::vector<Eigen::Index> best_map;
  double best = std::numeric_limits<double>::infinity();
  search(cost, 0, taken, current, 0.0, best, best_map);
  return best_map;
}

void check_matching(const Matching& m, Eigen::Index est_count, Eigen::Index true_count) {
  if (m.size() == 0) throw ContractError("metrics: empty matching");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.estimated[i] < 0 || m.estimated[i] >= est_count || m.truth[i] < 0 ||
        m.truth[i] >= true_count) {
      throw ContractError("metrics: matching index out of range");
    }
  }
}

}  // namespace

double spectral_angle(const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ContractError("spectral_angle: length mismatch");
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return std::numbers::pi / 2.0;
  return std::acos(std::clamp(a.dot(b) / denom, -1.0, 1.0));
}

std::vector<Eigen::Index> hungarian(const Eigen::MatrixXd& cost) {
  // Shortest augmenting path with potentials, 1-based internally.
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (n > m) throw ContractError("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<Eigen::Index> p(m + 1, 0), way(m + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = p[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), -1);
  for (Eigen::Index j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return assignment;
}

Matching match_endmembers(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true) {
  if (f_est.rows() == 0 || f_true.rows() == 0) throw ContractError("match_endmembers: no rows");
  if (f_est.cols() != f_true.cols()) throw ContractError("match_endmembers: band count mismatch");

  Eigen::MatrixXd angles(f_est.rows(), f_true.rows());
  for (Eigen::Index i = 0; i < f_est.rows(); ++i) {
    for (Eigen::Index j = 0; j < f_true.rows(); ++j) {
      angles(i, j) = spectral_angle(f_est.row(i).transpose(), f_true.row(j).transpose());
    }
  }
  // Assign from the smaller side.
  const bool est_smaller = f_est.rows() <= f_true.rows();
  const Eigen::MatrixXd cost = est_smaller ? angles : Eigen::MatrixXd(angles.transpose());
  const bool small = cost.cols() <= kExhaustiveMatchLimit;
  const std::vector<Eigen::Index> assignment = small ? exhaustive(cost) : hungarian(cost);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (truth, estimated)
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    pairs.emplace_back(est_smaller ? assignment[r] : row, est_smaller ? row : assignment[r]);
  }
  std::sort(pairs.begin(), pairs.end());

  Matching m;
  std::vector<bool> used(static_cast<std::size_t>(f_est.rows()), false);
  for (const auto& [t, e] : pairs) {
    m.truth.push_back(t);
    m.estimated.push_back(e);
    m.total_angle += angles(e, t);
    used[static_cast<std::size_t>(e)] = true;
  }
  for (Eigen::Index e = 0; e < f_est.rows(); ++e) {
    if (!used[static_cast<std::size_t>(e)]) m.unmatched_estimated.push_back(e);
  }
  return m;
}

double mean_angle_endmembers(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true,
                             const Matching& m) {
  check_matching(m, f_est.rows(), f_true.rows());
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum += spectral_angle(f_est.row(m.estimated[i]).transpose(), f_true.row(m.truth[i]).transpose());
  }
  return kDegrees * sum / static_cast<double>(m.size());
}

double mean_angle_abundances(const Eigen::MatrixXd& s_est, const Eigen::MatrixXd& s_true,
                             const Matching& m) {
  check_matching(m, s_est.cols(), s_true.cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum += spectral_angle(s_est.col(m.estimated[i]), s_true.col(m.truth[i]));
  }
  return kDegrees * sum / static_cast<double>(m.size());
}

double spectral_information_divergence(const Eigen::Ref<const Eigen::VectorXd>& a,
                                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ContractError("sid: length mismatch");
  auto normalized = [](const Eigen::Ref<const Eigen::VectorXd>& x) -> Eigen::ArrayXd {
    const double total = x.sum();
    // An all-zero spectrum carries no shape; treat it as flat.
    if (!(total > 0.0)) return Eigen::ArrayXd::Constant(x.size(), 1.0 / static_cast<double>(x.size()));
    return (x.array() / total).max(kSidFloor);
  };
  const Eigen::ArrayXd p = normalized(a);
  const Eigen::ArrayXd q = normalized(b);
  const Eigen::ArrayXd log_ratio = (p / q).log();
  return (p * log_ratio).sum() - (q * log_ratio).sum();
}

double mean_sid(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& f_true, const Matching& m) {
  check_matching(m, f_est.rows(), f_true.rows());
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum += spectral_information_divergence(f_est.row(m.estimated[i]).transpose(),
                                           f_true.row(m.truth[i]).transpose());
  }
  return sum / static_cast<double>(m.size());
}

double rmse_over_runs(const std::vector<double>& values) {
  if (values.empty()) throw InputError("rmse_over_runs: no runs");
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

DimensionalityScores dimensionality_scores(const std::vector<Eigen::Index>& k_est,
                                           Eigen::Index k_true) {
  if (k_est.empty()) throw InputError("dimensionality_scores: no runs");
  DimensionalityScores out;
  double sq = 0.0;
  for (Eigen::Index k : k_est) {
    if (k == k_true) out.accuracy += 1.0;
    const double e = static_cast<double>(k - k_true);
    sq += e * e;
  }
  const double n = static_cast<double>(k_est.size());
  out.accuracy /= n;
  out.rmse_k = std::sqrt(sq / n);
  return out;
}

EvalReport evaluate(const Eigen::MatrixXd& f_est, const Eigen::MatrixXd& s_est,
                    const Eigen::MatrixXd& f_true, const Eigen::MatrixXd& s_true) {
  EvalReport r;
  r.k_true = f_true.rows();
  r.k_est = f_est.rows();
  r.matching = match_endmembers(f_est, f_true);
  r.theta_f = mean_angle_endmembers(f_est, f_true, r.matching);
  r.theta_s = mean_angle_abundances(s_est, s_true, r.matching);
  r.mean_sid = mean_sid(f_est, f_true, r.matching);
  return r;
}

}  // namespace bnu
