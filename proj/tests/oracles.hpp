#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's own formulas.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "bnu/model.hpp"

namespace oracle {

// Draw from N(mean, variance) restricted to [lower, inf) by plain rejection.
inline double naive_truncated_normal(double mean, double variance, double lower,
                                     std::mt19937_64& gen) {
  std::normal_distribution<double> normal(mean, std::sqrt(variance));
  for (;;) {
    const double x = normal(gen);
    if (x >= lower) return x;
  }
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Asymptotic two-sample KS critical value.
inline double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) * std::sqrt((nn + mm) / (nn * mm));
}

inline double normal_log_density(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - r * r / (2.0 * variance);
}

// Element by element: sum of Gaussian log densities, scaled by 1/T.
inline double log_likelihood(const Eigen::MatrixXd& z, const bnu::ModelState& st, double t) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    for (Eigen::Index d = 0; d < z.cols(); ++d) {
      double fit = 0.0;
      for (Eigen::Index k = 0; k < st.a.rows(); ++k) {
        fit += st.s(n, k) * (st.a(k, d) ? st.w(k, d) : 0.0);
      }
      total += normal_log_density(z(n, d), fit, st.sigma2);
    }
  }
  return total / t;
}

inline double residual_sum_squares(const Eigen::MatrixXd& z, const bnu::ModelState& st) {
  double rss = 0.0;
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    for (Eigen::Index d = 0; d < z.cols(); ++d) {
      double fit = 0.0;
      for (Eigen::Index k = 0; k < st.a.rows(); ++k) fit += st.s(n, k) * st.a(k, d) * st.w(k, d);
      rss += (z(n, d) - fit) * (z(n, d) - fit);
    }
  }
  return rss;
}

inline double log_prior_weights(const Eigen::MatrixXd& w, double gamma) {
  const Eigen::Index k = w.rows();
  double total = 0.0;
  for (Eigen::Index d = 0; d < w.cols(); ++d) {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (w(j, d) < 0.0) return -INFINITY;
      mean += w(j, d) / static_cast<double>(k);
    }
    for (Eigen::Index j = 0; j < k; ++j) total += (w(j, d) - mean) * (w(j, d) - mean);
  }
  return -gamma * total;
}

inline double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_inverse_gamma_density(double x, double shape, double scale) {
  // Change of variables from the Gamma density of 1/x.
  return log_gamma_density(1.0 / x, shape, scale) - 2.0 * std::log(x);
}

inline double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Infinite two-parameter IBP class probability, written out directly.
inline double log_ibp(const bnu::ActivationMatrix& a, double alpha, double beta) {
  const Eigen::Index bands = a.cols();
  double harmonic = 0.0;
  for (Eigen::Index d = 1; d <= bands; ++d) harmonic += beta / (beta + static_cast<double>(d) - 1);
  std::map<std::vector<int>, int> patterns;
  double total = -alpha * harmonic;
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    std::vector<int> row(static_cast<std::size_t>(bands));
    int m = 0;
    for (Eigen::Index d = 0; d < bands; ++d) m += row[static_cast<std::size_t>(d)] = a(k, d);
    if (m == 0) continue;
    ++patterns[row];
    total += std::log(alpha * beta) + log_beta_function(m, static_cast<double>(bands - m) + beta);
  }
  for (const auto& [row, count] : patterns) total -= std::lgamma(count + 1.0);
  return total;
}

// Class probability of the finite model with k_star features, each feature
// having its own Beta(alpha*beta/k_star, beta) activation probability.
inline double log_finite_ibp_class(const bnu::ActivationMatrix& a, double alpha, double beta,
                                   double k_star) {
  const Eigen::Index bands = a.cols();
  const double a0 = alpha * beta / k_star;
  auto log_row = [&](int m) {
    return log_beta_function(m + a0, static_cast<double>(bands - m) + beta) -
           log_beta_function(a0, beta);
  };
  std::map<std::vector<int>, int> patterns;
  double total = 0.0;
  double active = 0.0;
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    std::vector<int> row(static_cast<std::size_t>(bands));
    int m = 0;
    for (Eigen::Index d = 0; d < bands; ++d) m += row[static_cast<std::size_t>(d)] = a(k, d);
    if (m == 0) continue;
    ++patterns[row];
    active += 1.0;
    total += log_row(m);
  }
  total += (k_star - active) * log_row(0);
  total += std::lgamma(k_star + 1.0) - std::lgamma(k_star - active + 1.0);
  for (const auto& [row, count] : patterns) total -= std::lgamma(count + 1.0);
  return total;
}

// Small random state with every row of A non-empty and every S row on the simplex.
inline bnu::ModelState random_state(std::mt19937_64& gen, Eigen::Index n, Eigen::Index k,
                                    Eigen::Index bands) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::gamma_distribution<double> expo(1.0, 1.0);
  bnu::ModelState st;
  st.a.resize(k, bands);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index d = 0; d < bands; ++d) st.a(r, d) = unif(gen) < 0.6 ? 1 : 0;
    st.a(r, static_cast<Eigen::Index>(unif(gen) * static_cast<double>(bands))) = 1;
  }
  st.w.resize(k, bands);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index d = 0; d < bands; ++d) st.w(r, d) = unif(gen);
  }
  st.s.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < k; ++r) sum += st.s(i, r) = expo(gen);
    st.s.row(i) /= sum;
  }
  st.sigma2 = 0.05 + unif(gen);
  st.alpha_sigma = 0.5 + 2.0 * unif(gen);
  st.beta_sigma = 0.5 + 2.0 * unif(gen);
  st.ibp.alpha = 0.2 + 2.0 * unif(gen);
  st.ibp.beta = 0.2 + 2.0 * unif(gen);
  return st;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = unif(gen);
  }
  return m;
}

// Mean of N(mu, sd²) truncated to [0, inf).
inline double truncated_normal_mean(double mu, double sd) {
  const double a = -mu / sd;
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  const double tail = 0.5 * std::erfc(a / std::numbers::sqrt2);
  return mu + sd * phi / tail;
}

}  // namespace oracle
