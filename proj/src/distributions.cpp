#include "bnu/distributions.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "bnu/errors.hpp"

namespace bnu {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be finite and positive, got " +
                           std::to_string(value));
  }
}

// Upper tail of the standard normal.
double normal_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Inverse of normal_tail for q in (0, 1).
double normal_tail_inverse(double q) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

// Standard normal truncated to [a, inf), a > 2: Robert's exponential proposal
// with the optimal rate.
double tail_exponential(double a, double b, RngStream& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.uniform()) / rate;
    if (z > b) continue;
    const double d = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

// Standard normal truncated to [a, b] with 0 <= a < b (b may be +inf).
double standard_upper(double a, double b, RngStream& rng) {
  const double width = b - a;
  // Uniform proposal is efficient when the density barely varies on [a, b].
  if (std::isfinite(b) && (b * b - a * a) <= 2.4) {
    for (;;) {
      const double z = a + width * rng.uniform();
      if (std::log(rng.uniform()) <= -0.5 * (z * z - a * a)) return z;
    }
  }
  if (a > 30.0) return tail_exponential(a, b, rng);
  const double qa = normal_tail(a);
  const double qb = std::isfinite(b) ? normal_tail(b) : 0.0;
  const double q = qb + rng.uniform() * (qa - qb);
  return std::clamp(normal_tail_inverse(q), a, b);
}

// Standard normal truncated to [a, b], a < b, either bound possibly infinite.
double standard_interval(double a, double b, RngStream& rng) {
  if (a >= 0.0) return standard_upper(a, b, rng);
  if (b <= 0.0) return -standard_upper(-b, -a, rng);
  // Interval straddles the mode.
  const double far = std::max(-a, b);
  if (std::isfinite(far) && far * far <= 2.4) {
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (std::log(rng.uniform()) <= -0.5 * z * z) return z;
    }
  }
  for (;;) {
    const double z = rng.normal();
    if (z >= a && z <= b) return z;
  }
}

}  // namespace

double sample_truncated_normal(const TruncatedNormalSpec& spec, RngStream& rng) {
  if (!std::isfinite(spec.mean)) throw InvalidParameter("truncated normal: mean is not finite");
  require_positive(spec.variance, "truncated normal variance");
  if (std::isnan(spec.lower) || spec.lower == kInf) {
    throw InvalidParameter("truncated normal: support is empty");
  }
  const double sd = std::sqrt(spec.variance);
  const double a = (spec.lower - spec.mean) / sd;
  double z;
  if (a < 0.0) {
    do {
      z = rng.normal();
    } while (z < a);
  } else if (a <= 2.0) {
    z = std::max(a, normal_tail_inverse(rng.uniform() * normal_tail(a)));
  } else {
    z = tail_exponential(a, kInf, rng);
  }
  return std::max(spec.lower, spec.mean + sd * z);
}

double sample_truncated_normal_interval(double mean, double sd, double lower, double upper,
                                        RngStream& rng) {
  if (!(lower <= upper)) throw InvalidParameter("truncated normal: empty interval");
  if (lower == upper) return lower;
  if (std::isnan(mean) || std::isnan(sd) || !(sd > 0.0)) {
    throw InvalidParameter("truncated normal: invalid mean or sd");
  }
  if (!std::isfinite(sd) || !std::isfinite(mean)) {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
      throw InvalidParameter("truncated normal: improper flat target on unbounded interval");
    }
    if (std::isfinite(sd)) return mean > 0 ? upper : lower;
    return lower + (upper - lower) * rng.uniform();
  }
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  if (a == b) return lower;
  return std::clamp(mean + sd * standard_interval(a, b, rng), lower, upper);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  for (;;) {
    const double x = std::gamma_distribution<double>(shape, 1.0 / rate)(rng.engine());
    if (x > 0.0) return x;
  }
}

double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  require_positive(shape, "inverse-gamma shape");
  require_positive(scale, "inverse-gamma scale");
  // Small shapes put gamma draws in the denormal range; keep the result finite.
  return std::min(scale / sample_gamma(shape, 1.0, rng), std::numeric_limits<double>::max());
}

long sample_poisson(double rate, RngStream& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw InvalidParameter("poisson rate must be finite and non-negative");
  }
  if (rate == 0.0) return 0;
  return std::poisson_distribution<long>(rate)(rng.engine());
}

double sample_beta(double a, double b, RngStream& rng) {
  require_positive(a, "beta a");
  require_positive(b, "beta b");
  for (;;) {
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    const double v = x / (x + y);
    if (v > 0.0 && v < 1.0) return v;
  }
}

Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alphas, RngStream& rng) {
  if (alphas.size() == 0) throw InvalidParameter("dirichlet needs at least one component");
  for (Eigen::Index k = 0; k < alphas.size(); ++k) require_positive(alphas[k], "dirichlet alpha");
  Eigen::VectorXd g(alphas.size());
  for (;;) {
    for (Eigen::Index k = 0; k < alphas.size(); ++k) g[k] = sample_gamma(alphas[k], 1.0, rng);
    const double total = g.sum();
    if (total > 0.0 && std::isfinite(total)) return g / total;
  }
}

double log_beta_fn(double a, double b) {
  require_positive(a, "beta function a");
  require_positive(b, "beta function b");
  if (a > b) std::swap(a, b);
  // Gamma(b) / Gamma(a + b) directly avoids cancelling two large lgamma values.
  const double ratio = boost::math::tgamma_delta_ratio(b, a);
  if (std::isnormal(ratio)) return std::lgamma(a) + std::log(ratio);
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_inverse_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return -kInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_poisson_pmf(long k, double rate) {
  if (k < 0) return -kInf;
  if (rate == 0.0) return k == 0 ? 0.0 : -kInf;
  return static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0);
}

}  // namespace bnu
