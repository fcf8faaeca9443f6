#include "bnu/simkit.hpp"

#include <cmath>
#include <string>

#include "bnu/distributions.hpp"
#include "bnu/errors.hpp"
#include "bnu/io.hpp"

namespace bnu {

namespace {

enum Stream : std::uint64_t { kEndmemberStream = 1, kAbundanceStream, kIlluminationStream, kNoiseStream };

constexpr int kMaxEndmemberAttempts = 10000;

Eigen::RowVectorXd bump_spectrum(Eigen::Index bands, RngStream& rng) {
  const int bumps = 2 + static_cast<int>(rng.uniform() * 3.0);
  const Eigen::RowVectorXd x = Eigen::RowVectorXd::LinSpaced(bands, 0.0, 1.0);
  Eigen::RowVectorXd y = Eigen::RowVectorXd::Constant(bands, 0.05 + 0.1 * rng.uniform());
  for (int b = 0; b < bumps; ++b) {
    const double center = rng.uniform();
    const double width = 0.03 + 0.15 * rng.uniform();
    const double height = 0.2 + rng.uniform();
    y.array() += height * (-(x.array() - center).square() / (2.0 * width * width)).exp();
  }
  return y / y.maxCoeff();
}

double correlation(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  const Eigen::RowVectorXd ca = a.array() - a.mean();
  const Eigen::RowVectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  return denom > 0.0 ? ca.dot(cb) / denom : 1.0;
}

}  // namespace

void SceneSpec::validate() const {
  if (k < 1) throw InputError("K must be at least 1");
  if (bands < 2) throw InputError("D must be at least 2");
  if (width < 1 || height < 1) throw InputError("scene width and height must be positive");
  if (snr_db && std::isnan(*snr_db)) throw InputError("snr_db must be a number");
  if (beta_ip && !(*beta_ip > 0.0)) throw InputError("beta_ip must be positive");
  if (!(concentration() > 0.0)) throw InputError("dirichlet_alpha must be positive");
}

Eigen::MatrixXd generate_endmembers(const SceneSpec& spec, RngStream& rng) {
  if (!spec.library_path.empty()) {
    Eigen::MatrixXd lib = load_matrix(spec.library_path);
    if (lib.rows() != spec.k || lib.cols() != spec.bands) {
      throw InputError(spec.library_path + ": expected " + std::to_string(spec.k) + "x" +
                       std::to_string(spec.bands) + " spectra, found " + std::to_string(lib.rows()) +
                       "x" + std::to_string(lib.cols()));
    }
    return lib;
  }

  Eigen::MatrixXd f(spec.k, spec.bands);
  for (Eigen::Index i = 0; i < spec.k; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxEndmemberAttempts) {
        throw InputError("could not draw " + std::to_string(spec.k) +
                         " sufficiently distinct endmembers");
      }
      const Eigen::RowVectorXd candidate = bump_spectrum(spec.bands, rng);
      bool distinct = true;
      for (Eigen::Index j = 0; j < i && distinct; ++j) {
        distinct = correlation(candidate, f.row(j)) < kMaxEndmemberCorrelation;
      }
      if (distinct) {
        f.row(i) = candidate;
        break;
      }
    }
  }
  return f;
}

Eigen::MatrixXd generate_abundances(const SceneSpec& spec, RngStream& rng) {
  const Eigen::VectorXd alphas = Eigen::VectorXd::Constant(spec.k, spec.concentration());
  Eigen::MatrixXd s(spec.pixel_count(), spec.k);
  for (Eigen::Index n = 0; n < s.rows(); ++n) s.row(n) = sample_dirichlet(alphas, rng).transpose();
  return s;
}

double awgn_variance(const Eigen::MatrixXd& z_clean, double snr_db) {
  return z_clean.array().square().mean() * std::pow(10.0, -snr_db / 10.0);
}

Eigen::MatrixXd apply_awgn(const Eigen::MatrixXd& z_clean, std::optional<double> snr_db,
                           RngStream& rng) {
  if (!snr_db || std::isinf(*snr_db)) return z_clean;
  const double sd = std::sqrt(awgn_variance(z_clean, *snr_db));
  Eigen::MatrixXd z = z_clean;
  // Column-major traversal keeps the draw order fixed.
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += sd * rng.normal();
  return z;
}

Eigen::MatrixXd apply_illumination(const Eigen::MatrixXd& s, double beta_ip, RngStream& rng) {
  Eigen::MatrixXd scaled = s;
  for (Eigen::Index n = 0; n < s.rows(); ++n) scaled.row(n) *= sample_beta(beta_ip, 1.0, rng);
  return scaled;
}

double empirical_snr_db(const Eigen::MatrixXd& z_clean, const Eigen::MatrixXd& z_noisy) {
  const double noise = (z_noisy - z_clean).array().square().mean();
  return 10.0 * std::log10(z_clean.array().square().mean() / noise);
}

GroundTruth compose_scene(const SceneSpec& spec) {
  spec.validate();
  RngStream endmember_rng(spec.seed, kEndmemberStream);
  RngStream abundance_rng(spec.seed, kAbundanceStream);
  RngStream illumination_rng(spec.seed, kIlluminationStream);
  RngStream noise_rng(spec.seed, kNoiseStream);

  GroundTruth g;
  g.f_true = generate_endmembers(spec, endmember_rng);
  SceneSpec effective = spec;
  effective.k = g.f_true.rows();
  if (g.f_true.cols() != spec.bands) effective.bands = g.f_true.cols();
  g.s_true = generate_abundances(effective, abundance_rng);
  if (spec.beta_ip) g.s_true = apply_illumination(g.s_true, *spec.beta_ip, illumination_rng);
  g.z_clean = g.s_true * g.f_true;
  g.z_noisy = apply_awgn(g.z_clean, spec.snr_db, noise_rng);
  return g;
}

}  // namespace bnu
