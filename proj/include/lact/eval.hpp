#pragma once

#include "lact/core.hpp"
#include "lact/denoiser.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <limits>
#include <string>

namespace lact {

enum class PhantomKind { shepp_logan, disks, ellipses_random };

PhantomKind parse_phantom_kind(const std::string &s);
const char *to_string(PhantomKind k);

struct PhantomSpec {
  PhantomKind kind = PhantomKind::shepp_logan;
  Eigen::Index size = 128;
  std::uint64_t seed = 0;
};

/// Values lie in [0, 2], on the square [-1, 1]^2 (x right, y up). Each pixel
/// averages a 4 x 4 grid of point samples, so a pixel that lies inside one
/// uniform region equals the point value at its center.
Image make_phantom(const PhantomSpec &spec);

/// Sum of the ten Shepp-Logan ellipse indicators at (x, y) in [-1, 1]^2.
double shepp_logan_value(double x, double y);

/// 10 log10(peak^2 / MSE), peak = reference range. Identical images give +inf.
double psnr(const Image &x, const Image &reference);

/// Mean SSIM over all 11 x 11 Gaussian windows (sigma 1.5) fully inside the
/// image, with C1 = (0.01 L)^2, C2 = (0.03 L)^2 and L the reference range.
double ssim(const Image &x, const Image &reference);

/// Standard linear-Gaussian posterior for prior N(mu0, s2 I), y = A x + n,
/// n ~ N(0, noise_var I):
///   Sigma = (I / s2 + A^T A / noise_var)^-1,
///   mu    = Sigma (mu0 / s2 + A^T y / noise_var).
template <typename Scalar> struct GaussianPosterior {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> covariance;
};

template <typename Scalar>
GaussianPosterior<Scalar> gaussian_posterior_oracle(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &prior_mean,
    Scalar prior_variance,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> &a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &y, Scalar noise_var) {
  using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = prior_mean.size();
  if (a.cols() != n || a.rows() != y.size())
    throw DimensionError("posterior oracle: operator dimensions mismatch");
  if (!(prior_variance > Scalar(0)) || !(noise_var > Scalar(0)))
    throw ParameterError("posterior oracle: variances must be positive");
  MatrixS precision = a.transpose() * a / noise_var;
  precision.diagonal().array() += Scalar(1) / prior_variance;
  const Eigen::LLT<MatrixS> llt(precision);
  if (llt.info() != Eigen::Success)
    throw NumericalError("posterior oracle: precision is not positive definite");
  GaussianPosterior<Scalar> out;
  out.covariance = llt.solve(MatrixS::Identity(n, n));
  out.mean = llt.solve(
      (prior_mean / prior_variance + a.transpose() * y / noise_var).eval());
  return out;
}

/// Single-component prior overload.
GaussianPosterior<double> gaussian_posterior_oracle(const GmmPrior &prior,
                                                    const Matrix &a,
                                                    const Vector &y,
                                                    double noise_var);

/// Pearson correlation of two equally long vectors; 0 if either is constant.
double pearson_correlation(const Vector &a, const Vector &b);

/// CSV metric row: phantom_id,method,theta_max,views,psnr_db,ssim.
struct MetricRow {
  std::string phantom_id;
  std::string method;
  double theta_max = 0.0;
  long views = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

inline constexpr const char *kMetricCsvHeader =
    "phantom_id,method,theta_max,views,psnr_db,ssim";

std::string format_metric(double v);
std::string to_csv(const MetricRow &row);

} // namespace lact
