#include "lact/core.hpp"

#include <cmath>
#include <string>

namespace lact {

void require_finite(const Eigen::Ref<const Vector> &values, const char *what) {
  if (!values.allFinite())
    throw DataError(std::string(what) + ": non-finite value");
}

Image::Image(Eigen::Index rows, Eigen::Index cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1)
    throw DimensionError("image dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  if (!std::isfinite(fill))
    throw DataError("image fill value must be finite");
  data_ = Vector::Constant(rows * cols, fill);
}

Image::Image(Eigen::Index rows, Eigen::Index cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 1 || cols < 1)
    throw DimensionError("image dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  if (data_.size() != rows * cols)
    throw DimensionError("image data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  require_finite(data_, "image");
}

void Image::validate() const { require_finite(data_, "image"); }

void validate_angles(const std::vector<double> &angles_deg) {
  if (angles_deg.empty())
    throw DimensionError("sinogram needs at least one view");
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double a = angles_deg[i];
    if (!std::isfinite(a) || a < 0.0 || a >= 180.0)
      throw ParameterError("view angle " + std::to_string(a) +
                           " outside [0, 180)");
    if (i > 0 && !(a > angles_deg[i - 1]))
      throw ParameterError("view angles must be strictly increasing");
  }
}

Sinogram::Sinogram(std::vector<double> angles_deg, Eigen::Index detectors,
                   double fill)
    : angles_deg_(std::move(angles_deg)), detectors_(detectors) {
  validate_angles(angles_deg_);
  if (detectors < 1)
    throw DimensionError("sinogram needs at least one detector");
  if (!std::isfinite(fill))
    throw DataError("sinogram fill value must be finite");
  data_ = Vector::Constant(views() * detectors_, fill);
}

Sinogram::Sinogram(std::vector<double> angles_deg, Eigen::Index detectors,
                   Vector data)
    : angles_deg_(std::move(angles_deg)), detectors_(detectors),
      data_(std::move(data)) {
  validate_angles(angles_deg_);
  if (detectors < 1)
    throw DimensionError("sinogram needs at least one detector");
  if (data_.size() != views() * detectors_)
    throw DimensionError("sinogram data length does not match views x "
                         "detectors");
  require_finite(data_, "sinogram");
}

void Sinogram::validate() const { require_finite(data_, "sinogram"); }

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double SeededRng::uniform() {
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double SeededRng::normal() { return normal_quantile(uniform()); }

Vector SeededRng::normal_vector(Eigen::Index n) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = normal();
  return out;
}

std::vector<double> sample_standard_normal(SeededRng &rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto &v : out)
    v = rng.normal();
  return out;
}

// Wichura, Algorithm AS241 (PPND16).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw ParameterError("normal quantile needs p in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
              67265.770927008700853) *
                 r +
             45921.953931549871457) *
                r +
            13731.693765509461125) *
               r +
           1971.5909503065514427) *
              r +
          133.14166789178437745) *
             r +
         3.387132872796366608);
    const double den =
        (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
              39307.89580009271061) *
                 r +
             21213.794301586595867) *
                r +
            5394.1960214247511077) *
               r +
           687.1870074920579083) *
              r +
          42.313330701600911252) *
             r +
         1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double num, den;
  if (r <= 5.0) {
    r -= 1.6;
    num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) *
                   r +
               1.27045825245236838258) *
                  r +
              3.64784832476320460504) *
                 r +
             5.7694972214606914055) *
                r +
            4.6303378461565452959) *
               r +
           1.42343711074968357734);
    den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) *
                   r +
               0.14810397642748007459) *
                  r +
              0.68976733498510000455) *
                 r +
             1.6763848301838038494) *
                r +
            2.05319162663775882187) *
               r +
           1.0);
  } else {
    r -= 5.0;
    num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) *
                   r +
               0.026532189526576123093) *
                  r +
              0.29656057182850489123) *
                 r +
             1.7848265399172913358) *
                r +
            5.4637849111641143699) *
               r +
           6.6579046435011037772);
    den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) *
                   r +
               7.868691311456132591e-4) *
                  r +
              0.0148753612908506148525) *
                 r +
             0.13692988092273580531) *
                r +
            0.59983220655588793769) *
               r +
           1.0);
  }
  const double val = num / den;
  return q < 0.0 ? -val : val;
}

} // namespace lact
