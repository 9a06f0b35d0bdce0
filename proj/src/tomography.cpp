#include "lact/tomography.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>

namespace lact {

Geometry::Geometry(Eigen::Index image_rows, Eigen::Index image_cols,
                   Eigen::Index detectors, std::vector<double> angles_deg,
                   double pixel_size, double detector_spacing)
    : image_rows_(image_rows), image_cols_(image_cols), detectors_(detectors),
      angles_deg_(std::move(angles_deg)), pixel_size_(pixel_size),
      detector_spacing_(detector_spacing) {
  if (image_rows < 1 || image_cols < 1 || detectors < 1)
    throw DimensionError("geometry dimensions must be positive");
  if (!(pixel_size > 0.0) || !(detector_spacing > 0.0) ||
      !std::isfinite(pixel_size) || !std::isfinite(detector_spacing))
    throw ParameterError("pixel size and detector spacing must be positive");
  validate_angles(angles_deg_);
  const double diagonal =
      std::hypot(double(image_rows), double(image_cols)) * pixel_size;
  if (double(detectors) * detector_spacing < diagonal)
    throw ParameterError("detector array (" + std::to_string(detectors) +
                         " bins) is narrower than the image diagonal");
}

double Geometry::angular_step() const {
  if (views() == 1)
    return std::numbers::pi;
  const double span = angles_deg_.back() - angles_deg_.front();
  return span / double(views() - 1) * std::numbers::pi / 180.0;
}

std::uint64_t Geometry::digest() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_i = [&](Eigen::Index v) {
    std::int64_t x = v;
    mix(&x, sizeof x);
  };
  auto mix_d = [&](double v) {
    std::uint64_t x = std::bit_cast<std::uint64_t>(v);
    mix(&x, sizeof x);
  };
  mix_i(image_rows_);
  mix_i(image_cols_);
  mix_i(detectors_);
  mix_d(pixel_size_);
  mix_d(detector_spacing_);
  for (double a : angles_deg_)
    mix_d(a);
  return h;
}

Eigen::Index default_detector_count(Eigen::Index n) {
  return static_cast<Eigen::Index>(std::ceil(double(n) * std::numbers::sqrt2)) +
         1;
}

Geometry make_limited_geometry(Eigen::Index n, Eigen::Index detectors,
                               Eigen::Index n_views, double theta_max_deg) {
  if (!(theta_max_deg > 0.0 && theta_max_deg <= 180.0))
    throw ParameterError("theta_max must lie in (0, 180] degrees");
  if (n_views < 1)
    throw ParameterError("need at least one view");
  std::vector<double> angles(static_cast<std::size_t>(n_views));
  for (Eigen::Index v = 0; v < n_views; ++v)
    angles[v] = theta_max_deg * double(v) / double(n_views);
  return Geometry(n, n, detectors, std::move(angles));
}

namespace {

// One view of the Joseph stencil. The ray at offset r walks the axis it is
// most aligned with and interpolates linearly across the other one.
struct ViewStencil {
  double cos_t;
  double sin_t;
  bool row_driven;
  double weight;
};

ViewStencil make_stencil(const Geometry &g, Eigen::Index view) {
  const double theta = g.angles_deg()[view] * std::numbers::pi / 180.0;
  ViewStencil s{std::cos(theta), std::sin(theta), false, 0.0};
  s.row_driven = std::abs(s.cos_t) >= std::abs(s.sin_t);
  s.weight = g.pixel_size() / (s.row_driven ? std::abs(s.cos_t)
                                            : std::abs(s.sin_t));
  return s;
}

// Calls visit(pixel_index, weight) for every nonzero entry of row (view, det)
// of the system matrix. Forward and adjoint both go through here, so they are
// exact transposes by construction.
// Index range [lo, hi) of the driving axis for which the interpolation
// coordinate u = u0 + k * du satisfies -1 < u < n, i.e. whose stencil touches
// the image. One index of slack on each side; the loop re-checks.
inline void clip_range(double u0, double du, Eigen::Index count, Eigen::Index n,
                       Eigen::Index &lo, Eigen::Index &hi) {
  lo = 0;
  hi = count;
  if (du == 0.0) {
    if (!(u0 > -1.0 && u0 < double(n)))
      hi = 0;
    return;
  }
  double k1 = (-1.0 - u0) / du, k2 = (double(n) - u0) / du;
  if (k1 > k2)
    std::swap(k1, k2);
  lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(k1)) - 1);
  hi = std::min<Eigen::Index>(count,
                              static_cast<Eigen::Index>(std::ceil(k2)) + 2);
  if (hi < lo)
    hi = lo;
}

// Calls visit(pixel_index, weight) for every nonzero entry of row (view, det)
// of the system matrix. Forward and adjoint both go through here, so they are
// exact transposes by construction.
template <typename Visit>
void trace_ray(const Geometry &g, const ViewStencil &s, Eigen::Index det,
               Visit &&visit) {
  const Eigen::Index rows = g.image_rows();
  const Eigen::Index cols = g.image_cols();
  const double ps = g.pixel_size();
  const double cx = 0.5 * double(cols - 1);
  const double cy = 0.5 * double(rows - 1);
  const double r =
      (double(det) - 0.5 * double(g.detectors() - 1)) * g.detector_spacing();

  if (s.row_driven) {
    // u(i) = (r - (cy - i) ps sin) / (ps cos) + cx
    const double u0 = (r - cy * ps * s.sin_t) / (s.cos_t * ps) + cx;
    const double du = s.sin_t / s.cos_t;
    Eigen::Index lo, hi;
    clip_range(u0, du, rows, cols, lo, hi);
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double u = u0 + double(i) * du;
      const double fl = std::floor(u);
      if (fl < -1.0 || fl > double(cols - 1))
        continue;
      const auto j0 = static_cast<Eigen::Index>(fl);
      const double f = u - fl;
      if (j0 >= 0)
        visit(i * cols + j0, s.weight * (1.0 - f));
      if (j0 + 1 < cols)
        visit(i * cols + j0 + 1, s.weight * f);
    }
  } else {
    // v(j) = cy - (r - (j - cx) ps cos) / (ps sin)
    const double v0 = cy - (r + cx * ps * s.cos_t) / (s.sin_t * ps);
    const double dv = s.cos_t / s.sin_t;
    Eigen::Index lo, hi;
    clip_range(v0, dv, cols, rows, lo, hi);
    for (Eigen::Index j = lo; j < hi; ++j) {
      const double v = v0 + double(j) * dv;
      const double fl = std::floor(v);
      if (fl < -1.0 || fl > double(rows - 1))
        continue;
      const auto i0 = static_cast<Eigen::Index>(fl);
      const double f = v - fl;
      if (i0 >= 0)
        visit(i0 * cols + j, s.weight * (1.0 - f));
      if (i0 + 1 < rows)
        visit((i0 + 1) * cols + j, s.weight * f);
    }
  }
}

} // namespace

void check_sinogram(const Sinogram &sino, const Geometry &geom) {
  if (sino.views() != geom.views() || sino.detectors() != geom.detectors())
    throw DimensionError("sinogram is " + std::to_string(sino.views()) + "x" +
                         std::to_string(sino.detectors()) +
                         ", geometry expects " + std::to_string(geom.views()) +
                         "x" + std::to_string(geom.detectors()));
  // Container angles are single precision.
  for (Eigen::Index v = 0; v < geom.views(); ++v)
    if (std::abs(sino.angles_deg()[v] - geom.angles_deg()[v]) > 1e-4)
      throw DimensionError("sinogram angles do not match geometry");
}

Vector forward_project(const Vector &image, const Geometry &geom) {
  if (image.size() != geom.image_shape().size())
    throw DimensionError("image size does not match geometry");
  const Eigen::Index D = geom.detectors();
  Vector out(geom.views() * D);
  for (Eigen::Index v = 0; v < geom.views(); ++v) {
    const ViewStencil s = make_stencil(geom, v);
    for (Eigen::Index d = 0; d < D; ++d) {
      double acc = 0.0;
      trace_ray(geom, s, d,
                [&](Eigen::Index p, double w) { acc += w * image[p]; });
      out[v * D + d] = acc;
    }
  }
  return out;
}

Vector back_project(const Vector &sino, const Geometry &geom) {
  const Eigen::Index D = geom.detectors();
  if (sino.size() != geom.views() * D)
    throw DimensionError("sinogram size does not match geometry");
  Vector out = Vector::Zero(geom.image_shape().size());
  for (Eigen::Index v = 0; v < geom.views(); ++v) {
    const ViewStencil s = make_stencil(geom, v);
    for (Eigen::Index d = 0; d < D; ++d) {
      const double value = sino[v * D + d];
      if (value == 0.0)
        continue;
      trace_ray(geom, s, d,
                [&](Eigen::Index p, double w) { out[p] += w * value; });
    }
  }
  return out;
}

Sinogram forward_project(const Image &image, const Geometry &geom) {
  if (image.rows() != geom.image_rows() || image.cols() != geom.image_cols())
    throw DimensionError("image is " + std::to_string(image.rows()) + "x" +
                         std::to_string(image.cols()) + ", geometry expects " +
                         std::to_string(geom.image_rows()) + "x" +
                         std::to_string(geom.image_cols()));
  return Sinogram(geom.angles_deg(), geom.detectors(),
                  forward_project(image.vec(), geom));
}

Image back_project(const Sinogram &sino, const Geometry &geom) {
  check_sinogram(sino, geom);
  return Image(geom.image_rows(), geom.image_cols(),
               back_project(sino.vec(), geom));
}

Vector ramp_filter_padded(const Eigen::Ref<const Vector> &row,
                          FilterKind kind) {
  const auto n = static_cast<std::size_t>(row.size());
  if (n < 2)
    throw DimensionError("ramp filter needs at least two detector bins");
  // Four times the next power of two: the ramp kernel decays only like 1/n^2,
  // and 2x padding leaves a visible wrap-around offset.
  const std::size_t P = 4 * std::bit_ceil(n);

  std::vector<double> buf(P, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    buf[i] = row[static_cast<Eigen::Index>(i)];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, buf);
  for (std::size_t k = 0; k < P; ++k) {
    const double m = double(std::min(k, P - k));
    double gain = m / double(P);
    if (kind == FilterKind::hann)
      gain *= 0.5 * (1.0 + std::cos(std::numbers::pi * m / (0.5 * double(P))));
    spectrum[k] *= gain;
  }
  fft.inv(buf, spectrum);

  Vector out(static_cast<Eigen::Index>(P));
  std::memcpy(out.data(), buf.data(), P * sizeof(double));
  return out;
}

Sinogram ramp_filter(const Sinogram &sino, FilterKind kind) {
  Sinogram out(sino.angles_deg(), sino.detectors());
  const Eigen::Index D = sino.detectors();
  for (Eigen::Index v = 0; v < sino.views(); ++v) {
    const Vector padded = ramp_filter_padded(sino.matrix().row(v).transpose(),
                                             kind);
    out.matrix().row(v) = padded.head(D).transpose();
  }
  out.validate();
  return out;
}

Image fbp_reconstruct(const Sinogram &sino, const Geometry &geom,
                      FilterKind kind) {
  check_sinogram(sino, geom);
  const Sinogram filtered = ramp_filter(sino, kind);
  // The discrete ramp is in cycles per sample, hence 1/detector_spacing; the
  // transpose of the Joseph stencil carries pixel_size^2/detector_spacing
  // relative to continuous smearing.
  const double ps = geom.pixel_size();
  const double scale = geom.angular_step() / (ps * ps);
  Vector x = back_project(filtered.vec(), geom) * scale;
  return Image(geom.image_rows(), geom.image_cols(), std::move(x));
}

} // namespace lact
