#pragma once

#include "lact/core.hpp"
#include "lact/linear_operator.hpp"

#include <cstdint>
#include <vector>

namespace lact {

/// Parallel-beam acquisition.
///
/// Pixel (row, col) is centered at
///   x = (col - (cols - 1) / 2) * pixel_size,  y = ((rows - 1) / 2 - row) * pixel_size
/// and detector bin d sits at offset r = (d - (detectors - 1) / 2) * detector_spacing.
/// View angle theta integrates along the line x cos(theta) + y sin(theta) = r.
class Geometry {
public:
  Geometry(Eigen::Index image_rows, Eigen::Index image_cols,
           Eigen::Index detectors, std::vector<double> angles_deg,
           double pixel_size = 1.0, double detector_spacing = 1.0);

  Eigen::Index image_rows() const { return image_rows_; }
  Eigen::Index image_cols() const { return image_cols_; }
  ImageShape image_shape() const { return {image_rows_, image_cols_}; }
  Eigen::Index detectors() const { return detectors_; }
  Eigen::Index views() const {
    return static_cast<Eigen::Index>(angles_deg_.size());
  }
  const std::vector<double> &angles_deg() const { return angles_deg_; }
  double pixel_size() const { return pixel_size_; }
  double detector_spacing() const { return detector_spacing_; }

  /// Angular integration weight per view in radians: the uniform step of the
  /// acquired arc, or pi for a single view.
  double angular_step() const;

  /// FNV-1a over the defining parameters; stable across runs and platforms.
  std::uint64_t digest() const;

private:
  Eigen::Index image_rows_;
  Eigen::Index image_cols_;
  Eigen::Index detectors_;
  std::vector<double> angles_deg_;
  double pixel_size_;
  double detector_spacing_;
};

/// ceil(n * sqrt(2)) + 1, the smallest default that avoids truncating an n x n image.
Eigen::Index default_detector_count(Eigen::Index n);

/// n x n image with `n_views` angles evenly spaced on [0, theta_max_deg).
Geometry make_limited_geometry(Eigen::Index n, Eigen::Index detectors,
                               Eigen::Index n_views, double theta_max_deg);

Sinogram forward_project(const Image &image, const Geometry &geom);
Image back_project(const Sinogram &sino, const Geometry &geom);

// Flat-vector forms used by the iterative solvers.
Vector forward_project(const Vector &image, const Geometry &geom);
Vector back_project(const Vector &sino, const Geometry &geom);

enum class FilterKind { ram_lak, hann };

Sinogram ramp_filter(const Sinogram &sino, FilterKind kind);

/// Filters one row and returns the full zero-padded result before cropping.
/// The padded length is four times the next power of two >= the row length.
Vector ramp_filter_padded(const Eigen::Ref<const Vector> &row, FilterKind kind);

Image fbp_reconstruct(const Sinogram &sino, const Geometry &geom,
                      FilterKind kind = FilterKind::ram_lak);

/// Throws DimensionError unless the sinogram matches the geometry.
void check_sinogram(const Sinogram &sino, const Geometry &geom);

class ProjectionOperator final : public LinearOperator {
public:
  explicit ProjectionOperator(Geometry geom) : geom_(std::move(geom)) {}

  ImageShape domain() const override { return geom_.image_shape(); }
  Eigen::Index range_size() const override {
    return geom_.views() * geom_.detectors();
  }
  Vector apply(const Vector &x) const override {
    return forward_project(x, geom_);
  }
  Vector adjoint(const Vector &y) const override {
    return back_project(y, geom_);
  }

  const Geometry &geometry() const { return geom_; }

private:
  Geometry geom_;
};

} // namespace lact
