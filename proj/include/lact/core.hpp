#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lact {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error hierarchy. Every failure in the library is one of these; the CLI maps
// them onto its exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

/// Throws DataError if any entry is NaN or infinite. `what` names the caller.
void require_finite(const Eigen::Ref<const Vector> &values, const char *what);

/// H x W grid of attenuation values, stored flat in row-major order.
class Image {
public:
  Image(Eigen::Index rows, Eigen::Index cols, double fill = 0.0);
  /// Takes ownership of row-major `data`; validates length and finiteness.
  Image(Eigen::Index rows, Eigen::Index cols, Vector data);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index size() const { return rows_ * cols_; }

  double operator()(Eigen::Index r, Eigen::Index c) const {
    return data_[r * cols_ + c];
  }
  double &operator()(Eigen::Index r, Eigen::Index c) {
    return data_[r * cols_ + c];
  }

  const Vector &vec() const { return data_; }
  Vector &vec() { return data_; }

  Eigen::Map<const RowMajorMatrix> matrix() const {
    return {data_.data(), rows_, cols_};
  }
  Eigen::Map<RowMajorMatrix> matrix() { return {data_.data(), rows_, cols_}; }

  bool same_shape(const Image &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Re-checks the finiteness invariant after in-place mutation.
  void validate() const;

  friend bool operator==(const Image &a, const Image &b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

private:
  Eigen::Index rows_;
  Eigen::Index cols_;
  Vector data_;
};

/// Line integrals over `views` angles and `detectors` bins, row-major.
class Sinogram {
public:
  Sinogram(std::vector<double> angles_deg, Eigen::Index detectors,
           double fill = 0.0);
  Sinogram(std::vector<double> angles_deg, Eigen::Index detectors, Vector data);

  Eigen::Index views() const {
    return static_cast<Eigen::Index>(angles_deg_.size());
  }
  Eigen::Index detectors() const { return detectors_; }
  Eigen::Index size() const { return views() * detectors_; }
  const std::vector<double> &angles_deg() const { return angles_deg_; }

  double operator()(Eigen::Index v, Eigen::Index d) const {
    return data_[v * detectors_ + d];
  }
  double &operator()(Eigen::Index v, Eigen::Index d) {
    return data_[v * detectors_ + d];
  }

  const Vector &vec() const { return data_; }
  Vector &vec() { return data_; }

  Eigen::Map<const RowMajorMatrix> matrix() const {
    return {data_.data(), views(), detectors_};
  }
  Eigen::Map<RowMajorMatrix> matrix() {
    return {data_.data(), views(), detectors_};
  }

  void validate() const;

  friend bool operator==(const Sinogram &a, const Sinogram &b) {
    return a.angles_deg_ == b.angles_deg_ && a.detectors_ == b.detectors_ &&
           a.data_ == b.data_;
  }

private:
  std::vector<double> angles_deg_;
  Eigen::Index detectors_;
  Vector data_;
};

/// Checks that angles are strictly increasing and inside [0, 180).
void validate_angles(const std::vector<double> &angles_deg);

inline Image new_image(Eigen::Index rows, Eigen::Index cols, double fill) {
  return Image(rows, cols, fill);
}

/// Deterministic random source.
///
/// Uniforms come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Normals use the inverse CDF (Wichura's AS241, ~1e-16 relative
/// accuracy) applied to the 53-bit uniform (k + 0.5) / 2^53, so a seed maps to
/// the same stream on every conforming platform. std::normal_distribution is
/// avoided because its algorithm is implementation-defined.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Vector normal_vector(Eigen::Index n);

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::vector<double> sample_standard_normal(SeededRng &rng, std::size_t n);

/// Standard normal quantile function.
double normal_quantile(double p);

// CTR1 container.

enum class RasterKind : std::uint8_t { image = 0, sinogram = 1 };

using Raster = std::variant<Image, Sinogram>;

void write_raster(const std::filesystem::path &path, const Image &image);
void write_raster(const std::filesystem::path &path, const Sinogram &sino);
Raster read_raster(const std::filesystem::path &path);

Image read_image(const std::filesystem::path &path);
Sinogram read_sinogram(const std::filesystem::path &path);

/// Serialized CTR1 bytes; exposed so tests can inspect the exact layout.
std::vector<std::uint8_t> encode_raster(const Raster &raster);
Raster decode_raster(const std::vector<std::uint8_t> &bytes);

/// Binary 8-bit PGM, min-max normalized. Constant images map to 0.
void write_pgm(const std::filesystem::path &path,
               const Eigen::Ref<const RowMajorMatrix> &values);

} // namespace lact
