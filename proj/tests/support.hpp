#pragma once

// Hand-rolled generators for property tests. Every generator draws from a
// SeededRng so a failing case can be replayed from its seed.

#include "lact/core.hpp"
#include "lact/linear_operator.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

namespace lact::testing {

inline Eigen::Index uniform_int(SeededRng &rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(rng.uniform() * double(hi - lo + 1));
}

inline double uniform_real(SeededRng &rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

inline Image random_image(SeededRng &rng, Eigen::Index rows, Eigen::Index cols) {
  return Image(rows, cols, rng.normal_vector(rows * cols));
}

inline Matrix random_matrix(SeededRng &rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = rng.normal();
  return m;
}

/// B B^T + shift I, well conditioned for moderate shift.
inline Matrix random_spd(SeededRng &rng, Eigen::Index n, double shift) {
  const Matrix b = random_matrix(rng, n, n);
  Matrix s = b * b.transpose();
  s.diagonal().array() += shift;
  return s;
}

/// Values exactly representable in binary32, so container round trips are
/// bit-exact.
inline Vector f32_values(SeededRng &rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = double(static_cast<float>(rng.normal() * 10.0));
  return v;
}

inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lact_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double rel_diff(const Vector &a, const Vector &b) {
  const double den = std::max(b.norm(), 1e-300);
  return (a - b).norm() / den;
}

} // namespace lact::testing
