#pragma once

#include "lact/core.hpp"

namespace lact {

struct ImageShape {
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
  friend bool operator==(const ImageShape &, const ImageShape &) = default;
};

/// A measurement operator y = A x acting on flattened row-major images.
class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  virtual ImageShape domain() const = 0;
  virtual Eigen::Index range_size() const = 0;

  virtual Vector apply(const Vector &x) const = 0;
  virtual Vector adjoint(const Vector &y) const = 0;

  Vector normal(const Vector &x) const { return adjoint(apply(x)); }
};

/// Explicit matrix. Used for the small dense problems where closed-form
/// posteriors are available.
class DenseOperator final : public LinearOperator {
public:
  DenseOperator(Matrix a, ImageShape domain);

  ImageShape domain() const override { return domain_; }
  Eigen::Index range_size() const override { return a_.rows(); }
  Vector apply(const Vector &x) const override;
  Vector adjoint(const Vector &y) const override;

  const Matrix &matrix() const { return a_; }

private:
  Matrix a_;
  ImageShape domain_;
};

/// Materializes any operator as a dense matrix by applying it to unit vectors.
Matrix to_dense(const LinearOperator &op);

/// Largest eigenvalue of A^T A by power iteration from a fixed start vector.
double normal_operator_norm(const LinearOperator &op, int iterations = 50);

} // namespace lact
