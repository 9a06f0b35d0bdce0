#include "lact/linear_operator.hpp"

namespace lact {

DenseOperator::DenseOperator(Matrix a, ImageShape domain)
    : a_(std::move(a)), domain_(domain) {
  if (domain.rows < 1 || domain.cols < 1 || a_.cols() != domain.size())
    throw DimensionError("dense operator column count must equal image size");
  require_finite(a_.reshaped(), "dense operator");
}

Vector DenseOperator::apply(const Vector &x) const {
  if (x.size() != a_.cols())
    throw DimensionError("dense operator: input size mismatch");
  return a_ * x;
}

Vector DenseOperator::adjoint(const Vector &y) const {
  if (y.size() != a_.rows())
    throw DimensionError("dense operator: adjoint input size mismatch");
  return a_.transpose() * y;
}

Matrix to_dense(const LinearOperator &op) {
  const Eigen::Index n = op.domain().size();
  Matrix a(op.range_size(), n);
  Vector e = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = op.apply(e);
    e[j] = 0.0;
  }
  return a;
}

double normal_operator_norm(const LinearOperator &op, int iterations) {
  SeededRng rng(0x5eed);
  Vector v = rng.normal_vector(op.domain().size());
  v.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vector w = op.normal(v);
    estimate = w.norm();
    if (estimate == 0.0)
      return 0.0;
    v = w / estimate;
  }
  return estimate;
}

} // namespace lact
