#pragma once

#include "lact/core.hpp"
#include "lact/linear_operator.hpp"
#include "lact/tomography.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lact {

struct CgReport {
  int iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  /// ||b - A x_k|| for k = 0 .. iterations.
  std::vector<double> residual_history;
};

template <typename Scalar> struct CgResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  CgReport report;
};

/// Conjugate gradient for a symmetric positive (semi-)definite operator.
///
/// Stops when ||apply(x) - rhs|| <= tol * ||rhs||. A zero right-hand side
/// returns the zero vector. Throws NumericalError on non-finite iterates.
template <typename Scalar, typename Apply>
CgResult<Scalar>
conjugate_gradient(Apply &&apply,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &rhs,
                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &x0,
                   Scalar tol, int max_iter) {
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (rhs.size() != x0.size())
    throw DimensionError("conjugate_gradient: rhs and x0 sizes differ");
  if (!(tol > Scalar(0)))
    throw ParameterError("conjugate_gradient: tolerance must be positive");
  if (max_iter < 0)
    throw ParameterError("conjugate_gradient: negative iteration budget");

  CgResult<Scalar> out;
  const Scalar rhs_norm = rhs.norm();
  if (rhs_norm == Scalar(0)) {
    out.x = VectorS::Zero(rhs.size());
    out.report.converged = true;
    out.report.residual_history = {0.0};
    return out;
  }

  VectorS x = x0;
  VectorS ax = apply(x);
  if (ax.size() != rhs.size())
    throw DimensionError("conjugate_gradient: operator output size mismatch");
  VectorS r = rhs - ax;
  VectorS p = r;
  Scalar rr = r.squaredNorm();
  if (!std::isfinite(double(rr)))
    throw NumericalError("conjugate_gradient: non-finite initial residual");
  const Scalar target = tol * rhs_norm;
  out.report.residual_history.push_back(double(std::sqrt(rr)));

  int k = 0;
  while (std::sqrt(rr) > target && k < max_iter) {
    const VectorS ap = apply(p);
    const Scalar pap = p.dot(ap);
    if (!std::isfinite(double(pap)))
      throw NumericalError("conjugate_gradient: non-finite curvature at "
                           "iteration " +
                           std::to_string(k));
    if (pap <= Scalar(0))
      break; // direction in the null space; x already minimizes the energy
    const Scalar alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const Scalar rr_new = r.squaredNorm();
    ++k;
    out.report.residual_history.push_back(double(std::sqrt(rr_new)));
    if (!std::isfinite(double(rr_new)))
      throw NumericalError("conjugate_gradient: non-finite residual at "
                           "iteration " +
                           std::to_string(k));
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }

  out.x = std::move(x);
  out.report.iterations = k;
  out.report.final_residual_norm = double(std::sqrt(rr));
  out.report.converged = std::sqrt(rr) <= target;
  return out;
}

// Regularized least squares: argmin ||Ax - y||^2 + tau ||x||^2.

struct RlsOptions {
  /// Negative selects default_rls_tau().
  double tau = -1.0;
  double tol = 1e-6;
  int max_iter = 100;
};

/// Default Tikhonov weight, relative to the spectral norm of A^T A.
inline constexpr double kDefaultRlsTauFraction = 0.05;
double default_rls_tau(const LinearOperator &op);

Vector rls_solve(const LinearOperator &op, const Vector &y, double tau,
                 double tol, int max_iter, CgReport *report = nullptr);

Image rls_reconstruct(const Sinogram &sino, const Geometry &geom,
                      const RlsOptions &opts = {});

// Total variation: argmin 1/2 ||Ax - y||^2 + lambda TV(x).

/// Isotropic TV with forward differences; the last row/column has no outgoing
/// difference.
double total_variation(const Eigen::Ref<const Vector> &x, ImageShape shape);

struct TvOptions {
  int inner_iters = 20;
  int power_iters = 50;
  double lipschitz_safety = 1.05;
};

struct TvResult {
  Vector x;
  /// Composite objective after each outer iteration (index 0 is the start).
  std::vector<double> objective;
  double lipschitz = 0.0;
};

TvResult tv_solve(const LinearOperator &op, const Vector &y, double lambda,
                  int outer_iters, const TvOptions &opts = {});

Image tv_reconstruct(const Sinogram &sino, const Geometry &geom, double lambda,
                     int outer_iters, const TvOptions &opts = {});

// Data-consistency proximal step:
//   argmin_z ||z - x_tilde||^2 + gamma ||A z - y||^2
// solved by CG on (I + gamma A^T A) z = x_tilde + gamma A^T y, warm-started at
// x_tilde. Every CG iterate lies in x_tilde + Krylov space, so the objective,
// and hence the data residual, never exceeds its value at x_tilde.

struct ProxConfig {
  double gamma = 1.0;
  double cg_tol = 1e-8;
  int cg_max_iter = 200;

  void validate() const;
};

struct ProxOutcome {
  Vector z;
  CgReport cg;
  double residual_before = 0.0;
  double residual_after = 0.0;
  /// Set when CG ran out of iterations; z is then the last (best-energy) iterate.
  bool warning() const { return !cg.converged; }
};

ProxOutcome data_consistency_prox(const Vector &x_tilde, const Vector &y,
                                  const LinearOperator &op,
                                  const ProxConfig &cfg);

Image data_consistency_prox(const Image &x_tilde, const Sinogram &sino,
                            const Geometry &geom, const ProxConfig &cfg,
                            ProxOutcome *diagnostics = nullptr);

} // namespace lact
