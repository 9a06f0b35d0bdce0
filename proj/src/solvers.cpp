#include "lact/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace lact {

namespace {

// Power iteration is the most expensive part of a short solve, and sweeps
// reuse one geometry many times. Results are keyed by geometry digest, so the
// cache cannot change any output.
double cached_normal_norm(const LinearOperator &op, int iterations) {
  const auto *proj = dynamic_cast<const ProjectionOperator *>(&op);
  if (proj == nullptr)
    return normal_operator_norm(op, iterations);
  static std::mutex mu;
  static std::map<std::pair<std::uint64_t, int>, double> cache;
  const auto key = std::make_pair(proj->geometry().digest(), iterations);
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end())
      return it->second;
  }
  const double value = normal_operator_norm(op, iterations);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, value);
  return value;
}

} // namespace

double default_rls_tau(const LinearOperator &op) {
  return kDefaultRlsTauFraction * cached_normal_norm(op, 50);
}

Vector rls_solve(const LinearOperator &op, const Vector &y, double tau,
                 double tol, int max_iter, CgReport *report) {
  if (y.size() != op.range_size())
    throw DimensionError("rls: measurement size does not match operator");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw ParameterError("rls: tau must be a finite non-negative number");
  const Vector rhs = op.adjoint(y);
  auto apply = [&](const Vector &x) -> Vector {
    return op.normal(x) + tau * x;
  };
  auto result = conjugate_gradient<double>(
      apply, rhs, Vector::Zero(rhs.size()), tol, max_iter);
  if (report)
    *report = std::move(result.report);
  return std::move(result.x);
}

Image rls_reconstruct(const Sinogram &sino, const Geometry &geom,
                      const RlsOptions &opts) {
  check_sinogram(sino, geom);
  const ProjectionOperator op(geom);
  const double tau = opts.tau < 0.0 ? default_rls_tau(op) : opts.tau;
  Vector x = rls_solve(op, sino.vec(), tau, opts.tol, opts.max_iter);
  return Image(geom.image_rows(), geom.image_cols(), std::move(x));
}

namespace {

// Forward-difference gradient, stored as [dx (row-major) ; dy (row-major)].
Vector gradient(const Vector &x, ImageShape s) {
  Vector g = Vector::Zero(2 * s.size());
  for (Eigen::Index i = 0; i < s.rows; ++i)
    for (Eigen::Index j = 0; j < s.cols; ++j) {
      const Eigen::Index p = i * s.cols + j;
      if (j + 1 < s.cols)
        g[p] = x[p + 1] - x[p];
      if (i + 1 < s.rows)
        g[s.size() + p] = x[p + s.cols] - x[p];
    }
  return g;
}

// Adjoint of gradient().
Vector gradient_adjoint(const Vector &g, ImageShape s) {
  Vector x = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.rows; ++i)
    for (Eigen::Index j = 0; j < s.cols; ++j) {
      const Eigen::Index p = i * s.cols + j;
      if (j + 1 < s.cols) {
        x[p + 1] += g[p];
        x[p] -= g[p];
      }
      if (i + 1 < s.rows) {
        x[p + s.cols] += g[s.size() + p];
        x[p] -= g[s.size() + p];
      }
    }
  return x;
}

void project_unit_ball(Vector &p, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) {
    const double m = std::hypot(p[k], p[n + k]);
    if (m > 1.0) {
      p[k] /= m;
      p[n + k] /= m;
    }
  }
}

// Fast gradient projection on the TV dual:
//   min_x 1/2 ||x - v||^2 + theta TV(x),  x = v - theta D^T p,  |p_k| <= 1.
// `dual` carries the warm start between calls.
Vector tv_prox(const Vector &v, double theta, ImageShape s, Vector &dual,
               int iters) {
  if (theta <= 0.0)
    return v;
  const Eigen::Index n = s.size();
  const double step = 1.0 / (8.0 * theta);
  Vector p = dual;
  Vector r = dual;
  double t = 1.0;
  for (int k = 0; k < iters; ++k) {
    const Vector x = v - theta * gradient_adjoint(r, s);
    Vector p_next = r + step * gradient(x, s);
    project_unit_ball(p_next, n);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    r = p_next + ((t - 1.0) / t_next) * (p_next - p);
    p = std::move(p_next);
    t = t_next;
  }
  dual = p;
  return v - theta * gradient_adjoint(p, s);
}

} // namespace

double total_variation(const Eigen::Ref<const Vector> &x, ImageShape shape) {
  if (x.size() != shape.size())
    throw DimensionError("total_variation: size mismatch");
  const Vector g = gradient(x, shape);
  const Eigen::Index n = shape.size();
  double tv = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    tv += std::hypot(g[k], g[n + k]);
  return tv;
}

// Monotone FISTA: the accepted iterate is whichever of the new proximal point
// and the previous iterate has the lower composite objective, so the recorded
// objective never increases even with an inexact TV prox.
TvResult tv_solve(const LinearOperator &op, const Vector &y, double lambda,
                  int outer_iters, const TvOptions &opts) {
  if (y.size() != op.range_size())
    throw DimensionError("tv: measurement size does not match operator");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("tv: lambda must be a finite non-negative number");
  if (outer_iters < 1)
    throw ParameterError("tv: need at least one outer iteration");

  const ImageShape s = op.domain();
  auto objective = [&](const Vector &x, const Vector &ax) {
    return 0.5 * (ax - y).squaredNorm() + lambda * total_variation(x, s);
  };

  TvResult out;
  out.lipschitz = opts.lipschitz_safety *
                  cached_normal_norm(op, opts.power_iters);
  if (out.lipschitz <= 0.0) {
    out.x = Vector::Zero(s.size());
    out.objective.assign(outer_iters + 1, objective(out.x, op.apply(out.x)));
    return out;
  }
  const double inv_l = 1.0 / out.lipschitz;

  Vector x = Vector::Zero(s.size());
  Vector ax = Vector::Zero(y.size());
  Vector x_prev = x, ax_prev = ax;
  Vector w = x, aw = ax; // extrapolated point and its projection
  Vector dual = Vector::Zero(2 * s.size());
  double fx = objective(x, ax);
  out.objective.push_back(fx);
  double t = 1.0;

  for (int k = 0; k < outer_iters; ++k) {
    const Vector grad = op.adjoint(aw - y);
    const Vector z =
        tv_prox(w - inv_l * grad, lambda * inv_l, s, dual, opts.inner_iters);
    const Vector az = op.apply(z);
    const double fz = objective(z, az);
    if (!std::isfinite(fz))
      throw NumericalError("tv: non-finite objective at iteration " +
                           std::to_string(k + 1));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));

    x_prev = x;
    ax_prev = ax;
    if (fz <= fx) {
      x = z;
      ax = az;
      fx = fz;
    }
    const double a = t / t_next;
    const double b = (t - 1.0) / t_next;
    w = x + a * (z - x) + b * (x - x_prev);
    aw = ax + a * (az - ax) + b * (ax - ax_prev);
    t = t_next;
    out.objective.push_back(fx);
  }
  out.x = std::move(x);
  return out;
}

Image tv_reconstruct(const Sinogram &sino, const Geometry &geom, double lambda,
                     int outer_iters, const TvOptions &opts) {
  check_sinogram(sino, geom);
  const ProjectionOperator op(geom);
  TvResult r = tv_solve(op, sino.vec(), lambda, outer_iters, opts);
  return Image(geom.image_rows(), geom.image_cols(), std::move(r.x));
}

void ProxConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ParameterError("prox: gamma must be positive");
  if (!(cg_tol > 0.0))
    throw ParameterError("prox: cg_tol must be positive");
  if (cg_max_iter < 0)
    throw ParameterError("prox: cg_max_iter must be non-negative");
}

ProxOutcome data_consistency_prox(const Vector &x_tilde, const Vector &y,
                                  const LinearOperator &op,
                                  const ProxConfig &cfg) {
  cfg.validate();
  if (x_tilde.size() != op.domain().size())
    throw DimensionError("prox: image size does not match operator");
  if (y.size() != op.range_size())
    throw DimensionError("prox: measurement size does not match operator");

  ProxOutcome out;
  out.residual_before = (op.apply(x_tilde) - y).norm();
  const Vector rhs = x_tilde + cfg.gamma * op.adjoint(y);
  auto apply = [&](const Vector &z) -> Vector {
    return z + cfg.gamma * op.normal(z);
  };
  auto result =
      conjugate_gradient<double>(apply, rhs, x_tilde, cfg.cg_tol,
                                 cfg.cg_max_iter);
  out.z = std::move(result.x);
  out.cg = std::move(result.report);
  out.residual_after = (op.apply(out.z) - y).norm();
  require_finite(out.z, "prox");
  return out;
}

Image data_consistency_prox(const Image &x_tilde, const Sinogram &sino,
                            const Geometry &geom, const ProxConfig &cfg,
                            ProxOutcome *diagnostics) {
  check_sinogram(sino, geom);
  const ProjectionOperator op(geom);
  ProxOutcome r = data_consistency_prox(x_tilde.vec(), sino.vec(), op, cfg);
  Image z(x_tilde.rows(), x_tilde.cols(), r.z);
  if (diagnostics)
    *diagnostics = std::move(r);
  return z;
}

} // namespace lact
