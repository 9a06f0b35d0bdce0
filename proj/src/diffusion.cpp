#include "lact/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace lact {

namespace {

void check_shapes(const Image &a, const Image &b, const char *what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": image shapes differ");
}

} // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas)
    : beta_(std::move(betas)) {
  if (beta_.empty())
    throw ParameterError("noise schedule needs T >= 1");
  for (double b : beta_)
    if (!(b > 0.0 && b < 1.0))
      throw ParameterError("every beta must lie in (0, 1)");
  alpha_bar_.resize(beta_.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    prod *= 1.0 - beta_[i];
    alpha_bar_[i] = prod;
  }
  finish();
}

NoiseSchedule NoiseSchedule::from_alpha_bars(std::vector<double> alpha_bars) {
  if (alpha_bars.empty())
    throw ParameterError("noise schedule needs T >= 1");
  NoiseSchedule s;
  s.alpha_bar_ = std::move(alpha_bars);
  s.beta_.resize(s.alpha_bar_.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < s.alpha_bar_.size(); ++i) {
    const double ab = s.alpha_bar_[i];
    if (!(ab > 0.0 && ab < prev))
      throw ParameterError("alpha_bar must be strictly decreasing in (0, 1)");
    s.beta_[i] = 1.0 - ab / prev;
    if (!(s.beta_[i] > 0.0 && s.beta_[i] < 1.0))
      throw ParameterError("derived beta outside (0, 1)");
    prev = ab;
  }
  s.finish();
  return s;
}

void NoiseSchedule::finish() {
  const std::size_t n = beta_.size();
  alpha_.resize(n);
  beta_tilde_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    alpha_[i] = 1.0 - beta_[i];
    const double prev = i == 0 ? 1.0 : alpha_bar_[i - 1];
    beta_tilde_[i] = beta_[i] * (1.0 - prev) / (1.0 - alpha_bar_[i]);
    if (i > 0 && !(alpha_bar_[i] < alpha_bar_[i - 1]))
      throw ParameterError("alpha_bar is not strictly decreasing");
    if (!(beta_tilde_[i] >= 0.0 && beta_tilde_[i] <= beta_[i]))
      throw ParameterError("beta_tilde outside [0, beta]");
  }
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > T())
    throw ParameterError("timestep " + std::to_string(t) + " outside [1, " +
                         std::to_string(T()) + "]");
  return static_cast<std::size_t>(t - 1);
}

std::string NoiseSchedule::to_table() const {
  std::string out = "# t beta alpha_bar beta_tilde\n";
  char line[128];
  for (int t = 1; t <= T(); ++t) {
    std::snprintf(line, sizeof line, "%d %.17g %.17g %.17g\n", t, beta(t),
                  alpha_bar(t), beta_tilde(t));
    out += line;
  }
  return out;
}

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1)
    throw ParameterError("linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ParameterError("linear_schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i)
    betas[i] = T == 1 ? beta_start
                      : beta_start + (beta_end - beta_start) * double(i) /
                                         double(T - 1);
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule default_linear_schedule(int T) {
  if (T < 1)
    throw ParameterError("default_linear_schedule: T must be >= 1");
  // Short chains would push beta past 1; cap it so every T >= 1 is usable.
  const double scale = 1000.0 / double(T);
  return linear_schedule(T, std::min(1e-4 * scale, 0.999),
                         std::min(0.02 * scale, 0.999));
}

NoiseSchedule cosine_schedule(int T) {
  if (T < 1)
    throw ParameterError("cosine_schedule: T must be >= 1");
  constexpr double s = 0.008;
  auto f = [](double u) {
    const double c = std::cos((u + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const double ab = f(double(t) / T);
    const double ab_prev = f(double(t - 1) / T);
    betas[t - 1] = std::min(1.0 - ab / ab_prev, 0.999);
  }
  return NoiseSchedule(std::move(betas));
}

TimestepMap respace(const NoiseSchedule &sched, int K) {
  const int T = sched.T();
  if (K < 1 || K >= T)
    throw ParameterError("respace: K must lie in [1, T), got K=" +
                         std::to_string(K) + ", T=" + std::to_string(T));
  std::vector<int> indices;
  indices.reserve(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const double u =
        K == 1 ? double(T) : 1.0 + double(T - 1) * double(i) / double(K - 1);
    const int t = static_cast<int>(std::lround(u));
    if (indices.empty() || t > indices.back())
      indices.push_back(t);
  }
  std::vector<double> ab(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k)
    ab[k] = sched.alpha_bar(indices[k]);
  return TimestepMap{std::move(indices),
                     NoiseSchedule::from_alpha_bars(std::move(ab))};
}

TimestepMap full_timestep_map(const NoiseSchedule &sched) {
  std::vector<int> indices(static_cast<std::size_t>(sched.T()));
  for (int t = 1; t <= sched.T(); ++t)
    indices[t - 1] = t;
  return TimestepMap{std::move(indices), sched};
}

Image forward_sample(const Image &x0, int t, const Image &eps,
                     const NoiseSchedule &sched) {
  check_shapes(x0, eps, "forward_sample");
  const double ab = sched.alpha_bar(t);
  return Image(x0.rows(), x0.cols(),
               std::sqrt(ab) * x0.vec() + std::sqrt(1.0 - ab) * eps.vec());
}

Image forward_step(const Image &x_prev, int t, const Image &noise,
                   const NoiseSchedule &sched) {
  check_shapes(x_prev, noise, "forward_step");
  const double b = sched.beta(t);
  return Image(x_prev.rows(), x_prev.cols(),
               std::sqrt(1.0 - b) * x_prev.vec() + std::sqrt(b) * noise.vec());
}

Image interpolate_variance(const Image &v, int t, const NoiseSchedule &sched) {
  const double b = sched.beta(t);
  if ((v.vec().array() < 0.0).any() || (v.vec().array() > 1.0).any())
    throw ParameterError("interpolate_variance: v must lie in [0, 1]");
  if (t == 1)
    return Image(v.rows(), v.cols(), 0.0);
  const double log_b = std::log(b);
  const double log_bt = std::log(sched.beta_tilde(t));
  Vector out = (v.vec().array() * log_b + (1.0 - v.vec().array()) * log_bt)
                   .exp()
                   .matrix();
  return Image(v.rows(), v.cols(), std::move(out));
}

Image reverse_step(const Image &x_t, const Image &eps_hat, const Image &sigma2,
                   int t, const NoiseSchedule &sched, const Image &z) {
  check_shapes(x_t, eps_hat, "reverse_step");
  check_shapes(x_t, sigma2, "reverse_step");
  check_shapes(x_t, z, "reverse_step");
  if ((sigma2.vec().array() < 0.0).any())
    throw ParameterError("reverse_step: negative variance");
  const double a = sched.alpha(t);
  const double coef = (1.0 - a) / std::sqrt(1.0 - sched.alpha_bar(t));
  Vector out = (x_t.vec() - coef * eps_hat.vec()) / std::sqrt(a) +
               (sigma2.vec().array().sqrt() * z.vec().array()).matrix();
  if (!out.allFinite())
    throw NumericalError("reverse_step: non-finite state at t=" +
                         std::to_string(t));
  return Image(x_t.rows(), x_t.cols(), std::move(out));
}

} // namespace lact
