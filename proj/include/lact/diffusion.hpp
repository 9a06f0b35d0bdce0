#pragma once

#include "lact/core.hpp"

#include <string>
#include <vector>

namespace lact {

/// Variance schedule of a T-step diffusion. All public accessors take the
/// 1-based timestep t = 1..T; alpha_bar(0) is defined as 1.
class NoiseSchedule {
public:
  /// Builds the derived tables from beta_1..beta_T and checks the invariants.
  explicit NoiseSchedule(std::vector<double> betas);

  /// Keeps alpha_bar exactly as given (it must be strictly decreasing in
  /// (0, 1)) and derives beta_t = 1 - alpha_bar_t / alpha_bar_{t-1}.
  static NoiseSchedule from_alpha_bars(std::vector<double> alpha_bars);

  int T() const { return static_cast<int>(beta_.size()); }

  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  double alpha_bar(int t) const {
    return t == 0 ? 1.0 : alpha_bar_[index(t)];
  }
  /// Lower-bound reverse variance beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
  double beta_tilde(int t) const { return beta_tilde_[index(t)]; }

  const std::vector<double> &betas() const { return beta_; }
  const std::vector<double> &alpha_bars() const { return alpha_bar_; }

  /// Plain-text audit table: a header line, then "t beta alpha_bar beta_tilde".
  std::string to_table() const;

private:
  NoiseSchedule() = default;
  std::size_t index(int t) const;
  void finish();

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> beta_tilde_;
};

/// beta linear from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule linear_schedule(int T, double beta_start, double beta_end);

/// Linear schedule with the usual 1e-4 .. 0.02 endpoints rescaled by 1000 / T,
/// each capped at 0.999.
NoiseSchedule default_linear_schedule(int T);

/// Squared-cosine alpha_bar profile with offset s = 0.008; betas clipped at 0.999.
NoiseSchedule cosine_schedule(int T);

/// Respaced chain: K original timesteps and the schedule they induce.
struct TimestepMap {
  /// Original 1-based timesteps, strictly increasing; indices[k - 1] backs
  /// respaced step k.
  std::vector<int> indices;
  NoiseSchedule schedule;

  int K() const { return static_cast<int>(indices.size()); }
  int original_t(int k) const { return indices.at(static_cast<std::size_t>(k - 1)); }
};

/// Rounds K evenly spaced reals on [1, T] to timesteps (K = 1 selects T),
/// drops repeats keeping the first, and rebuilds
///   beta'_k = 1 - alpha_bar(index_k) / alpha_bar(index_{k-1}).
TimestepMap respace(const NoiseSchedule &sched, int K);

/// Identity map over all T steps.
TimestepMap full_timestep_map(const NoiseSchedule &sched);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Image forward_sample(const Image &x0, int t, const Image &eps,
                     const NoiseSchedule &sched);

/// One step of the forward chain: sqrt(1 - beta_t) x + sqrt(beta_t) noise.
Image forward_step(const Image &x_prev, int t, const Image &noise,
                   const NoiseSchedule &sched);

/// exp(v log beta_t + (1 - v) log beta_tilde_t) elementwise; zero at t = 1.
Image interpolate_variance(const Image &v, int t, const NoiseSchedule &sched);

/// (x_t - (1 - alpha_t) / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t)
///   + sqrt(sigma2) z
Image reverse_step(const Image &x_t, const Image &eps_hat, const Image &sigma2,
                   int t, const NoiseSchedule &sched, const Image &z);

} // namespace lact
