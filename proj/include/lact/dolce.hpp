#pragma once

#include "lact/core.hpp"
#include "lact/denoiser.hpp"
#include "lact/diffusion.hpp"
#include "lact/solvers.hpp"
#include "lact/tomography.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lact {

enum class ConditionMethod { fbp, rls };

/// Low-fidelity reconstruction min-max normalized to [0, 1]; a constant
/// reconstruction maps to all zeros.
ConditionInput build_condition(const Sinogram &sino, const Geometry &geom,
                               ConditionMethod method,
                               const RlsOptions &rls = {});

/// Min-max normalization used for conditions and previews.
Image normalize_unit_range(const Image &x);

struct SamplerConfig {
  /// Number of reverse steps; K < T respaces the schedule, K == T runs it all.
  int K = 50;
  /// Guidance weight. Anything other than 1 needs an unconditional model.
  double lambda = 1.0;
  /// Data-consistency step; absent disables it.
  std::optional<ProxConfig> prox;
  /// Optional per-step gamma, indexed by respaced step k = 1..K
  /// (gamma_schedule[k - 1]); overrides prox->gamma when non-empty.
  std::vector<double> gamma_schedule;
  /// Skip the data-consistency step for the first m reverse steps (k = K .. K-m+1).
  int prox_skip_first = 0;
  std::uint64_t seed = 0;
  int n_samples = 8;

  void validate(int T) const;
};

struct StepRecord {
  int k;                  // respaced step, K .. 1
  int t;                  // original timestep handed to the model
  double residual_before; // ||A x_tilde - y|| after the stochastic update
  double residual_after;  // after the prox (equals residual_before without it)
  int cg_iterations;
  bool prox_applied;
  bool cg_converged;
};

struct SampleResult {
  Image image;
  std::vector<StepRecord> trace;
  double final_residual() const {
    return trace.empty() ? 0.0 : trace.back().residual_after;
  }
};

/// One chain of the refinement loop, seeded by `seed`:
///   x_K ~ N(0, I); for k = K..1:
///     eps  <- model (guided by the unconditional model when lambda != 1)
///     s2   <- interpolate_variance(v) or beta_tilde when there is no v head
///     x~   <- reverse_step(x_k, eps, s2, z)   (z = 0 on the last step)
///     x_{k-1} <- prox(x~)                     (when cfg.prox is set)
SampleResult dolce_sample(const Denoiser &model, const Denoiser *uncond_model,
                          const Vector &y, const LinearOperator &op,
                          const ConditionInput &cond,
                          const NoiseSchedule &sched, const SamplerConfig &cfg,
                          std::uint64_t seed);

SampleResult dolce_sample(const Denoiser &model, const Denoiser *uncond_model,
                          const Sinogram &sino, const Geometry &geom,
                          const ConditionInput &cond,
                          const NoiseSchedule &sched, const SamplerConfig &cfg);

struct SampleSet {
  std::vector<Image> samples;
  std::vector<std::vector<StepRecord>> traces;
  SamplerConfig config;
  std::uint64_t geometry_digest = 0;
};

/// cfg.n_samples chains with seeds cfg.seed + i. With threads > 1 chains run
/// concurrently; the result does not depend on the thread count.
SampleSet dolce_sample_set(const Denoiser &model, const Denoiser *uncond_model,
                           const Vector &y, const LinearOperator &op,
                           const ConditionInput &cond,
                           const NoiseSchedule &sched, const SamplerConfig &cfg,
                           int threads = 1);

Image sample_average(const std::vector<Image> &samples);
inline Image sample_average(const SampleSet &set) {
  return sample_average(set.samples);
}

/// Per-pixel sample standard deviation with divisor n - 1.
Image uncertainty_map(const std::vector<Image> &samples);
inline Image uncertainty_map(const SampleSet &set) {
  return uncertainty_map(set.samples);
}

} // namespace lact
