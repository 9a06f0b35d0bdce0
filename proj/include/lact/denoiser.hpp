#pragma once

#include "lact/core.hpp"
#include "lact/diffusion.hpp"
#include "lact/linear_operator.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lact {

struct DenoiserOutput {
  Image eps;
  /// Per-pixel variance-interpolation coefficient in [0, 1], when the model
  /// has a variance head.
  std::optional<Image> v;

  void validate() const;
};

enum class ConditionSource { none, fbp, rls };

const char *to_string(ConditionSource s);
ConditionSource parse_condition_source(const std::string &s);

struct ConditionInput {
  Image image;
  ConditionSource source = ConditionSource::none;

  /// Unconditional input: a zero image tagged `none`.
  static ConditionInput none(Eigen::Index rows, Eigen::Index cols);
  void validate() const;
};

/// Noise predictor eps(x_t, c, t). Implementations must be pure functions of
/// their arguments and must accept ConditionSource::none.
class Denoiser {
public:
  virtual ~Denoiser() = default;
  virtual DenoiserOutput predict(const Image &x_t, int t,
                                 const ConditionInput &cond) const = 0;
};

/// Calls the model and checks the contract: shapes agree, eps is finite and
/// v lies in [0, 1].
DenoiserOutput denoise(const Denoiser &model, const Image &x_t, int t,
                       const ConditionInput &cond);

/// Always predicts zero noise.
class ZeroDenoiser final : public Denoiser {
public:
  DenoiserOutput predict(const Image &x_t, int t,
                         const ConditionInput &cond) const override;
};

/// Piecewise-constant-in-t affine response eps = scale_t * x_t + offset_t,
/// optionally with a constant variance coefficient v_t.
///
/// Text format, one entry per line, sorted by t_begin, '#' starts a comment:
///   t_begin scale offset [v]
/// An entry applies to every t >= t_begin up to the next entry.
class TableDenoiser final : public Denoiser {
public:
  struct Entry {
    int t_begin;
    double scale;
    double offset;
    std::optional<double> v;
  };

  explicit TableDenoiser(std::vector<Entry> entries);
  static TableDenoiser parse(const std::string &text);
  static TableDenoiser load(const std::filesystem::path &path);

  const std::vector<Entry> &entries() const { return entries_; }

  DenoiserOutput predict(const Image &x_t, int t,
                         const ConditionInput &cond) const override;

private:
  std::vector<Entry> entries_;
};

/// Gaussian mixture with isotropic components, over flattened images.
struct GmmComponent {
  double weight;
  Vector mean;
  double variance;
};

class GmmPrior {
public:
  /// Weights must be positive and sum to 1 within 1e-9 (they are then
  /// renormalized exactly); variances must be positive.
  explicit GmmPrior(std::vector<GmmComponent> components);

  Eigen::Index dim() const { return components_.front().mean.size(); }
  const std::vector<GmmComponent> &components() const { return components_; }

  /// One line per component: "weight mean_1 ... mean_dim variance".
  std::string to_text() const;
  static GmmPrior parse(const std::string &text);
  static GmmPrior load(const std::filesystem::path &path);
  void save(const std::filesystem::path &path) const;

private:
  std::vector<GmmComponent> components_;
};

/// E[x_0 | x_t] for x_t = sqrt(ab) x_0 + sqrt(1 - ab) eps, x_0 ~ prior.
Vector gmm_posterior_mean(const GmmPrior &prior, const Vector &x_t, int t,
                          const NoiseSchedule &sched);

/// log p_t(x_t) of the diffused mixture. Used by score checks.
double gmm_log_density(const GmmPrior &prior, const Vector &x_t, int t,
                       const NoiseSchedule &sched);

/// Converts a posterior mean into the matching noise prediction.
Vector epsilon_from_mean(const Vector &x_t, const Vector &x0_mean,
                         double alpha_bar);

/// Exact MMSE denoiser of a GMM prior. Ignores the condition image; v is
/// absent, so samplers fall back to the beta_tilde lower bound.
class GmmDenoiser final : public Denoiser {
public:
  GmmDenoiser(GmmPrior prior, NoiseSchedule sched, ImageShape shape);

  const GmmPrior &prior() const { return prior_; }
  DenoiserOutput predict(const Image &x_t, int t,
                         const ConditionInput &cond) const override;

private:
  GmmPrior prior_;
  NoiseSchedule sched_;
  ImageShape shape_;
};

GmmDenoiser gmm_denoiser(const GmmPrior &prior, const NoiseSchedule &sched,
                         ImageShape shape);

/// Full-covariance Gaussian component of a posterior mixture.
struct PosteriorComponent {
  double weight;
  Vector mean;
  Matrix covariance;
};

/// Exact MMSE denoiser of p(x_0 | y) for y = A x_0 + n, n ~ N(0, noise_var I)
/// and a GMM prior. The posterior is again a mixture whose components carry
/// full covariances; each is eigendecomposed once so every timestep costs
/// O(dim^2) per component.
class ConditionalGmmDenoiser final : public Denoiser {
public:
  ConditionalGmmDenoiser(const GmmPrior &prior, const Matrix &a,
                         const Vector &y, double noise_var,
                         NoiseSchedule sched, ImageShape shape);

  const std::vector<PosteriorComponent> &posterior() const {
    return posterior_;
  }

  /// E[x_0 | x_t, y].
  Vector posterior_mean(const Vector &x_t, int t) const;
  /// log p_t(x_t | y).
  double log_density(const Vector &x_t, int t) const;

  DenoiserOutput predict(const Image &x_t, int t,
                         const ConditionInput &cond) const override;

private:
  struct Spectral {
    Matrix basis;
    Vector eigenvalues;
  };
  std::vector<PosteriorComponent> posterior_;
  std::vector<Spectral> spectral_;
  NoiseSchedule sched_;
  ImageShape shape_;
};

ConditionalGmmDenoiser conditional_gmm_denoiser(const GmmPrior &prior,
                                                const LinearOperator &op,
                                                const Vector &y,
                                                double noise_var,
                                                const NoiseSchedule &sched);

/// lambda * cond + (1 - lambda) * uncond; v comes from the conditional branch.
DenoiserOutput guided_epsilon(const DenoiserOutput &cond_out,
                              const DenoiserOutput &uncond_out, double lambda);

} // namespace lact
