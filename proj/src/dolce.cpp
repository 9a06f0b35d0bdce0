#include "lact/dolce.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace lact {

Image normalize_unit_range(const Image &x) {
  const double lo = x.vec().minCoeff();
  const double hi = x.vec().maxCoeff();
  if (!(hi > lo))
    return Image(x.rows(), x.cols(), 0.0);
  Vector u = ((x.vec().array() - lo) / (hi - lo)).cwiseMin(1.0).cwiseMax(0.0);
  return Image(x.rows(), x.cols(), std::move(u));
}

ConditionInput build_condition(const Sinogram &sino, const Geometry &geom,
                               ConditionMethod method, const RlsOptions &rls) {
  check_sinogram(sino, geom);
  if (method == ConditionMethod::fbp)
    return {normalize_unit_range(fbp_reconstruct(sino, geom)),
            ConditionSource::fbp};
  return {normalize_unit_range(rls_reconstruct(sino, geom, rls)),
          ConditionSource::rls};
}

void SamplerConfig::validate(int T) const {
  if (K < 1 || K > T)
    throw ParameterError("sampler: K must lie in [1, T]");
  if (n_samples < 1)
    throw ParameterError("sampler: n_samples must be >= 1");
  if (!std::isfinite(lambda))
    throw ParameterError("sampler: lambda must be finite");
  if (prox_skip_first < 0)
    throw ParameterError("sampler: prox_skip_first must be >= 0");
  if (prox)
    prox->validate();
  if (!gamma_schedule.empty()) {
    if (static_cast<int>(gamma_schedule.size()) != K)
      throw ParameterError("sampler: gamma schedule must have K entries");
    for (double g : gamma_schedule)
      if (!(g > 0.0) || !std::isfinite(g))
        throw ParameterError("sampler: gamma schedule entries must be > 0");
  }
}

SampleResult dolce_sample(const Denoiser &model, const Denoiser *uncond_model,
                          const Vector &y, const LinearOperator &op,
                          const ConditionInput &cond,
                          const NoiseSchedule &sched, const SamplerConfig &cfg,
                          std::uint64_t seed) {
  cfg.validate(sched.T());
  if (cfg.lambda != 1.0 && uncond_model == nullptr)
    throw ParameterError("sampler: lambda != 1 requires an unconditional model");
  const ImageShape shape = op.domain();
  if (cond.image.rows() != shape.rows || cond.image.cols() != shape.cols)
    throw DimensionError("sampler: condition shape does not match operator");
  if (y.size() != op.range_size())
    throw DimensionError("sampler: measurement size does not match operator");
  cond.validate();

  const TimestepMap map =
      cfg.K == sched.T() ? full_timestep_map(sched) : respace(sched, cfg.K);
  const NoiseSchedule &steps = map.schedule;
  const int K = map.K();
  const ConditionInput uncond_input = ConditionInput::none(shape.rows, shape.cols);

  SeededRng rng(seed);
  Image x(shape.rows, shape.cols, rng.normal_vector(shape.size()));
  SampleResult out{x, {}};
  out.trace.reserve(static_cast<std::size_t>(K));

  for (int k = K; k >= 1; --k) {
    const int t = map.original_t(k);
    try {
      DenoiserOutput pred = denoise(model, x, t, cond);
      if (cfg.lambda != 1.0)
        pred = guided_epsilon(pred, denoise(*uncond_model, x, t, uncond_input),
                              cfg.lambda);

      Image sigma2 = pred.v ? interpolate_variance(*pred.v, k, steps)
                            : Image(shape.rows, shape.cols,
                                    k == 1 ? 0.0 : steps.beta_tilde(k));
      Image z = k > 1 ? Image(shape.rows, shape.cols,
                              rng.normal_vector(shape.size()))
                      : Image(shape.rows, shape.cols, 0.0);
      Image x_tilde = reverse_step(x, pred.eps, sigma2, k, steps, z);

      StepRecord rec{k, t, 0.0, 0.0, 0, false, true};
      const bool apply_prox = cfg.prox && (K - k) >= cfg.prox_skip_first;
      if (apply_prox) {
        ProxConfig pc = *cfg.prox;
        if (!cfg.gamma_schedule.empty())
          pc.gamma = cfg.gamma_schedule[static_cast<std::size_t>(k - 1)];
        ProxOutcome prox = data_consistency_prox(x_tilde.vec(), y, op, pc);
        rec.residual_before = prox.residual_before;
        rec.residual_after = prox.residual_after;
        rec.cg_iterations = prox.cg.iterations;
        rec.cg_converged = prox.cg.converged;
        rec.prox_applied = true;
        x = Image(shape.rows, shape.cols, std::move(prox.z));
      } else {
        rec.residual_before = rec.residual_after =
            (op.apply(x_tilde.vec()) - y).norm();
        x = std::move(x_tilde);
      }
      out.trace.push_back(rec);
    } catch (const DataError &e) {
      throw NumericalError("sampler: non-finite state at step k=" +
                           std::to_string(k) + " (t=" + std::to_string(t) +
                           "): " + e.what());
    } catch (const NumericalError &e) {
      throw NumericalError("sampler: step k=" + std::to_string(k) + " (t=" +
                           std::to_string(t) + "): " + e.what());
    }
  }
  out.image = std::move(x);
  return out;
}

SampleResult dolce_sample(const Denoiser &model, const Denoiser *uncond_model,
                          const Sinogram &sino, const Geometry &geom,
                          const ConditionInput &cond,
                          const NoiseSchedule &sched, const SamplerConfig &cfg) {
  check_sinogram(sino, geom);
  const ProjectionOperator op(geom);
  return dolce_sample(model, uncond_model, sino.vec(), op, cond, sched, cfg,
                      cfg.seed);
}

SampleSet dolce_sample_set(const Denoiser &model, const Denoiser *uncond_model,
                           const Vector &y, const LinearOperator &op,
                           const ConditionInput &cond,
                           const NoiseSchedule &sched, const SamplerConfig &cfg,
                           int threads) {
  cfg.validate(sched.T());
  const auto n = static_cast<std::size_t>(cfg.n_samples);
  std::vector<std::optional<SampleResult>> results(n);
  std::vector<std::exception_ptr> errors(n);

  auto run = [&](std::size_t i) {
    try {
      results[i] = dolce_sample(model, uncond_model, y, op, cond, sched, cfg,
                                cfg.seed + i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const auto workers =
      static_cast<std::size_t>(std::max(1, std::min<int>(threads, int(n))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i)
      run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers)
          run(i);
      });
    for (auto &th : pool)
      th.join();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);

  SampleSet set;
  set.config = cfg;
  for (auto &r : results) {
    set.samples.push_back(std::move(r->image));
    set.traces.push_back(std::move(r->trace));
  }
  return set;
}

namespace {

void check_samples(const std::vector<Image> &samples, const char *what) {
  for (const auto &s : samples)
    if (!s.same_shape(samples.front()))
      throw DimensionError(std::string(what) + ": samples differ in shape");
}

// Per-pixel sums over sorted values, so the result does not depend on the
// order of the sample list.
template <typename Term>
Vector ordered_pixel_sums(const std::vector<Image> &samples, Term term) {
  const Eigen::Index n = samples.front().size();
  Vector out(n);
  std::vector<double> vals(samples.size());
  for (Eigen::Index p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < samples.size(); ++i)
      vals[i] = term(samples[i].vec()[p], p);
    std::sort(vals.begin(), vals.end());
    double acc = 0.0;
    for (double v : vals)
      acc += v;
    out[p] = acc;
  }
  return out;
}

} // namespace

Image sample_average(const std::vector<Image> &samples) {
  if (samples.empty())
    throw ParameterError("sample_average: empty sample set");
  check_samples(samples, "sample_average");
  const Vector sum =
      ordered_pixel_sums(samples, [](double v, Eigen::Index) { return v; });
  return Image(samples.front().rows(), samples.front().cols(),
               sum / double(samples.size()));
}

Image uncertainty_map(const std::vector<Image> &samples) {
  if (samples.size() < 2)
    throw ParameterError("uncertainty_map: need at least two samples");
  const Image mean = sample_average(samples);
  const Vector ss = ordered_pixel_sums(samples, [&](double v, Eigen::Index p) {
    const double d = v - mean.vec()[p];
    return d * d;
  });
  return Image(mean.rows(), mean.cols(),
               (ss / double(samples.size() - 1)).cwiseSqrt());
}

} // namespace lact
