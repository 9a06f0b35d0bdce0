#include "support.hpp"

#include "lact/dolce.hpp"
#include "lact/eval.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace lact;
using namespace lact::testing;

namespace {

struct SmallProblem {
  GmmPrior prior;
  Matrix a;
  Vector y;
  double noise_var;
  NoiseSchedule sched;
  ImageShape shape;
};

SmallProblem small_problem(std::uint64_t seed) {
  SeededRng rng(seed);
  const ImageShape shape{2, 2};
  Matrix a = random_matrix(rng, 3, 4);
  GmmPrior prior({{1.0, Vector::Constant(4, 0.5), 1.0}});
  const Vector x = rng.normal_vector(4);
  const double nv = 0.05;
  Vector y = a * x + std::sqrt(nv) * rng.normal_vector(3);
  return {prior, a, y, nv, default_linear_schedule(1000), shape};
}

} // namespace

TEST_CASE("build_condition normalizes to the unit range") {
  const Geometry g = make_limited_geometry(32, default_detector_count(32), 40, 120.0);
  const Sinogram zero(g.angles_deg(), g.detectors(), 0.0);
  for (auto m : {ConditionMethod::fbp, ConditionMethod::rls}) {
    const ConditionInput c = build_condition(zero, g, m);
    CHECK(c.image.vec().isZero(0.0));
  }
  const Image p = make_phantom({PhantomKind::ellipses_random, 32, 4});
  const Sinogram s = forward_project(p, g);
  for (auto m : {ConditionMethod::fbp, ConditionMethod::rls}) {
    const ConditionInput c = build_condition(s, g, m);
    CHECK(c.image.vec().minCoeff() == 0.0);
    CHECK(c.image.vec().maxCoeff() == 1.0);
    CHECK(c.source == (m == ConditionMethod::fbp ? ConditionSource::fbp : ConditionSource::rls));
  }
  CHECK(normalize_unit_range(Image(2, 2, 3.0)).vec().isZero(0.0));
}

TEST_CASE("rls condition beats fbp at 60 degrees on a disk phantom") {
  const Image p = make_phantom({PhantomKind::disks, 64, 1});
  const Geometry g = make_limited_geometry(64, default_detector_count(64), 60, 60.0);
  const Sinogram s = forward_project(p, g);
  const Image ref = normalize_unit_range(p);
  const double fbp = psnr(build_condition(s, g, ConditionMethod::fbp).image, ref);
  const double rls = psnr(build_condition(s, g, ConditionMethod::rls).image, ref);
  CHECK(rls > fbp);
}

TEST_CASE("sampler is deterministic in the seed and independent of threads") {
  const SmallProblem pb = small_problem(1);
  const ConditionalGmmDenoiser model(pb.prior, pb.a, pb.y, pb.noise_var, pb.sched, pb.shape);
  const DenseOperator op(pb.a, pb.shape);
  const auto cond = ConditionInput::none(2, 2);
  SamplerConfig cfg;
  cfg.K = 30;
  cfg.n_samples = 5;
  cfg.seed = 77;
  cfg.prox = ProxConfig{};
  const SampleResult a = dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 3);
  const SampleResult b = dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 3);
  CHECK(a.image == b.image);
  const SampleResult c = dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 4);
  CHECK_FALSE(a.image == c.image);

  const SampleSet one = dolce_sample_set(model, nullptr, pb.y, op, cond, pb.sched, cfg, 1);
  const SampleSet three = dolce_sample_set(model, nullptr, pb.y, op, cond, pb.sched, cfg, 3);
  REQUIRE(one.samples.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(one.samples[i] == three.samples[i]);
  CHECK(one.samples[2] ==
        dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 79).image);
  CHECK(sample_average(one) == sample_average(three));
  CHECK(uncertainty_map(one) == uncertainty_map(three));
}

TEST_CASE("sampler configuration errors") {
  const SmallProblem pb = small_problem(2);
  const ZeroDenoiser model;
  const DenseOperator op(pb.a, pb.shape);
  const auto cond = ConditionInput::none(2, 2);
  SamplerConfig cfg;
  cfg.K = 10;
  cfg.lambda = 0.5;
  CHECK_THROWS_AS(dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 0), ParameterError);
  CHECK_NOTHROW(dolce_sample(model, &model, pb.y, op, cond, pb.sched, cfg, 0));
  cfg.lambda = 1.0;
  cfg.K = 0;
  CHECK_THROWS_AS(dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 0), ParameterError);
  cfg.K = 1001;
  CHECK_THROWS_AS(dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 0), ParameterError);
  cfg.K = 10;
  cfg.prox = ProxConfig{};
  cfg.gamma_schedule = {1.0, 2.0};
  CHECK_THROWS_AS(dolce_sample(model, nullptr, pb.y, op, cond, pb.sched, cfg, 0), ParameterError);
  cfg.gamma_schedule.clear();
  CHECK_THROWS_AS(dolce_sample(model, nullptr, Vector::Zero(5), op, cond, pb.sched, cfg, 0),
                  DimensionError);
  CHECK_THROWS_AS(
      dolce_sample(model, nullptr, pb.y, op, ConditionInput::none(4, 1), pb.sched, cfg, 0),
      DimensionError);
}

TEST_CASE("one-step chain follows the hand computation") {
  const NoiseSchedule s = default_linear_schedule(100);
  // eps = x_t only at the last original timestep, so the model must be
  // queried with t = T.
  const TableDenoiser model({{1, 0.0, 0.0, std::nullopt}, {100, 1.0, 0.0, std::nullopt}});
  const ImageShape shape{3, 2};
  const DenseOperator op(Matrix::Identity(6, 6), shape);
  SamplerConfig cfg;
  cfg.K = 1;
  const SampleResult r = dolce_sample(model, nullptr, Vector::Zero(6), op,
                                      ConditionInput::none(3, 2), s, cfg, 12);
  SeededRng rng(12);
  const Vector xk = rng.normal_vector(6);
  const double ab = s.alpha_bar(100);
  const Vector want = (xk - (1.0 - ab) / std::sqrt(1.0 - ab) * xk) / std::sqrt(ab);
  CHECK((r.image.vec() - want).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].k == 1);
  CHECK(r.trace[0].t == 100);
  CHECK_FALSE(r.trace[0].prox_applied);

  cfg.K = 100;
  const SampleResult full = dolce_sample(model, nullptr, Vector::Zero(6), op,
                                         ConditionInput::none(3, 2), s, cfg, 12);
  REQUIRE(full.trace.size() == 100);
  for (std::size_t i = 0; i < 100; ++i)
    CHECK(full.trace[i].t == int(100 - i));
}

TEST_CASE("prox never raises the residual within a step") {
  SeededRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = uniform_int(rng, 6, 10);
    const Geometry g = make_limited_geometry(n, default_detector_count(n),
                                             uniform_int(rng, 3, 12), uniform_real(rng, 30.0, 180.0));
    const ProjectionOperator op(g);
    const Vector y = rng.normal_vector(op.range_size());
    const GmmPrior prior({{1.0, Vector::Zero(n * n), 1.0}});
    const GmmDenoiser model = gmm_denoiser(prior, default_linear_schedule(200), {n, n});
    SamplerConfig cfg;
    cfg.K = 20;
    cfg.prox = ProxConfig{};
    cfg.prox->gamma = uniform_real(rng, 0.1, 10.0);
    cfg.prox->cg_max_iter = int(uniform_int(rng, 1, 30));
    cfg.prox_skip_first = int(uniform_int(rng, 0, 5));
    const SampleResult r = dolce_sample(model, nullptr, y, op, ConditionInput::none(n, n),
                                        default_linear_schedule(200), cfg, 100 + trial);
    for (const auto &rec : r.trace) {
      REQUIRE(rec.residual_after <= rec.residual_before * (1.0 + 1e-12));
      REQUIRE(rec.prox_applied == (20 - rec.k >= cfg.prox_skip_first));
    }
  }
}

TEST_CASE("sample_average and uncertainty_map examples") {
  SeededRng rng(6);
  const Image a = random_image(rng, 2, 3), b = random_image(rng, 2, 3), c = random_image(rng, 2, 3);
  CHECK(sample_average({a}) == a);
  CHECK((sample_average({a, b}).vec() - 0.5 * (a.vec() + b.vec())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(sample_average({a, b, c}) == sample_average({c, a, b}));
  CHECK(uncertainty_map({a, b, c}) == uncertainty_map({b, c, a}));
  CHECK(uncertainty_map({a, a, a}).vec().isZero(0.0));

  Image d = a;
  d(1, 2) += 2.0;
  const Image u = uncertainty_map({a, d});
  CHECK(u(1, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c2 = 0; c2 < 3; ++c2)
      if (r != 1 || c2 != 2)
        CHECK(u(r, c2) == 0.0);

  CHECK_THROWS_AS(sample_average(std::vector<Image>{}), ParameterError);
  CHECK_THROWS_AS(uncertainty_map({a}), ParameterError);
  CHECK_THROWS_AS(sample_average({a, Image(3, 2, 0.0)}), DimensionError);
}

TEST_CASE("averaged estimate is never worse than the mean single-sample error") {
  SeededRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = uniform_int(rng, 2, 5);
    const Vector m = rng.normal_vector(n * n);
    std::vector<Image> samples;
    const int count = int(uniform_int(rng, 1, 12));
    for (int i = 0; i < count; ++i)
      samples.push_back(random_image(rng, n, n));
    const double sa = (sample_average(samples).vec() - m).squaredNorm();
    double per = 0.0;
    for (const auto &s : samples)
      per += (s.vec() - m).squaredNorm();
    REQUIRE(sa <= per / count * (1.0 + 1e-12));
  }
}

TEST_CASE("samples from the analytic conditional model match the posterior") {
  const SmallProblem pb = small_problem(3);
  const ConditionalGmmDenoiser model(pb.prior, pb.a, pb.y, pb.noise_var, pb.sched, pb.shape);
  const DenseOperator op(pb.a, pb.shape);
  SamplerConfig cfg;
  cfg.K = 100;
  cfg.n_samples = 400;
  cfg.seed = 1;
  const SampleSet set =
      dolce_sample_set(model, nullptr, pb.y, op, ConditionInput::none(2, 2), pb.sched, cfg);
  const auto oracle = gaussian_posterior_oracle(pb.prior, pb.a, pb.y, pb.noise_var);
  const Vector mean = sample_average(set).vec();
  const Vector sd = uncertainty_map(set).vec();
  for (Eigen::Index i = 0; i < 4; ++i) {
    const double se = std::sqrt(oracle.covariance(i, i) / 400.0);
    CHECK(std::abs(mean[i] - oracle.mean[i]) <= 4.0 * se);
    CHECK(sd[i] * sd[i] == doctest::Approx(oracle.covariance(i, i)).epsilon(0.25));
  }
}

// With an exact Gaussian denoiser and beta_tilde noise the chain is linear,
// so its output covariance follows a per-eigenvalue recursion. Coarse grids
// land below the posterior variance; the sampler must follow the recursion.
TEST_CASE("coarse chains match the exact discrete-chain variance") {
  const SmallProblem pb = small_problem(7);
  const ConditionalGmmDenoiser model(pb.prior, pb.a, pb.y, pb.noise_var, pb.sched, pb.shape);
  const DenseOperator op(pb.a, pb.shape);
  const auto oracle = gaussian_posterior_oracle(pb.prior, pb.a, pb.y, pb.noise_var);
  const int K = 20, n = 4000;
  const NoiseSchedule st = respace(pb.sched, K).schedule;

  Eigen::SelfAdjointEigenSolver<Matrix> es(oracle.covariance);
  Vector chain_var(4);
  for (int e = 0; e < 4; ++e) {
    const double lam = es.eigenvalues()[e];
    double v = 1.0;
    for (int k = K; k >= 1; --k) {
      const double ab = st.alpha_bar(k), abp = k > 1 ? st.alpha_bar(k - 1) : 1.0;
      const double alpha = ab / abp, beta = 1.0 - alpha;
      const double gain = std::sqrt(ab) * lam / (ab * lam + 1.0 - ab);
      const double f =
          (1.0 - beta / (1.0 - ab) + beta / (1.0 - ab) * std::sqrt(ab) * gain) / std::sqrt(alpha);
      v = f * f * v + (k > 1 ? st.beta_tilde(k) : 0.0);
    }
    chain_var[e] = v;
  }
  const Matrix chain_cov = es.eigenvectors() * chain_var.asDiagonal() * es.eigenvectors().transpose();

  SamplerConfig cfg;
  cfg.K = K;
  cfg.n_samples = n;
  cfg.seed = 11;
  const SampleSet set =
      dolce_sample_set(model, nullptr, pb.y, op, ConditionInput::none(2, 2), pb.sched, cfg);
  const Vector sd = uncertainty_map(set).vec();
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(chain_cov(i, i) < oracle.covariance(i, i));
    // Gaussian output: Var(sample variance) = 2 v^2 / n.
    const double se = chain_cov(i, i) * std::sqrt(2.0 / n);
    CHECK(std::abs(sd[i] * sd[i] - chain_cov(i, i)) <= 5.0 * se);
  }
}
