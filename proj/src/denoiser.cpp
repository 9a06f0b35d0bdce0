#include "lact/denoiser.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace lact {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string slurp(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits text into lines with comments and blank lines removed.
std::vector<std::string> content_lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      out.push_back(line);
  }
  return out;
}

std::vector<double> parse_numbers(const std::string &line) {
  std::vector<double> values;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception &) {
      throw FormatError("not a number: '" + tok + "'");
    }
    if (used != tok.size())
      throw FormatError("not a number: '" + tok + "'");
    values.push_back(v);
  }
  return values;
}

// Responsibility-weighted average of component means given their log weights.
Vector mix(const std::vector<double> &log_w, const std::vector<Vector> &means) {
  const double m = *std::max_element(log_w.begin(), log_w.end());
  double total = 0.0;
  Vector acc = Vector::Zero(means.front().size());
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    const double w = std::exp(log_w[k] - m);
    total += w;
    acc += w * means[k];
  }
  return acc / total;
}

double log_sum_exp(const std::vector<double> &v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v)
    s += std::exp(x - m);
  return m + std::log(s);
}

void check_image_shape(const Image &x, ImageShape shape, const char *what) {
  if (x.rows() != shape.rows || x.cols() != shape.cols)
    throw DimensionError(std::string(what) + ": input is " +
                         std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + ", model expects " +
                         std::to_string(shape.rows) + "x" +
                         std::to_string(shape.cols));
}

} // namespace

void DenoiserOutput::validate() const {
  require_finite(eps.vec(), "denoiser eps");
  if (v) {
    if (!v->same_shape(eps))
      throw DimensionError("denoiser v head shape differs from eps");
    if ((v->vec().array() < 0.0).any() || (v->vec().array() > 1.0).any())
      throw DataError("denoiser v head outside [0, 1]");
  }
}

const char *to_string(ConditionSource s) {
  switch (s) {
  case ConditionSource::none:
    return "none";
  case ConditionSource::fbp:
    return "fbp";
  case ConditionSource::rls:
    return "rls";
  }
  return "?";
}

ConditionSource parse_condition_source(const std::string &s) {
  if (s == "none")
    return ConditionSource::none;
  if (s == "fbp")
    return ConditionSource::fbp;
  if (s == "rls")
    return ConditionSource::rls;
  throw ParameterError("unknown condition source '" + s + "'");
}

ConditionInput ConditionInput::none(Eigen::Index rows, Eigen::Index cols) {
  return ConditionInput{Image(rows, cols, 0.0), ConditionSource::none};
}

void ConditionInput::validate() const {
  image.validate();
  if (source != ConditionSource::none &&
      ((image.vec().array() < 0.0).any() || (image.vec().array() > 1.0).any()))
    throw DataError("condition image must lie in [0, 1]");
}

DenoiserOutput denoise(const Denoiser &model, const Image &x_t, int t,
                       const ConditionInput &cond) {
  if (!cond.image.same_shape(x_t))
    throw DimensionError("denoise: condition and state shapes differ");
  DenoiserOutput out = model.predict(x_t, t, cond);
  if (!out.eps.same_shape(x_t))
    throw DimensionError("denoise: model returned a differently shaped eps");
  out.validate();
  return out;
}

DenoiserOutput ZeroDenoiser::predict(const Image &x_t, int,
                                     const ConditionInput &) const {
  return {Image(x_t.rows(), x_t.cols(), 0.0), std::nullopt};
}

TableDenoiser::TableDenoiser(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty())
    throw ParameterError("table denoiser needs at least one entry");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry &e = entries_[i];
    if (e.t_begin < 1)
      throw ParameterError("table denoiser: t_begin must be >= 1");
    if (i > 0 && e.t_begin <= entries_[i - 1].t_begin)
      throw ParameterError("table denoiser: entries must be sorted by t");
    if (!std::isfinite(e.scale) || !std::isfinite(e.offset))
      throw ParameterError("table denoiser: non-finite coefficient");
    if (e.v && !(*e.v >= 0.0 && *e.v <= 1.0))
      throw ParameterError("table denoiser: v must lie in [0, 1]");
  }
}

TableDenoiser TableDenoiser::parse(const std::string &text) {
  std::vector<Entry> entries;
  for (const auto &line : content_lines(text)) {
    const auto nums = parse_numbers(line);
    if (nums.size() != 3 && nums.size() != 4)
      throw FormatError("table denoiser: expected 't_begin scale offset [v]'");
    if (nums[0] != std::floor(nums[0]))
      throw FormatError("table denoiser: t_begin must be an integer");
    Entry e{static_cast<int>(nums[0]), nums[1], nums[2], std::nullopt};
    if (nums.size() == 4)
      e.v = nums[3];
    entries.push_back(e);
  }
  try {
    return TableDenoiser(std::move(entries));
  } catch (const ParameterError &e) {
    throw FormatError(e.what());
  }
}

TableDenoiser TableDenoiser::load(const std::filesystem::path &path) {
  return parse(slurp(path));
}

DenoiserOutput TableDenoiser::predict(const Image &x_t, int t,
                                      const ConditionInput &) const {
  auto it = std::upper_bound(
      entries_.begin(), entries_.end(), t,
      [](int value, const Entry &e) { return value < e.t_begin; });
  if (it == entries_.begin())
    throw ParameterError("table denoiser has no entry for t=" +
                         std::to_string(t));
  const Entry &e = *std::prev(it);
  DenoiserOutput out{
      Image(x_t.rows(), x_t.cols(),
            (e.scale * x_t.vec().array() + e.offset).matrix()),
      std::nullopt};
  if (e.v)
    out.v = Image(x_t.rows(), x_t.cols(), *e.v);
  return out;
}

GmmPrior::GmmPrior(std::vector<GmmComponent> components)
    : components_(std::move(components)) {
  if (components_.empty())
    throw ParameterError("GMM prior needs at least one component");
  const Eigen::Index d = components_.front().mean.size();
  if (d < 1)
    throw DimensionError("GMM prior dimension must be positive");
  double total = 0.0;
  for (const auto &c : components_) {
    if (c.mean.size() != d)
      throw DimensionError("GMM components have different dimensions");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw ParameterError("GMM weights must be positive");
    if (!(c.variance > 0.0) || !std::isfinite(c.variance))
      throw ParameterError("GMM variances must be positive");
    require_finite(c.mean, "GMM mean");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ParameterError("GMM weights must sum to 1");
  for (auto &c : components_)
    c.weight /= total;
}

std::string GmmPrior::to_text() const {
  std::string out = "# weight mean... variance\n";
  char buf[40];
  for (const auto &c : components_) {
    std::snprintf(buf, sizeof buf, "%.17g", c.weight);
    out += buf;
    for (double m : c.mean) {
      std::snprintf(buf, sizeof buf, " %.17g", m);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %.17g\n", c.variance);
    out += buf;
  }
  return out;
}

GmmPrior GmmPrior::parse(const std::string &text) {
  std::vector<GmmComponent> comps;
  for (const auto &line : content_lines(text)) {
    const auto nums = parse_numbers(line);
    if (nums.size() < 3)
      throw FormatError("GMM line needs weight, at least one mean value and "
                        "a variance");
    Vector mean(static_cast<Eigen::Index>(nums.size() - 2));
    for (std::size_t i = 1; i + 1 < nums.size(); ++i)
      mean[static_cast<Eigen::Index>(i - 1)] = nums[i];
    comps.push_back({nums.front(), std::move(mean), nums.back()});
  }
  try {
    return GmmPrior(std::move(comps));
  } catch (const ParameterError &e) {
    throw FormatError(std::string("GMM prior: ") + e.what());
  } catch (const DimensionError &e) {
    throw FormatError(std::string("GMM prior: ") + e.what());
  }
}

GmmPrior GmmPrior::load(const std::filesystem::path &path) {
  return parse(slurp(path));
}

void GmmPrior::save(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << to_text();
  if (!out)
    throw IoError("write failed for " + path.string());
}

namespace {

// Per-component log marginal of x_t and the conditional mean of x_0, for the
// isotropic prior.
void gmm_terms(const GmmPrior &prior, const Vector &x_t, double ab,
               std::vector<double> &log_w, std::vector<Vector> &means) {
  if (x_t.size() != prior.dim())
    throw DimensionError("GMM: state dimension does not match prior");
  const double sa = std::sqrt(ab);
  const double n = double(prior.dim());
  log_w.clear();
  means.clear();
  for (const auto &c : prior.components()) {
    const double var = ab * c.variance + (1.0 - ab);
    const double sq = (x_t - sa * c.mean).squaredNorm();
    log_w.push_back(std::log(c.weight) - 0.5 * n * (kLog2Pi + std::log(var)) -
                    0.5 * sq / var);
    means.push_back((sa * c.variance * x_t + (1.0 - ab) * c.mean) / var);
  }
}

} // namespace

Vector gmm_posterior_mean(const GmmPrior &prior, const Vector &x_t, int t,
                          const NoiseSchedule &sched) {
  std::vector<double> log_w;
  std::vector<Vector> means;
  gmm_terms(prior, x_t, sched.alpha_bar(t), log_w, means);
  return mix(log_w, means);
}

double gmm_log_density(const GmmPrior &prior, const Vector &x_t, int t,
                       const NoiseSchedule &sched) {
  std::vector<double> log_w;
  std::vector<Vector> means;
  gmm_terms(prior, x_t, sched.alpha_bar(t), log_w, means);
  return log_sum_exp(log_w);
}

Vector epsilon_from_mean(const Vector &x_t, const Vector &x0_mean,
                         double alpha_bar) {
  return (x_t - std::sqrt(alpha_bar) * x0_mean) / std::sqrt(1.0 - alpha_bar);
}

GmmDenoiser::GmmDenoiser(GmmPrior prior, NoiseSchedule sched, ImageShape shape)
    : prior_(std::move(prior)), sched_(std::move(sched)), shape_(shape) {
  if (shape.size() != prior_.dim())
    throw DimensionError("GMM denoiser: prior dimension " +
                         std::to_string(prior_.dim()) +
                         " does not match image size " +
                         std::to_string(shape.size()));
}

DenoiserOutput GmmDenoiser::predict(const Image &x_t, int t,
                                    const ConditionInput &) const {
  check_image_shape(x_t, shape_, "GMM denoiser");
  const Vector mean = gmm_posterior_mean(prior_, x_t.vec(), t, sched_);
  return {Image(shape_.rows, shape_.cols,
                epsilon_from_mean(x_t.vec(), mean, sched_.alpha_bar(t))),
          std::nullopt};
}

GmmDenoiser gmm_denoiser(const GmmPrior &prior, const NoiseSchedule &sched,
                         ImageShape shape) {
  return GmmDenoiser(prior, sched, shape);
}

ConditionalGmmDenoiser::ConditionalGmmDenoiser(const GmmPrior &prior,
                                               const Matrix &a, const Vector &y,
                                               double noise_var,
                                               NoiseSchedule sched,
                                               ImageShape shape)
    : sched_(std::move(sched)), shape_(shape) {
  const Eigen::Index n = prior.dim();
  const Eigen::Index m = a.rows();
  if (shape.size() != n || a.cols() != n)
    throw DimensionError("conditional GMM: operator/prior/image sizes differ");
  if (y.size() != m)
    throw DimensionError("conditional GMM: measurement size mismatch");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var))
    throw ParameterError("conditional GMM: noise variance must be positive");

  // Gain form of the linear-Gaussian update:
  //   S = noise_var I + s2 A A^T,  K = s2 A^T S^-1,
  //   mean = mu + K (y - A mu),   cov = s2 (I - K A).
  const Matrix aat = a * a.transpose();
  std::vector<double> log_w;
  for (const auto &c : prior.components()) {
    const double s2 = c.variance;
    Matrix s = s2 * aat;
    s.diagonal().array() += noise_var;
    const Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericalError("conditional GMM: innovation covariance is not "
                           "positive definite");
    const Vector innov = y - a * c.mean;
    const Matrix gain = s2 * llt.solve(a).transpose();
    PosteriorComponent pc;
    pc.mean = c.mean + gain * innov;
    pc.covariance = -s2 * gain * a;
    pc.covariance.diagonal().array() += s2;
    pc.covariance = 0.5 * (pc.covariance + pc.covariance.transpose()).eval();

    const Matrix l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double quad = innov.dot(llt.solve(innov));
    log_w.push_back(std::log(c.weight) -
                    0.5 * (double(m) * kLog2Pi + log_det + quad));
    pc.weight = 0.0;
    posterior_.push_back(std::move(pc));
  }
  const double lse = log_sum_exp(log_w);
  for (std::size_t k = 0; k < posterior_.size(); ++k)
    posterior_[k].weight = std::exp(log_w[k] - lse);

  for (const auto &pc : posterior_) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(pc.covariance);
    if (eig.info() != Eigen::Success)
      throw NumericalError("conditional GMM: eigendecomposition failed");
    spectral_.push_back({eig.eigenvectors(), eig.eigenvalues().cwiseMax(0.0)});
  }
}

Vector ConditionalGmmDenoiser::posterior_mean(const Vector &x_t, int t) const {
  if (x_t.size() != shape_.size())
    throw DimensionError("conditional GMM: state dimension mismatch");
  const double ab = sched_.alpha_bar(t);
  const double sa = std::sqrt(ab);
  std::vector<double> log_w;
  std::vector<Vector> means;
  for (std::size_t k = 0; k < posterior_.size(); ++k) {
    const auto &pc = posterior_[k];
    const auto &sp = spectral_[k];
    // Marginal covariance of x_t is U diag(ab lambda + 1 - ab) U^T.
    const Vector var = (ab * sp.eigenvalues.array() + (1.0 - ab)).matrix();
    const Vector proj = sp.basis.transpose() * (x_t - sa * pc.mean);
    log_w.push_back(std::log(pc.weight) -
                    0.5 * (double(x_t.size()) * kLog2Pi +
                           var.array().log().sum() +
                           (proj.array().square() / var.array()).sum()));
    const Vector gain =
        (sa * sp.eigenvalues.array() * proj.array() / var.array()).matrix();
    means.push_back(pc.mean + sp.basis * gain);
  }
  return mix(log_w, means);
}

double ConditionalGmmDenoiser::log_density(const Vector &x_t, int t) const {
  if (x_t.size() != shape_.size())
    throw DimensionError("conditional GMM: state dimension mismatch");
  const double ab = sched_.alpha_bar(t);
  const double sa = std::sqrt(ab);
  std::vector<double> log_w;
  for (std::size_t k = 0; k < posterior_.size(); ++k) {
    const auto &sp = spectral_[k];
    const Vector var = (ab * sp.eigenvalues.array() + (1.0 - ab)).matrix();
    const Vector proj = sp.basis.transpose() * (x_t - sa * posterior_[k].mean);
    log_w.push_back(std::log(posterior_[k].weight) -
                    0.5 * (double(x_t.size()) * kLog2Pi +
                           var.array().log().sum() +
                           (proj.array().square() / var.array()).sum()));
  }
  return log_sum_exp(log_w);
}

DenoiserOutput ConditionalGmmDenoiser::predict(const Image &x_t, int t,
                                               const ConditionInput &) const {
  check_image_shape(x_t, shape_, "conditional GMM denoiser");
  const Vector mean = posterior_mean(x_t.vec(), t);
  return {Image(shape_.rows, shape_.cols,
                epsilon_from_mean(x_t.vec(), mean, sched_.alpha_bar(t))),
          std::nullopt};
}

ConditionalGmmDenoiser conditional_gmm_denoiser(const GmmPrior &prior,
                                                const LinearOperator &op,
                                                const Vector &y,
                                                double noise_var,
                                                const NoiseSchedule &sched) {
  return ConditionalGmmDenoiser(prior, to_dense(op), y, noise_var, sched,
                                op.domain());
}

DenoiserOutput guided_epsilon(const DenoiserOutput &cond_out,
                              const DenoiserOutput &uncond_out, double lambda) {
  if (!cond_out.eps.same_shape(uncond_out.eps))
    throw DimensionError("guided_epsilon: branch shapes differ");
  if (!std::isfinite(lambda))
    throw ParameterError("guided_epsilon: lambda must be finite");
  // The endpoints return the branch itself so they are exact to the bit,
  // signed zeros included.
  if (lambda == 1.0)
    return {cond_out.eps, cond_out.v};
  if (lambda == 0.0)
    return {uncond_out.eps, cond_out.v};
  Vector eps = lambda * cond_out.eps.vec() + (1.0 - lambda) * uncond_out.eps.vec();
  return {Image(cond_out.eps.rows(), cond_out.eps.cols(), std::move(eps)),
          cond_out.v};
}

} // namespace lact
