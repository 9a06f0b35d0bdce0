// lact: simulate, reconstruct, sample and evaluate limited-angle CT.
//
// Exit codes: 0 success, 2 usage error, 3 io/format/data error,
// 4 numerical error.

#include "lact/core.hpp"
#include "lact/denoiser.hpp"
#include "lact/diffusion.hpp"
#include "lact/dolce.hpp"
#include "lact/eval.hpp"
#include "lact/solvers.hpp"
#include "lact/tomography.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace lact;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct UsageError : Error {
  using Error::Error;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

// Plain-text "key = value" manifest. Every argument of the invocation is kept
// as its own `arg` line so replay does not need a quoting scheme.
class Manifest {
public:
  Manifest(std::string command, const std::vector<std::string> &args)
      : start_(std::chrono::steady_clock::now()) {
    add("command", std::move(command));
    for (const auto &a : args)
      add("arg", a);
  }

  void add(const std::string &key, const std::string &value) {
    lines_.push_back(key + " = " + value);
  }
  void add(const std::string &key, double value) { add(key, fmt(value)); }
  void add(const std::string &key, long long value) {
    add(key, std::to_string(value));
  }
  void add(const std::string &key, int value) {
    add(key, std::to_string(value));
  }
  void add(const std::string &key, std::uint64_t value) {
    add(key, std::to_string(value));
  }

  void write(const fs::path &path) {
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
    std::ofstream out(path);
    if (!out)
      throw IoError("cannot write manifest " + path.string());
    out << "# lact run manifest\n";
    for (const auto &l : lines_)
      out << l << "\n";
    out << "duration_s = " << fmt(secs) << "\n";
    if (!out)
      throw IoError("failed writing manifest " + path.string());
  }

private:
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> lines_;
};

std::vector<std::string> read_manifest_args(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open manifest " + path.string());
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    const std::string key = "arg = ";
    if (line.rfind(key, 0) == 0)
      args.push_back(line.substr(key.size()));
  }
  if (args.empty())
    throw FormatError("manifest " + path.string() + " has no arg lines");
  return args;
}

fs::path manifest_path_for(const fs::path &out) {
  return fs::path(out.string() + ".manifest.txt");
}

void maybe_pgm(const std::string &pgm, const Image &img) {
  if (!pgm.empty())
    write_pgm(pgm, img.matrix());
}

// Image size handed to the geometry when the sinogram alone does not say:
// the largest n whose default detector count fits the sinogram.
Eigen::Index infer_size(Eigen::Index detectors) {
  Eigen::Index n = 1;
  while (default_detector_count(n + 1) <= detectors)
    ++n;
  return n;
}

Geometry geometry_for(const Sinogram &sino, Eigen::Index size) {
  const Eigen::Index n = size > 0 ? size : infer_size(sino.detectors());
  return Geometry(n, n, sino.detectors(), sino.angles_deg());
}

std::vector<double> read_numbers(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    if (tok.front() == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size())
        throw std::invalid_argument(tok);
    } catch (const std::exception &) {
      throw FormatError(path.string() + ": not a number: '" + tok + "'");
    }
  }
  return v;
}

// ---- subcommand options ----

struct PhantomOpts {
  std::string kind = "shepp_logan";
  long long size = 128;
  std::uint64_t seed = 0;
  std::string out, pgm;
};

struct ProjectOpts {
  std::string in, out, pgm;
  long long views = 180;
  double theta_max = 180.0;
  long long detectors = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

struct ReconOpts {
  std::string method, in, out, pgm;
  long long size = 0;
  std::string filter = "ram_lak";
  double tau = -1.0;
  double tol = 1e-6;
  int max_iter = 100;
  double lambda = 0.05;
  int iters = 50;
};

struct DolceOpts {
  std::string in, out_dir;
  long long size = 0;
  std::string condition = "fbp";
  std::string prior = "builtin";
  std::string model = "prior";
  std::string table;
  std::string schedule = "linear";
  int T = 1000;
  int K = 50;
  double lambda = 1.0;
  double gamma = 1.0;
  std::string gamma_schedule;
  bool no_prox = false;
  int prox_skip = 0;
  double cg_tol = 1e-8;
  int cg_max_iter = 200;
  double noise_var = 1e-2;
  int samples = 8;
  std::uint64_t seed = 0;
  int threads = 1;
  bool pgm = false;
};

struct MetricsOpts {
  std::string recon, reference;
  std::string phantom_id, method = "unknown";
  double theta_max = 0.0;
  long long views = 0;
  bool no_header = false;
};

struct ScheduleOpts {
  std::string kind = "linear";
  int T = 1000;
  int K = 0;
};

void check_out(const std::string &out) {
  if (out.empty())
    throw UsageError("--out is required");
}

NoiseSchedule make_schedule(const std::string &kind, int T) {
  if (kind == "linear")
    return default_linear_schedule(T);
  if (kind == "cosine")
    return cosine_schedule(T);
  throw UsageError("unknown schedule '" + kind + "' (linear|cosine)");
}

// ---- commands ----

int cmd_phantom(const PhantomOpts &o, Manifest &m) {
  check_out(o.out);
  if (o.size < 8)
    throw UsageError("--size must be >= 8");
  PhantomSpec spec;
  try {
    spec.kind = parse_phantom_kind(o.kind);
  } catch (const ParameterError &e) {
    throw UsageError(e.what());
  }
  spec.size = o.size;
  spec.seed = o.seed;
  const Image img = make_phantom(spec);
  write_raster(o.out, img);
  maybe_pgm(o.pgm, img);
  m.add("kind", to_string(spec.kind));
  m.add("size", o.size);
  m.add("seed", o.seed);
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

int cmd_project(const ProjectOpts &o, Manifest &m) {
  check_out(o.out);
  if (!(o.theta_max > 0.0 && o.theta_max <= 180.0))
    throw UsageError("--theta-max must lie in (0, 180]");
  if (o.views < 1)
    throw UsageError("--views must be >= 1");
  if (!(o.noise_std >= 0.0))
    throw UsageError("--noise-std must be >= 0");
  const Image img = read_image(o.in);
  if (img.rows() != img.cols())
    throw UsageError("project expects a square image");
  const Eigen::Index D =
      o.detectors > 0 ? o.detectors : default_detector_count(img.rows());
  const Geometry geom = make_limited_geometry(img.rows(), D, o.views, o.theta_max);
  Sinogram sino = forward_project(img, geom);
  if (o.noise_std > 0.0) {
    SeededRng rng(o.seed);
    sino.vec() += o.noise_std * rng.normal_vector(sino.size());
  }
  write_raster(o.out, sino);
  if (!o.pgm.empty())
    write_pgm(o.pgm, sino.matrix());
  m.add("views", o.views);
  m.add("theta_max", o.theta_max);
  m.add("detectors", static_cast<long long>(D));
  m.add("noise_std", o.noise_std);
  m.add("seed", o.seed);
  m.add("geometry_digest", hex(geom.digest()));
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

int cmd_reconstruct(const ReconOpts &o, Manifest &m) {
  check_out(o.out);
  if (o.method != "fbp" && o.method != "rls" && o.method != "tv")
    throw UsageError("unknown method '" + o.method + "' (fbp|rls|tv)");
  const Sinogram sino = read_sinogram(o.in);
  const Geometry geom = geometry_for(sino, o.size);
  m.add("method", o.method);
  m.add("size", static_cast<long long>(geom.image_rows()));
  m.add("geometry_digest", hex(geom.digest()));

  Image out(geom.image_rows(), geom.image_cols());
  if (o.method == "fbp") {
    FilterKind kind;
    if (o.filter == "ram_lak" || o.filter == "ram-lak")
      kind = FilterKind::ram_lak;
    else if (o.filter == "hann")
      kind = FilterKind::hann;
    else
      throw UsageError("unknown filter '" + o.filter + "' (ram_lak|hann)");
    out = fbp_reconstruct(sino, geom, kind);
    m.add("filter", o.filter);
  } else if (o.method == "rls") {
    RlsOptions ro;
    ro.tau = o.tau;
    ro.tol = o.tol;
    ro.max_iter = o.max_iter;
    const ProjectionOperator op(geom);
    const double tau = ro.tau < 0.0 ? default_rls_tau(op) : ro.tau;
    CgReport rep;
    out = Image(geom.image_rows(), geom.image_cols(),
                rls_solve(op, sino.vec(), tau, ro.tol, ro.max_iter, &rep));
    m.add("tau", tau);
    m.add("tol", o.tol);
    m.add("max_iter", o.max_iter);
    m.add("cg_iterations", rep.iterations);
    m.add("cg_converged", rep.converged ? "true" : "false");
  } else {
    if (!(o.lambda >= 0.0))
      throw UsageError("--lambda must be >= 0");
    if (o.iters < 1)
      throw UsageError("--iters must be >= 1");
    const ProjectionOperator op(geom);
    const TvResult r = tv_solve(op, sino.vec(), o.lambda, o.iters);
    out = Image(geom.image_rows(), geom.image_cols(), r.x);
    m.add("lambda", o.lambda);
    m.add("iters", o.iters);
    m.add("objective_final", r.objective.back());
  }
  write_raster(o.out, out);
  maybe_pgm(o.pgm, out);
  m.write(manifest_path_for(o.out));
  return kExitOk;
}

int cmd_dolce(const DolceOpts &o, Manifest &m) {
  if (o.out_dir.empty())
    throw UsageError("--out-dir is required");
  if (o.samples < 1)
    throw UsageError("--samples must be >= 1");
  if (o.threads < 1)
    throw UsageError("--threads must be >= 1");
  if (o.T < 2)
    throw UsageError("--T must be >= 2");
  if (o.K < 1 || o.K > o.T)
    throw UsageError("--K must lie in [1, T]");
  if (!(o.gamma > 0.0))
    throw UsageError("--gamma must be > 0");
  if (!(o.noise_var > 0.0))
    throw UsageError("--noise-var must be > 0");
  ConditionMethod cmethod;
  if (o.condition == "fbp")
    cmethod = ConditionMethod::fbp;
  else if (o.condition == "rls")
    cmethod = ConditionMethod::rls;
  else
    throw UsageError("unknown condition '" + o.condition + "' (fbp|rls)");
  if (o.model != "prior" && o.model != "posterior" && o.model != "table")
    throw UsageError("unknown model '" + o.model + "' (prior|posterior|table)");
  if (o.lambda != 1.0 && o.model != "posterior")
    throw UsageError("--lambda other than 1 needs an unconditional model; "
                     "only --model posterior provides one");

  const Sinogram sino = read_sinogram(o.in);
  const Geometry geom = geometry_for(sino, o.size);
  const ProjectionOperator op(geom);
  const ImageShape shape = geom.image_shape();
  const NoiseSchedule sched = make_schedule(o.schedule, o.T);

  std::optional<GmmPrior> prior;
  if (o.model != "table") {
    if (o.prior == "builtin")
      prior.emplace(std::vector<GmmComponent>{
          {1.0, Vector::Zero(shape.size()), 1.0}});
    else
      prior.emplace(GmmPrior::load(o.prior));
    if (prior->dim() != shape.size())
      throw UsageError("prior dimension " + std::to_string(prior->dim()) +
                       " does not match the " + std::to_string(shape.rows) +
                       "x" + std::to_string(shape.cols) + " image");
  }

  std::unique_ptr<Denoiser> model, uncond;
  if (o.model == "prior") {
    model = std::make_unique<GmmDenoiser>(*prior, sched, shape);
  } else if (o.model == "posterior") {
    if (shape.size() > 4096)
      throw UsageError("--model posterior builds a dense operator; images "
                       "above 64x64 are not supported");
    model = std::make_unique<ConditionalGmmDenoiser>(
        conditional_gmm_denoiser(*prior, op, sino.vec(), o.noise_var, sched));
    uncond = std::make_unique<GmmDenoiser>(*prior, sched, shape);
  } else {
    if (o.table.empty())
      throw UsageError("--model table needs --table FILE");
    model = std::make_unique<TableDenoiser>(TableDenoiser::load(o.table));
  }

  SamplerConfig cfg;
  cfg.K = o.K;
  cfg.lambda = o.lambda;
  cfg.seed = o.seed;
  cfg.n_samples = o.samples;
  cfg.prox_skip_first = o.prox_skip;
  if (!o.no_prox) {
    ProxConfig pc;
    pc.gamma = o.gamma;
    pc.cg_tol = o.cg_tol;
    pc.cg_max_iter = o.cg_max_iter;
    cfg.prox = pc;
    if (!o.gamma_schedule.empty())
      cfg.gamma_schedule = read_numbers(o.gamma_schedule);
  } else if (!o.gamma_schedule.empty()) {
    throw UsageError("--gamma-schedule conflicts with --no-prox");
  }
  try {
    cfg.validate(sched.T());
  } catch (const ParameterError &e) {
    throw UsageError(e.what());
  }

  const ConditionInput cond = build_condition(sino, geom, cmethod);
  SampleSet set = dolce_sample_set(*model, uncond.get(), sino.vec(), op, cond,
                                   sched, cfg, o.threads);
  set.geometry_digest = geom.digest();

  // Single writer, after all chains are done.
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  auto emit = [&](const std::string &stem, const Image &img) {
    write_raster(dir / (stem + ".ctr"), img);
    if (o.pgm)
      write_pgm(dir / (stem + ".pgm"), img.matrix());
  };
  emit("condition", cond.image);
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "sample_%03zu", i);
    emit(stem, set.samples[i]);
  }
  emit("average", sample_average(set));
  if (set.samples.size() >= 2)
    emit("uncertainty", uncertainty_map(set));

  m.add("size", static_cast<long long>(shape.rows));
  m.add("condition", o.condition);
  m.add("model", o.model);
  m.add("prior", o.model == "table" ? o.table : o.prior);
  m.add("schedule", o.schedule);
  m.add("T", o.T);
  m.add("K", o.K);
  m.add("lambda", o.lambda);
  m.add("prox", o.no_prox ? "off" : "on");
  m.add("gamma", o.gamma);
  m.add("gamma_schedule", o.gamma_schedule.empty() ? "none" : o.gamma_schedule);
  m.add("prox_skip", o.prox_skip);
  m.add("cg_tol", o.cg_tol);
  m.add("cg_max_iter", o.cg_max_iter);
  m.add("noise_var", o.noise_var);
  m.add("samples", o.samples);
  m.add("threads", o.threads);
  m.add("seed", o.seed);
  m.add("geometry_digest", hex(set.geometry_digest));
  m.add("uncertainty", set.samples.size() >= 2 ? "uncertainty.ctr"
                                               : "none (needs >= 2 samples)");
  double mean_residual = 0.0;
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    const std::string id = std::to_string(i);
    m.add("sample." + id + ".seed", cfg.seed + i);
    m.add("trace." + id + ".columns", "k t residual_before residual_after "
                                      "cg_iterations prox_applied cg_converged");
    for (const auto &r : set.traces[i])
      m.add("trace." + id, std::to_string(r.k) + " " + std::to_string(r.t) +
                               " " + fmt(r.residual_before) + " " +
                               fmt(r.residual_after) + " " +
                               std::to_string(r.cg_iterations) + " " +
                               (r.prox_applied ? "1" : "0") + " " +
                               (r.cg_converged ? "1" : "0"));
    const double fr = set.traces[i].empty() ? 0.0 : set.traces[i].back().residual_after;
    m.add("final_residual." + id, fr);
    mean_residual += fr;
  }
  m.add("final_residual_mean", mean_residual / double(set.traces.size()));
  m.write(dir / "manifest.txt");
  return kExitOk;
}

int cmd_metrics(const MetricsOpts &o) {
  const Image x = read_image(o.recon);
  const Image ref = read_image(o.reference);
  if (!x.same_shape(ref))
    throw UsageError("recon is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", reference is " +
                     std::to_string(ref.rows()) + "x" +
                     std::to_string(ref.cols()));
  MetricRow row;
  row.phantom_id =
      o.phantom_id.empty() ? fs::path(o.reference).stem().string() : o.phantom_id;
  row.method = o.method;
  row.theta_max = o.theta_max;
  row.views = static_cast<long>(o.views);
  row.psnr_db = psnr(x, ref);
  row.ssim = ssim(x, ref);
  if (!o.no_header)
    std::cout << kMetricCsvHeader << "\n";
  std::cout << to_csv(row) << "\n";
  return kExitOk;
}

int cmd_schedule(const ScheduleOpts &o) {
  const NoiseSchedule s = make_schedule(o.kind, o.T);
  if (o.K > 0 && o.K < o.T) {
    const TimestepMap map = respace(s, o.K);
    std::cout << "# respaced K=" << map.K() << " original_t:";
    for (int t : map.indices)
      std::cout << " " << t;
    std::cout << "\n" << map.schedule.to_table();
  } else {
    std::cout << s.to_table();
  }
  return kExitOk;
}

int run(std::vector<std::string> args);

int run_guarded(std::vector<std::string> args) {
  try {
    return run(std::move(args));
  } catch (const UsageError &e) {
    std::cerr << "lact: usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError &e) {
    std::cerr << "lact: invalid parameter: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError &e) {
    std::cerr << "lact: dimension mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError &e) {
    std::cerr << "lact: numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error &e) {
    std::cerr << "lact: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "lact: " << e.what() << "\n";
    return kExitIo;
  }
}

int run(std::vector<std::string> args) {
  CLI::App app{"Limited-angle CT: simulate, reconstruct, sample, evaluate"};
  app.require_subcommand(0, 1);
  std::string manifest_in;
  app.add_option("--manifest-in", manifest_in,
                 "Replay the invocation recorded in a run manifest");

  PhantomOpts ph;
  auto *c_ph = app.add_subcommand("phantom", "Write a phantom image");
  c_ph->add_option("--kind", ph.kind, "shepp_logan|disks|ellipses_random");
  c_ph->add_option("--size", ph.size, "Side length (>= 8)");
  c_ph->add_option("--seed", ph.seed);
  c_ph->add_option("--out", ph.out)->required();
  c_ph->add_option("--pgm", ph.pgm, "Also write a PGM preview");

  ProjectOpts pr;
  auto *c_pr = app.add_subcommand("project", "Forward-project an image");
  c_pr->add_option("--in", pr.in)->required();
  c_pr->add_option("--views", pr.views);
  c_pr->add_option("--theta-max", pr.theta_max, "Arc end in degrees, (0, 180]");
  c_pr->add_option("--detectors", pr.detectors, "Default ceil(n sqrt 2) + 1");
  c_pr->add_option("--noise-std", pr.noise_std);
  c_pr->add_option("--seed", pr.seed);
  c_pr->add_option("--out", pr.out)->required();
  c_pr->add_option("--pgm", pr.pgm);

  ReconOpts rc;
  auto *c_rc = app.add_subcommand("reconstruct", "FBP, RLS or TV reconstruction");
  c_rc->add_option("--method", rc.method, "fbp|rls|tv")->required();
  c_rc->add_option("--in", rc.in)->required();
  c_rc->add_option("--out", rc.out)->required();
  c_rc->add_option("--pgm", rc.pgm);
  c_rc->add_option("--size", rc.size, "Image side; inferred from detectors if 0");
  c_rc->add_option("--filter", rc.filter, "fbp: ram_lak|hann");
  c_rc->add_option("--tau", rc.tau, "rls: Tikhonov weight; negative = default");
  c_rc->add_option("--tol", rc.tol, "rls: CG tolerance");
  c_rc->add_option("--max-iter", rc.max_iter, "rls: CG iterations");
  c_rc->add_option("--lambda", rc.lambda, "tv: regularization weight");
  c_rc->add_option("--iters", rc.iters, "tv: outer iterations");

  DolceOpts dc;
  auto *c_dc = app.add_subcommand("dolce", "Conditional diffusion sampling");
  c_dc->add_option("--in", dc.in)->required();
  c_dc->add_option("--out-dir", dc.out_dir)->required();
  c_dc->add_option("--size", dc.size);
  c_dc->add_option("--condition", dc.condition, "fbp|rls");
  c_dc->add_option("--prior", dc.prior, "builtin or a GMM prior file");
  c_dc->add_option("--model", dc.model, "prior|posterior|table");
  c_dc->add_option("--table", dc.table, "Table denoiser file");
  c_dc->add_option("--schedule", dc.schedule, "linear|cosine");
  c_dc->add_option("--T", dc.T, "Diffusion length");
  c_dc->add_option("--K", dc.K, "Reverse steps");
  c_dc->add_option("--lambda", dc.lambda, "Guidance weight");
  c_dc->add_option("--gamma", dc.gamma, "Data-consistency weight");
  c_dc->add_option("--gamma-schedule", dc.gamma_schedule,
                   "File with K per-step weights, k = 1..K");
  c_dc->add_flag("--no-prox", dc.no_prox, "Skip the data-consistency step");
  c_dc->add_option("--prox-skip", dc.prox_skip,
                   "Skip the data-consistency step for the first m steps");
  c_dc->add_option("--cg-tol", dc.cg_tol);
  c_dc->add_option("--cg-max-iter", dc.cg_max_iter);
  c_dc->add_option("--noise-var", dc.noise_var,
                   "posterior: measurement noise variance");
  c_dc->add_option("--samples", dc.samples);
  c_dc->add_option("--seed", dc.seed);
  c_dc->add_option("--threads", dc.threads);
  c_dc->add_flag("--pgm", dc.pgm, "Also write PGM previews");

  MetricsOpts mt;
  auto *c_mt = app.add_subcommand("metrics", "PSNR and SSIM as a CSV row");
  c_mt->add_option("--recon", mt.recon)->required();
  c_mt->add_option("--reference", mt.reference)->required();
  c_mt->add_option("--phantom-id", mt.phantom_id);
  c_mt->add_option("--method", mt.method);
  c_mt->add_option("--theta-max", mt.theta_max);
  c_mt->add_option("--views", mt.views);
  c_mt->add_flag("--no-header", mt.no_header);

  ScheduleOpts sc;
  auto *c_sc = app.add_subcommand("schedule", "Print a noise schedule table");
  c_sc->add_option("--kind", sc.kind, "linear|cosine");
  c_sc->add_option("--T", sc.T);
  c_sc->add_option("--K", sc.K, "Respace to K steps when 0 < K < T");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  if (!manifest_in.empty()) {
    if (!app.get_subcommands().empty())
      throw UsageError("--manifest-in cannot be combined with a subcommand");
    return run(read_manifest_args(manifest_in));
  }
  if (app.get_subcommands().empty())
    throw UsageError("a subcommand is required (see --help)");

  CLI::App *sub = app.get_subcommands().front();
  Manifest m(sub->get_name(), args);
  if (sub == c_ph)
    return cmd_phantom(ph, m);
  if (sub == c_pr)
    return cmd_project(pr, m);
  if (sub == c_rc)
    return cmd_reconstruct(rc, m);
  if (sub == c_dc)
    return cmd_dolce(dc, m);
  if (sub == c_mt)
    return cmd_metrics(mt);
  return cmd_schedule(sc);
}

} // namespace

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_guarded(std::move(args));
}
