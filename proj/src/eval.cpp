#include "lact/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace lact {

PhantomKind parse_phantom_kind(const std::string &s) {
  if (s == "shepp_logan")
    return PhantomKind::shepp_logan;
  if (s == "disks")
    return PhantomKind::disks;
  if (s == "ellipses_random" || s == "ellipses-random")
    return PhantomKind::ellipses_random;
  throw ParameterError("unknown phantom kind '" + s + "'");
}

const char *to_string(PhantomKind k) {
  switch (k) {
  case PhantomKind::shepp_logan:
    return "shepp_logan";
  case PhantomKind::disks:
    return "disks";
  case PhantomKind::ellipses_random:
    return "ellipses_random";
  }
  return "?";
}

namespace {

struct Ellipse {
  double cx, cy, a, b, phi_deg, value;

  bool contains(double x, double y) const {
    const double phi = phi_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    const double dx = x - cx, dy = y - cy;
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

// Original Shepp-Logan table: center, semi-axes, rotation, additive value.
constexpr std::array<Ellipse, 10> kSheppLogan = {{
    {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
    {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
    {0.22, 0.0, 0.11, 0.31, -18.0, -0.02},
    {-0.22, 0.0, 0.16, 0.41, 18.0, -0.02},
    {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
    {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
    {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
    {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
    {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
    {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
}};

double pixel_coord(Eigen::Index i, Eigen::Index n) {
  return (double(i) - double(n - 1) / 2.0) * (2.0 / double(n));
}

// Each pixel is the mean of a 4 x 4 grid of point evaluations spread over its
// area. Pixels whose sub-samples all agree get that value exactly, so interiors
// equal the point value at the pixel center.
template <typename F> Image render(Eigen::Index n, F &&value_at) {
  constexpr int kSub = 4;
  const double h = 2.0 / double(n);
  Image img(n, n, 0.0);
  for (Eigen::Index row = 0; row < n; ++row)
    for (Eigen::Index col = 0; col < n; ++col) {
      const double x0 = pixel_coord(col, n), y0 = -pixel_coord(row, n);
      double sum = 0.0, first = 0.0;
      bool uniform = true;
      for (int a = 0; a < kSub; ++a)
        for (int b = 0; b < kSub; ++b) {
          const double v =
              value_at(x0 + ((b + 0.5) / kSub - 0.5) * h,
                       y0 - ((a + 0.5) / kSub - 0.5) * h);
          if (a == 0 && b == 0)
            first = v;
          uniform = uniform && v == first;
          sum += v;
        }
      img(row, col) = std::clamp(uniform ? first : sum / (kSub * kSub), 0.0, 2.0);
    }
  return img;
}

// Random non-overlapping shapes inside the unit disk. Overlap is tested on
// bounding circles, which is conservative for ellipses.
Image random_shapes(Eigen::Index n, std::uint64_t seed, bool ellipses) {
  SeededRng rng(seed ^ (ellipses ? 0xe111u : 0xd15cu));
  const int target = 4 + int(rng.uniform() * 5.0); // 4..8 shapes
  std::vector<Ellipse> shapes;
  std::vector<double> radii;
  for (int attempt = 0; attempt < 2000 && int(shapes.size()) < target;
       ++attempt) {
    Ellipse e{};
    e.a = 0.08 + 0.22 * rng.uniform();
    e.b = ellipses ? e.a * (0.4 + 0.6 * rng.uniform()) : e.a;
    e.phi_deg = ellipses ? 180.0 * rng.uniform() : 0.0;
    const double r = std::max(e.a, e.b);
    const double rho = (0.9 - r) * std::sqrt(rng.uniform());
    const double ang = 2.0 * std::numbers::pi * rng.uniform();
    e.cx = rho * std::cos(ang);
    e.cy = rho * std::sin(ang);
    e.value = 0.25 + 1.75 * rng.uniform();
    bool clear = true;
    for (std::size_t j = 0; j < shapes.size() && clear; ++j)
      clear = std::hypot(e.cx - shapes[j].cx, e.cy - shapes[j].cy) >
              r + radii[j] + 0.02;
    if (clear) {
      shapes.push_back(e);
      radii.push_back(r);
    }
  }
  return render(n, [&](double x, double y) {
    for (const auto &e : shapes)
      if (e.contains(x, y))
        return e.value;
    return 0.0;
  });
}

double value_range(const Image &x) {
  return x.vec().maxCoeff() - x.vec().minCoeff();
}

void check_same(const Image &x, const Image &ref, const char *what) {
  if (!x.same_shape(ref))
    throw DimensionError(std::string(what) + ": image shapes differ");
}

// Valid-region correlation of a row-major image with a separable kernel.
RowMajorMatrix filter_valid(const RowMajorMatrix &img, const Vector &w) {
  const Eigen::Index k = w.size();
  const Eigen::Index rows = img.rows() - k + 1, cols = img.cols() - k + 1;
  RowMajorMatrix tmp = RowMajorMatrix::Zero(img.rows(), cols);
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < k; ++i)
        acc += w[i] * img(r, c + i);
      tmp(r, c) = acc;
    }
  RowMajorMatrix out = RowMajorMatrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < k; ++i)
        acc += w[i] * tmp(r + i, c);
      out(r, c) = acc;
    }
  return out;
}

} // namespace

double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const auto &e : kSheppLogan)
    if (e.contains(x, y))
      v += e.value;
  return v;
}

Image make_phantom(const PhantomSpec &spec) {
  if (spec.size < 8)
    throw ParameterError("phantom size must be >= 8");
  const Eigen::Index n = spec.size;
  switch (spec.kind) {
  case PhantomKind::shepp_logan:
    return render(n, shepp_logan_value);
  case PhantomKind::disks:
    return random_shapes(n, spec.seed, false);
  case PhantomKind::ellipses_random:
    return random_shapes(n, spec.seed, true);
  }
  throw ParameterError("unknown phantom kind");
}

double psnr(const Image &x, const Image &reference) {
  check_same(x, reference, "psnr");
  const double mse = (x.vec() - reference.vec()).squaredNorm() / double(x.size());
  if (mse == 0.0)
    return std::numeric_limits<double>::infinity();
  const double peak = value_range(reference);
  if (!(peak > 0.0))
    throw ParameterError("psnr: reference image is constant");
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image &x, const Image &reference) {
  check_same(x, reference, "ssim");
  constexpr Eigen::Index kWin = 11;
  constexpr double kSigma = 1.5;
  if (x.rows() < kWin || x.cols() < kWin)
    throw ParameterError("ssim: image sides must be >= 11");
  if (x == reference)
    return 1.0;
  const double L = value_range(reference);
  if (!(L > 0.0))
    throw ParameterError("ssim: reference image is constant");
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);

  Vector w(kWin);
  for (Eigen::Index i = 0; i < kWin; ++i) {
    const double d = double(i - kWin / 2);
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  w /= w.sum();

  const RowMajorMatrix a = x.matrix();
  const RowMajorMatrix b = reference.matrix();
  const RowMajorMatrix mu_a = filter_valid(a, w);
  const RowMajorMatrix mu_b = filter_valid(b, w);
  const RowMajorMatrix aa = filter_valid(a.cwiseProduct(a), w);
  const RowMajorMatrix bb = filter_valid(b.cwiseProduct(b), w);
  const RowMajorMatrix ab = filter_valid(a.cwiseProduct(b), w);

  double total = 0.0;
  for (Eigen::Index r = 0; r < mu_a.rows(); ++r)
    for (Eigen::Index c = 0; c < mu_a.cols(); ++c) {
      const double ma = mu_a(r, c), mb = mu_b(r, c);
      const double va = aa(r, c) - ma * ma;
      const double vb = bb(r, c) - mb * mb;
      const double cov = ab(r, c) - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  return total / double(mu_a.size());
}

GaussianPosterior<double> gaussian_posterior_oracle(const GmmPrior &prior,
                                                    const Matrix &a,
                                                    const Vector &y,
                                                    double noise_var) {
  if (prior.components().size() != 1)
    throw ParameterError("posterior oracle: prior must have one component");
  const auto &c = prior.components().front();
  return gaussian_posterior_oracle<double>(c.mean, c.variance, a, y, noise_var);
}

double pearson_correlation(const Vector &a, const Vector &b) {
  if (a.size() != b.size() || a.size() == 0)
    throw DimensionError("pearson_correlation: sizes differ or are empty");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double den = da.norm() * db.norm();
  return den > 0.0 ? da.dot(db) / den : 0.0;
}

std::string format_metric(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (std::isnan(v))
    return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos)
    s += ".0";
  return s;
}

std::string to_csv(const MetricRow &row) {
  return row.phantom_id + "," + row.method + "," + format_metric(row.theta_max) +
         "," + std::to_string(row.views) + "," + format_metric(row.psnr_db) +
         "," + format_metric(row.ssim);
}

} // namespace lact
