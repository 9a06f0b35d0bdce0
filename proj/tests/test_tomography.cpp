#include "support.hpp"

#include "lact/eval.hpp"
#include "lact/tomography.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>

using namespace lact;
using namespace lact::testing;

namespace {

Image centered_disk(Eigen::Index n, double radius) {
  Image img(n, n, 0.0);
  const double c = 0.5 * double(n - 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::hypot(double(j) - c, c - double(i)) <= radius)
        img(i, j) = 1.0;
  return img;
}

// Direct O(P^2) DFT used as the ramp-filter oracle.
Vector dft_ramp(const Vector &row, std::size_t P, bool hann) {
  std::vector<std::complex<double>> spec(P);
  for (std::size_t k = 0; k < P; ++k) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index n = 0; n < row.size(); ++n)
      acc += row[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) *
                                          double(n) / double(P));
    const double m = double(std::min(k, P - k));
    double g = m / double(P);
    if (hann)
      g *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * m / double(P)));
    spec[k] = acc * g;
  }
  Vector out(static_cast<Eigen::Index>(P));
  for (std::size_t n = 0; n < P; ++n) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < P; ++k)
      acc += spec[k] * std::polar(1.0, 2.0 * std::numbers::pi * double(k) *
                                           double(n) / double(P));
    out[static_cast<Eigen::Index>(n)] = acc.real() / double(P);
  }
  return out;
}

} // namespace

TEST_CASE("limited geometry angle lattice") {
  const Geometry g = make_limited_geometry(64, 95, 4, 180.0);
  CHECK(g.angles_deg() == std::vector<double>{0.0, 45.0, 90.0, 135.0});

  const Geometry fine = make_limited_geometry(512, 725, 720, 180.0);
  for (std::size_t v = 1; v < fine.angles_deg().size(); ++v)
    REQUIRE(fine.angles_deg()[v] - fine.angles_deg()[v - 1] ==
            doctest::Approx(0.25).epsilon(1e-12));

  const Geometry la = make_limited_geometry(64, 95, 240, 60.0);
  REQUIRE(la.views() == 240);
  for (Eigen::Index v = 0; v < 240; ++v)
    REQUIRE(la.angles_deg()[v] == doctest::Approx(0.25 * double(v)).epsilon(1e-14));
  CHECK(la.angles_deg().back() == doctest::Approx(59.75));

  CHECK_THROWS_AS(make_limited_geometry(64, 95, 4, 0.0), ParameterError);
  CHECK_THROWS_AS(make_limited_geometry(64, 95, 4, 200.0), ParameterError);
  CHECK_THROWS_AS(make_limited_geometry(64, 95, 0, 90.0), ParameterError);
}

TEST_CASE("geometry refuses truncating detector arrays") {
  // 512 bins cannot cover the 724-pixel diagonal of a 512 x 512 image.
  CHECK_THROWS_AS(make_limited_geometry(512, 512, 720, 180.0), ParameterError);
  CHECK_THROWS_AS(Geometry(8, 8, 11, {0.0}), ParameterError);
  CHECK_NOTHROW(Geometry(8, 8, 12, {0.0}));
  CHECK(default_detector_count(64) == 92);
  CHECK(default_detector_count(128) == 183);
  CHECK_THROWS_AS(Geometry(8, 8, 12, {0.0}, 0.0, 1.0), ParameterError);
}

TEST_CASE("geometry digest is stable and discriminating") {
  const Geometry a = make_limited_geometry(16, 24, 10, 90.0);
  const Geometry b = make_limited_geometry(16, 24, 10, 90.0);
  const Geometry c = make_limited_geometry(16, 24, 10, 91.0);
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
}

TEST_CASE("projector is linear and maps zero to zero") {
  const Geometry g = make_limited_geometry(24, 36, 17, 180.0);
  CHECK(forward_project(Image(24, 24, 0.0), g).vec().isZero(0.0));
  CHECK(back_project(Sinogram(g.angles_deg(), 36, 0.0), g).vec().isZero(0.0));

  SeededRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Image x = random_image(rng, 24, 24);
    const Image z = random_image(rng, 24, 24);
    const double a = uniform_real(rng, -3.0, 3.0);
    const Vector lhs =
        forward_project(Image(24, 24, (a * x.vec() + z.vec()).eval()), g).vec();
    const Vector rhs = a * forward_project(x, g).vec() + forward_project(z, g).vec();
    REQUIRE(rel_diff(lhs, rhs) < 1e-12);

    const Sinogram s(g.angles_deg(), 36, rng.normal_vector(g.views() * 36));
    const Vector bl =
        back_project(Sinogram(g.angles_deg(), 36, (a * s.vec()).eval()), g).vec();
    REQUIRE(rel_diff(bl, a * back_project(s, g).vec()) < 1e-12);
  }
}

TEST_CASE("adjoint identity on random instances") {
  SeededRng rng(17);
  for (Eigen::Index n : {16, 32, 64})
    for (Eigen::Index views : {10, 45, 90}) {
      const Geometry g =
          make_limited_geometry(n, default_detector_count(n), views, 180.0);
      for (int trial = 0; trial < 5; ++trial) {
        const Vector x = rng.normal_vector(n * n);
        const Vector y = rng.normal_vector(g.views() * g.detectors());
        const Vector ax = forward_project(x, g);
        const double lhs = ax.dot(y);
        const double rhs = x.dot(back_project(y, g));
        REQUIRE(std::abs(lhs - rhs) <= 1e-4 * ax.norm() * y.norm());
      }
    }
}

TEST_CASE("adjoint equals the transpose of the materialized matrix") {
  const Geometry g = make_limited_geometry(8, 12, 7, 150.0);
  const ProjectionOperator op(g);
  const Matrix a = to_dense(op);
  Matrix at(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Vector e = Vector::Zero(a.rows());
    e[i] = 1.0;
    at.col(i) = op.adjoint(e);
  }
  CHECK((at - a.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("disk profiles follow the chord length in every view") {
  const Eigen::Index n = 64;
  const double R = 20.0;
  const Image disk = centered_disk(n, R);
  const Geometry g = make_limited_geometry(n, default_detector_count(n), 12, 180.0);
  const Sinogram s = forward_project(disk, g);
  double worst = 0.0, worst_between_views = 0.0;
  for (Eigen::Index v = 0; v < g.views(); ++v)
    for (Eigen::Index d = 0; d < g.detectors(); ++d) {
      const double r = double(d) - 0.5 * double(g.detectors() - 1);
      const double chord = std::abs(r) <= R ? 2.0 * std::sqrt(R * R - r * r) : 0.0;
      worst = std::max(worst, std::abs(s(v, d) - chord));
      worst_between_views = std::max(worst_between_views, std::abs(s(v, d) - s(0, d)));
    }
  CHECK(worst <= 2.0);
  CHECK(worst_between_views <= 2.0);
}

TEST_CASE("single-bin back projection lives on one ray strip") {
  for (double angle : {0.0, 30.0, 45.0, 100.0}) {
    const Geometry g(24, 24, 35, {angle});
    Sinogram s({angle}, 35, 0.0);
    const Eigen::Index d = 20;
    s(0, d) = 1.0;
    const Image b = back_project(s, g);
    const double th = angle * std::numbers::pi / 180.0;
    const double r = double(d) - 17.0;
    int touched = 0;
    for (Eigen::Index i = 0; i < 24; ++i)
      for (Eigen::Index j = 0; j < 24; ++j) {
        if (b(i, j) == 0.0)
          continue;
        ++touched;
        const double x = double(j) - 11.5, y = 11.5 - double(i);
        REQUIRE(std::abs(x * std::cos(th) + y * std::sin(th) - r) <= 1.0 + 1e-9);
      }
    CHECK(touched >= 24);
  }
}

TEST_CASE("ramp filter matches a direct DFT and removes the mean") {
  SeededRng rng(23);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::Index D = uniform_int(rng, 5, 40);
    const Vector row = rng.normal_vector(D);
    const std::size_t P = 4 * std::bit_ceil(std::size_t(D));
    for (FilterKind kind : {FilterKind::ram_lak, FilterKind::hann}) {
      const Vector got = ramp_filter_padded(row, kind);
      REQUIRE(std::size_t(got.size()) == P);
      const Vector want = dft_ramp(row, P, kind == FilterKind::hann);
      REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + row.norm()));
      REQUIRE(std::abs(got.mean()) <= 1e-6 * got.norm());
    }
  }
  CHECK_THROWS_AS(ramp_filter_padded(Vector::Ones(1), FilterKind::ram_lak),
                  DimensionError);
}

TEST_CASE("ramp filter impulse response is symmetric, filter is linear") {
  const Eigen::Index D = 33;
  Sinogram s({0.0}, D, 0.0);
  s(0, D / 2) = 1.0;
  for (FilterKind kind : {FilterKind::ram_lak, FilterKind::hann}) {
    const Sinogram f = ramp_filter(s, kind);
    for (Eigen::Index k = 1; k <= D / 2; ++k)
      REQUIRE(std::abs(f(0, D / 2 - k) - f(0, D / 2 + k)) <= 1e-12 * f(0, D / 2));
  }
  // Taps against the band-limited kernels 2 int_0^1/2 f W(f) cos(2 pi f n) df,
  // W = 1 (Ram-Lak) or 0.5 (1 + cos 2 pi f) (Hann), integrated offline.
  const Sinogram rl = ramp_filter(s, FilterKind::ram_lak);
  const Sinogram hn = ramp_filter(s, FilterKind::hann);
  CHECK(rl(0, D / 2) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(rl(0, D / 2 + 1) == doctest::Approx(-1.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-3));
  CHECK(hn(0, D / 2) == doctest::Approx(0.0743394).epsilon(1e-3));
  CHECK(hn(0, D / 2 + 1) == doctest::Approx(0.0118394).epsilon(1e-3));
  CHECK(hn(0, D / 2 + 2) == doctest::Approx(-0.0281448).epsilon(1e-3));
  SeededRng rng(4);
  const Sinogram a({0.0, 10.0}, 20, rng.normal_vector(40));
  const Sinogram b({0.0, 10.0}, 20, (3.5 * a.vec()).eval());
  CHECK(rel_diff(ramp_filter(b, FilterKind::ram_lak).vec(),
                 3.5 * ramp_filter(a, FilterKind::ram_lak).vec()) < 1e-12);
}

TEST_CASE("fbp: zero in, zero out; linear; dimension checks") {
  const Geometry g = make_limited_geometry(16, 24, 20, 180.0);
  CHECK(fbp_reconstruct(Sinogram(g.angles_deg(), 24, 0.0), g).vec().isZero(0.0));
  SeededRng rng(8);
  const Sinogram s(g.angles_deg(), 24, rng.normal_vector(20 * 24));
  const Sinogram s2(g.angles_deg(), 24, (-2.0 * s.vec()).eval());
  CHECK(rel_diff(fbp_reconstruct(s2, g).vec(), -2.0 * fbp_reconstruct(s, g).vec()) < 1e-5);
  CHECK_THROWS_AS(fbp_reconstruct(Sinogram(g.angles_deg(), 23, 0.0), g), DimensionError);
  CHECK_THROWS_AS(fbp_reconstruct(Sinogram({0.0, 1.0}, 24, 0.0), g), DimensionError);
  CHECK_THROWS_AS(forward_project(Image(15, 16), g), DimensionError);
}

TEST_CASE("fbp accuracy on a full-view disk phantom") {
  const Image phantom = make_phantom({PhantomKind::disks, 128, 1});
  const Geometry full = make_limited_geometry(128, default_detector_count(128), 180, 180.0);
  const double p_full = psnr(fbp_reconstruct(forward_project(phantom, full), full), phantom);
  CHECK(p_full >= 30.0);
  const Geometry la = make_limited_geometry(128, default_detector_count(128), 60, 60.0);
  const double p_la = psnr(fbp_reconstruct(forward_project(phantom, la), la), phantom);
  CHECK(p_la < p_full);
}

TEST_CASE("fbp PSNR does not drop as the arc widens") {
  const Eigen::Index n = 64;
  double prev = -1e9;
  for (double th : {60.0, 90.0, 120.0, 180.0}) {
    const Geometry g =
        make_limited_geometry(n, default_detector_count(n), Eigen::Index(th), th);
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Image p = make_phantom({PhantomKind::disks, n, seed});
      sum += psnr(fbp_reconstruct(forward_project(p, g), g), p);
    }
    CHECK(sum / 3.0 >= prev);
    prev = sum / 3.0;
  }
}
