#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphflow/errors.hpp"
#include "graphflow/surface.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace graphflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

template <typename F>
double fd(F f, double x, double h = 1e-4) {
  // fourth-order central difference keeps the verification error ~1e-12
  return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

// worst violation of d_k g_ij = Gamma^l_{ki} g_lj + Gamma^l_{kj} g_il over
// random points
double metric_compat_worst(const SurfaceModel& s, double x1_lo, double x1_hi, int npts,
                           unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u1(x1_lo, x1_hi), u2(0.0, 2.0 * kPi);
  double worst = 0.0;
  for (int n = 0; n < npts; ++n) {
    double x1 = u1(rng), x2 = u2(rng);
    Christoffel ch = s.christoffel_at({x1, x2});
    Sym2 g = s.metric_at({x1, x2});
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        for (int j = i; j < 2; ++j) {
          double dg;
          if (k == 0) {
            dg = fd([&](double t) { return s.metric_at({t, x2})(i, j); }, x1);
          } else {
            dg = fd([&](double t) { return s.metric_at({x1, t})(i, j); }, x2);
          }
          double rhs = 0.0;
          for (int l = 0; l < 2; ++l) {
            rhs += ch.c[l][k][i] * g(l, j) + ch.c[l][k][j] * g(i, l);
          }
          worst = std::max(worst, std::abs(dg - rhs));
        }
      }
    }
  }
  return worst;
}

// Gauss curvature of an analytic chart metric by the determinant formula at
// stencil spacing h
double brioschi_analytic(const SurfaceModel& s, ChartCoords p, double h) {
  Sym2 st[3][3];
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      st[di + 1][dj + 1] = s.metric_at({p.x1 + di * h, p.x2 + dj * h});
  return brioschi_from_stencil(st, h, h);
}
}  // namespace

TEST_CASE("flat torus metric is the lattice Gram matrix") {
  SurfaceModel t = SurfaceModel::flat_torus(Mat2::identity());
  Sym2 g = t.metric_at({0.37, 0.91});
  CHECK(g.a11 == doctest::Approx(1.0));
  CHECK(g.a12 == doctest::Approx(0.0));
  CHECK(g.a22 == doctest::Approx(1.0));

  Mat2 lat{{{2.0, 0.5}, {0.0, 1.0}}};  // columns (2,0), (0.5,1)
  SurfaceModel t2 = SurfaceModel::flat_torus(lat);
  Sym2 g2 = t2.metric_at({0.1, 0.2});
  CHECK(g2.a11 == doctest::Approx(4.0));
  CHECK(g2.a12 == doctest::Approx(1.0));
  CHECK(g2.a22 == doctest::Approx(1.25));
  CHECK(t2.curvature_at({0.5, 0.5}) == 0.0);
}

TEST_CASE("round sphere metric at the equator is the identity for kappa 1") {
  SurfaceModel s = SurfaceModel::round_sphere(1.0);
  Sym2 g = s.metric_at({kPi / 2.0, 0.0});
  CHECK(g.a11 == doctest::Approx(1.0));
  CHECK(g.a22 == doctest::Approx(1.0));
  CHECK(g.a12 == doctest::Approx(0.0));

  SurfaceModel s4 = SurfaceModel::round_sphere(4.0);  // radius 1/2
  Sym2 g4 = s4.metric_at({kPi / 2.0, 1.0});
  CHECK(g4.a11 == doctest::Approx(0.25));
  CHECK(g4.a22 == doctest::Approx(0.25));
}

TEST_CASE("warped sphere metric matches the arc length of its embedding") {
  // w = sin(x1)(1 + a sin^2 x1) with a = 0.1 keeps |w'| <= 1, so the surface
  // of revolution (w cos x2, w sin x2, z) with z' = sqrt(1 - w'^2) exists and
  // is isometric; chord-sum arc lengths along coordinate curves are the
  // oracle.
  SurfaceModel s = SurfaceModel::warped_sphere(WarpFamily::Bulge, 0.1);
  auto zprime = [&](double u) {
    double wd = s.warp_d(u);
    return std::sqrt(std::max(0.0, 1.0 - wd * wd));
  };
  for (double x1 : {0.7, 1.3, 2.2}) {
    const double delta = 0.05;
    const int nseg = 20000;

    double len_m = 0.0;  // meridian arc length over [x1, x1 + delta]
    double zacc = 0.0;
    double prev_w = s.warp(x1), prev_z = 0.0;
    for (int k = 1; k <= nseg; ++k) {
      double u = x1 + delta * k / nseg;
      double um = x1 + delta * (k - 0.5) / nseg;
      zacc += zprime(um) * (delta / nseg);
      double wk = s.warp(u);
      len_m += std::hypot(wk - prev_w, zacc - prev_z);
      prev_w = wk;
      prev_z = zacc;
    }
    double len_p = s.warp(x1) * delta;  // parallel circle over delta in x2

    Sym2 g = s.metric_at({x1, 0.0});
    CHECK(len_m / delta == doctest::Approx(std::sqrt(g.a11)).epsilon(1e-6));
    CHECK(len_p / delta == doctest::Approx(std::sqrt(g.a22)).epsilon(1e-12));
  }
}

TEST_CASE("christoffel symbols: flat, equator, and the quarter-latitude value") {
  SurfaceModel t = SurfaceModel::flat_torus(Mat2::identity());
  Christoffel c0 = t.christoffel_at({0.3, 0.4});
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(c0.c[k][i][j] == 0.0);

  SurfaceModel s = SurfaceModel::round_sphere(1.0);
  CHECK(s.christoffel_at({kPi / 2.0, 1.0}).c[1][0][1] == doctest::Approx(0.0));
  // d theta^2 + sin^2 theta d phi^2 gives Gamma^theta_{phi phi} = -sin cos
  CHECK(s.christoffel_at({kPi / 4.0, 1.0}).c[0][1][1] ==
        doctest::Approx(-std::sin(kPi / 4) * std::cos(kPi / 4)).epsilon(1e-14));
  CHECK(s.christoffel_at({kPi / 4.0, 1.0}).c[0][1][1] == doctest::Approx(-0.5));
}

TEST_CASE("christoffel symbols are metric compatible to 1e-10") {
  CHECK(metric_compat_worst(SurfaceModel::flat_torus(Mat2{{{1.2, 0.3}, {0.1, 0.9}}}), 0.0, 1.0,
                            1000, 1u) <= 1e-10);
  CHECK(metric_compat_worst(SurfaceModel::round_sphere(1.0), 0.4, kPi - 0.4, 1000, 2u) <=
        1e-10);
  CHECK(metric_compat_worst(SurfaceModel::round_sphere(2.5), 0.4, kPi - 0.4, 1000, 3u) <=
        1e-10);
  CHECK(metric_compat_worst(SurfaceModel::warped_sphere(WarpFamily::Bulge, 0.15), 0.4,
                            kPi - 0.4, 1000, 4u) <= 1e-10);
}

TEST_CASE("curvature values and the sin-warp consistency case") {
  CHECK(SurfaceModel::flat_torus(Mat2::identity()).curvature_at({0.5, 0.5}) == 0.0);
  SurfaceModel s = SurfaceModel::round_sphere(3.0);
  CHECK(s.curvature_at({1.0, 2.0}) == doctest::Approx(3.0));

  SurfaceModel w = SurfaceModel::warped_sphere(WarpFamily::Sin);
  SurfaceModel r = SurfaceModel::round_sphere(1.0);
  for (double x1 : {0.3, 0.9, 1.7, 2.6}) {
    CHECK(w.curvature_at({x1, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    Sym2 gw = w.metric_at({x1, 1.0}), gr = r.metric_at({x1, 1.0});
    CHECK(std::abs(gw.a11 - gr.a11) <= 1e-12);
    CHECK(std::abs(gw.a22 - gr.a22) <= 1e-12);
    CHECK(std::abs(w.christoffel_at({x1, 0.0}).c[0][1][1] -
                   r.christoffel_at({x1, 0.0}).c[0][1][1]) <= 1e-12);
  }
}

TEST_CASE("curvature agrees with the finite-difference curvature at second order") {
  // halving the stencil reduces the residual by a factor in [3.5, 4.5]
  struct Probe {
    SurfaceModel s;
    ChartCoords p;
  };
  std::vector<Probe> probes = {
      {SurfaceModel::round_sphere(1.0), {1.1, 0.7}},
      {SurfaceModel::round_sphere(2.0), {1.9, 0.2}},
      {SurfaceModel::warped_sphere(WarpFamily::Bulge, 0.15), {1.3, 2.0}},
  };
  for (const auto& pr : probes) {
    double exact = pr.s.curvature_at(pr.p);
    double r1 = std::abs(brioschi_analytic(pr.s, pr.p, 2e-2) - exact);
    double r2 = std::abs(brioschi_analytic(pr.s, pr.p, 1e-2) - exact);
    double ratio = r1 / r2;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
  }
}

TEST_CASE("curvature bounds per kind, warped bounds against dense sampling") {
  auto tb = SurfaceModel::flat_torus(Mat2::identity()).curvature_bounds();
  CHECK(tb.min == 0.0);
  CHECK(tb.sup == 0.0);
  auto rb = SurfaceModel::round_sphere(1.0).curvature_bounds();
  CHECK(rb.min == doctest::Approx(1.0));
  CHECK(rb.sup == doctest::Approx(1.0));

  SurfaceModel w = SurfaceModel::warped_sphere(WarpFamily::Bulge, 0.2);
  auto wb = w.curvature_bounds();
  // independent oracle: finite-difference second derivative of the profile
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < 4096; ++i) {
    double x = (i + 0.5) * kPi / 4096;
    double h = 1e-5;
    double wdd = (w.warp(x + h) - 2.0 * w.warp(x) + w.warp(x - h)) / (h * h);
    double sig = -wdd / w.warp(x);
    lo = std::min(lo, sig);
    hi = std::max(hi, sig);
  }
  CHECK(wb.min == doctest::Approx(lo).epsilon(1e-5));
  CHECK(wb.sup == doctest::Approx(hi).epsilon(1e-5));
  CHECK(wb.min <= wb.sup);
  // a = 0.2 dips below zero at the poles (limit 1 - 6a)
  CHECK(wb.min < 0.0);
}

TEST_CASE("tangent projection kills the normal component") {
  SurfaceModel s = SurfaceModel::round_sphere(1.0);
  Vec3 q{0.0, 0.0, 1.0};
  Vec3 p1 = s.tangent_project(q, {0.0, 0.0, 5.0});
  CHECK(norm(p1) <= 1e-15);
  Vec3 p2 = s.tangent_project(q, {1.0, 0.0, 0.0});
  CHECK(p2.x == doctest::Approx(1.0));
  CHECK(std::abs(p2.z) <= 1e-15);
  Vec3 p3 = s.tangent_project(q, {1.0, 0.0, 2.0});
  CHECK(p3.x == doctest::Approx(1.0));
  CHECK(p3.y == doctest::Approx(0.0));
  CHECK(std::abs(p3.z) <= 1e-15);

  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Vec3 raw{u(rng), u(rng), u(rng)};
    Vec3 qq = s.renormalize(raw + Vec3{0.1, 0.2, 1.1});
    Vec3 v{u(rng), u(rng), u(rng)};
    CHECK(std::abs(dot(s.tangent_project(qq, v), normalized(qq))) <= 1e-12);
  }
}

TEST_CASE("embedding round trip and renormalization") {
  SurfaceModel s = SurfaceModel::round_sphere(4.0);  // radius 1/2
  ChartCoords p{1.1, 2.3};
  Vec3 q = s.embed(p);
  CHECK(norm(q) == doctest::Approx(0.5).epsilon(1e-13));
  ChartCoords back = s.chart_of(q);
  CHECK(back.x1 == doctest::Approx(p.x1));
  CHECK(back.x2 == doctest::Approx(p.x2));
  Vec3 drifted = 1.013 * q;
  CHECK(norm(s.renormalize(drifted)) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("pole guard rejects chart evaluation inside the band") {
  SurfaceModel s = SurfaceModel::round_sphere(1.0).with_pole_guard(0.05);
  CHECK_THROWS_AS(s.metric_at({0.01, 0.0}), PoleProximityError);
  CHECK_THROWS_AS(s.christoffel_at({kPi - 0.001, 0.0}), PoleProximityError);
  CHECK_THROWS_AS(s.curvature_at({0.049, 0.0}), PoleProximityError);
  CHECK_NOTHROW(s.metric_at({0.05, 0.0}));  // the boundary itself is usable
  CHECK_NOTHROW(s.metric_at({1.0, 0.0}));
}

TEST_CASE("lattice reduction and shortest vector") {
  SurfaceModel t = SurfaceModel::flat_torus(Mat2::identity());
  Vec2 r = t.reduce_chart({1.25, -0.5});
  CHECK(r.x == doctest::Approx(0.25));
  CHECK(r.y == doctest::Approx(0.5));
  CHECK(t.shortest_lattice_vector() == doctest::Approx(1.0));

  Mat2 lat{{{2.0, 0.0}, {0.0, 1.0}}};
  CHECK(SurfaceModel::flat_torus(lat).shortest_lattice_vector() == doctest::Approx(1.0));
}
