#include "graphflow/surface.hpp"

#include "graphflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace graphflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

double clamp01(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

SurfaceModel SurfaceModel::flat_torus(const Mat2& lattice) {
  if (lattice.det() <= 0.0) {
    throw ConfigRejectedError("flat torus lattice must be positively oriented (det > 0)");
  }
  SurfaceModel s;
  s.kind_ = SurfaceKind::FlatTorus;
  s.lattice_ = lattice;
  s.gram_ = pullback(lattice, Sym2::identity());
  double shortest = std::numeric_limits<double>::infinity();
  for (int k1 = -1; k1 <= 1; ++k1) {
    for (int k2 = -1; k2 <= 1; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      Vec2 k{double(k1), double(k2)};
      shortest = std::min(shortest, std::sqrt(quad(s.gram_, k, k)));
    }
  }
  s.shortest_ = shortest;
  s.bounds_ = {0.0, 0.0};
  return s;
}

SurfaceModel SurfaceModel::round_sphere(double kappa) {
  if (!(kappa > 0.0)) {
    throw ConfigRejectedError("round sphere curvature must be positive");
  }
  SurfaceModel s;
  s.kind_ = SurfaceKind::RoundSphere;
  s.kappa_ = kappa;
  s.bounds_ = {kappa, kappa};
  return s;
}

SurfaceModel SurfaceModel::warped_sphere(WarpFamily family, double a) {
  if (family == WarpFamily::Bulge && std::abs(a) > 0.2) {
    throw ConfigRejectedError("warped sphere bulge parameter must satisfy |a| <= 0.2");
  }
  SurfaceModel s;
  s.kind_ = SurfaceKind::WarpedSphere;
  s.family_ = family;
  s.warp_a_ = (family == WarpFamily::Sin) ? 0.0 : a;
  // Dense sample of -w''/w; exact at the sample points, the profile family is
  // analytic and slowly varying so 4096 midpoints pin the range.
  const int n = 4096;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) * kPi / n;
    double sigma = -s.warp_dd(x) / s.warp(x);
    lo = std::min(lo, sigma);
    hi = std::max(hi, sigma);
  }
  s.bounds_ = {lo, hi};
  return s;
}

std::string SurfaceModel::kind_name() const {
  switch (kind_) {
    case SurfaceKind::FlatTorus: return "flat_torus";
    case SurfaceKind::RoundSphere: return "round_sphere";
    case SurfaceKind::WarpedSphere: return "warped_sphere";
  }
  return "?";
}

SurfaceModel SurfaceModel::with_pole_guard(double guard) const {
  SurfaceModel s = *this;
  s.pole_guard_ = guard;
  return s;
}

void SurfaceModel::check_pole(double x1) const {
  // Grid rows sit exactly at the guard boundary; only the open band is fatal.
  const double tol = 1e-14;
  if (x1 < pole_guard_ - tol || x1 > kPi - pole_guard_ + tol) {
    throw PoleProximityError("chart evaluation inside the pole-guard band, x1 = " +
                             std::to_string(x1));
  }
}

double SurfaceModel::warp(double x1) const {
  double sn = std::sin(x1);
  return family_ == WarpFamily::Sin ? sn : sn * (1.0 + warp_a_ * sn * sn);
}

double SurfaceModel::warp_d(double x1) const {
  double sn = std::sin(x1), cs = std::cos(x1);
  return family_ == WarpFamily::Sin ? cs : cs * (1.0 + 3.0 * warp_a_ * sn * sn);
}

double SurfaceModel::warp_dd(double x1) const {
  double sn = std::sin(x1), cs = std::cos(x1);
  if (family_ == WarpFamily::Sin) return -sn;
  // d^2/dx^2 [sin + a sin^3] = -sin + 3a (2 sin cos^2 - sin^3)
  return -sn + 3.0 * warp_a_ * (2.0 * sn * cs * cs - sn * sn * sn);
}

Sym2 SurfaceModel::metric_at(ChartCoords p) const {
  switch (kind_) {
    case SurfaceKind::FlatTorus:
      return gram_;
    case SurfaceKind::RoundSphere: {
      check_pole(p.x1);
      double r2 = 1.0 / kappa_;
      double sn = std::sin(p.x1);
      return Sym2::diag(r2, r2 * sn * sn);
    }
    case SurfaceKind::WarpedSphere: {
      check_pole(p.x1);
      double w = warp(p.x1);
      return Sym2::diag(1.0, w * w);
    }
  }
  return Sym2::identity();
}

Christoffel SurfaceModel::christoffel_at(ChartCoords p) const {
  Christoffel g;
  switch (kind_) {
    case SurfaceKind::FlatTorus:
      return g;
    case SurfaceKind::RoundSphere: {
      check_pole(p.x1);
      double sn = std::sin(p.x1), cs = std::cos(p.x1);
      g.c[0][1][1] = -sn * cs;
      g.c[1][0][1] = g.c[1][1][0] = cs / sn;
      return g;
    }
    case SurfaceKind::WarpedSphere: {
      check_pole(p.x1);
      double w = warp(p.x1), wd = warp_d(p.x1);
      g.c[0][1][1] = -w * wd;
      g.c[1][0][1] = g.c[1][1][0] = wd / w;
      return g;
    }
  }
  return g;
}

double SurfaceModel::curvature_at(ChartCoords p) const {
  switch (kind_) {
    case SurfaceKind::FlatTorus:
      return 0.0;
    case SurfaceKind::RoundSphere:
      check_pole(p.x1);
      return kappa_;
    case SurfaceKind::WarpedSphere:
      check_pole(p.x1);
      return -warp_dd(p.x1) / warp(p.x1);
  }
  return 0.0;
}

double SurfaceModel::embedding_radius() const {
  return kind_ == SurfaceKind::RoundSphere ? 1.0 / std::sqrt(kappa_) : 1.0;
}

Vec3 SurfaceModel::embed(ChartCoords p) const {
  double r = embedding_radius();
  double sn = std::sin(p.x1);
  return {r * sn * std::cos(p.x2), r * sn * std::sin(p.x2), r * std::cos(p.x1)};
}

ChartCoords SurfaceModel::chart_of(Vec3 q) const {
  double r = norm(q);
  double x1 = std::acos(clamp01(q.z / r, -1.0, 1.0));
  double x2 = std::atan2(q.y, q.x);
  if (x2 < 0.0) x2 += 2.0 * kPi;
  return {x1, x2};
}

Vec3 SurfaceModel::tangent_project(Vec3 q, Vec3 v) const {
  if (kind_ == SurfaceKind::FlatTorus) return v;
  Vec3 n = normalized(q);
  return v - dot(v, n) * n;
}

Vec3 SurfaceModel::renormalize(Vec3 q) const {
  if (kind_ == SurfaceKind::FlatTorus) return q;
  return embedding_radius() * normalized(q);
}

double SurfaceModel::torus_diameter() const {
  Vec2 corner{0.5, 0.5};
  return std::sqrt(quad(gram_, corner, corner));
}

Vec2 SurfaceModel::reduce_chart(Vec2 x) const {
  double fx = x.x - std::floor(x.x);
  double fy = x.y - std::floor(x.y);
  if (fx >= 1.0) fx -= 1.0;
  if (fy >= 1.0) fy -= 1.0;
  return {fx, fy};
}

double brioschi_from_stencil(const Sym2 g[3][3], double h1, double h2) {
  auto E = [&](int di, int dj) { return g[di + 1][dj + 1].a11; };
  auto F = [&](int di, int dj) { return g[di + 1][dj + 1].a12; };
  auto G = [&](int di, int dj) { return g[di + 1][dj + 1].a22; };

  const double E0 = E(0, 0), F0 = F(0, 0), G0 = G(0, 0);
  const double Eu = (E(1, 0) - E(-1, 0)) / (2.0 * h1);
  const double Ev = (E(0, 1) - E(0, -1)) / (2.0 * h2);
  const double Gu = (G(1, 0) - G(-1, 0)) / (2.0 * h1);
  const double Gv = (G(0, 1) - G(0, -1)) / (2.0 * h2);
  const double Fu = (F(1, 0) - F(-1, 0)) / (2.0 * h1);
  const double Fv = (F(0, 1) - F(0, -1)) / (2.0 * h2);
  const double Evv = (E(0, 1) - 2.0 * E0 + E(0, -1)) / (h2 * h2);
  const double Guu = (G(1, 0) - 2.0 * G0 + G(-1, 0)) / (h1 * h1);
  const double Fuv = (F(1, 1) - F(1, -1) - F(-1, 1) + F(-1, -1)) / (4.0 * h1 * h2);

  const double m1[3][3] = {
      {-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev},
      {Fv - 0.5 * Gu, E0, F0},
      {0.5 * Gv, F0, G0}};
  const double m2[3][3] = {
      {0.0, 0.5 * Ev, 0.5 * Gu},
      {0.5 * Ev, E0, F0},
      {0.5 * Gu, F0, G0}};

  const double disc = E0 * G0 - F0 * F0;
  return (det3(m1) - det3(m2)) / (disc * disc);
}

}  // namespace graphflow
