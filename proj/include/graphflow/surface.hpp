#pragma once

#include "graphflow/linalg.hpp"

#include <string>

namespace graphflow {

enum class SurfaceKind { FlatTorus, RoundSphere, WarpedSphere };

// Built-in warp profiles for surfaces of revolution dx1^2 + w(x1)^2 dx2^2.
// Sin is the round unit sphere; Bulge is w = sin(x1) * (1 + a sin^2(x1)).
enum class WarpFamily { Sin, Bulge };

// Point of a parametric chart. Torus charts use lattice coordinates reduced
// into [0,1)^2; spherical charts use colatitude x1 in (0, pi) and longitude
// x2 in [0, 2*pi).
struct ChartCoords {
  double x1 = 0.0, x2 = 0.0;
};

struct Christoffel {
  // c[k][i][j] = Gamma^k_{ij}, symmetric in (i, j).
  double c[2][2][2] = {};
};

struct CurvatureBounds {
  double min = 0.0, sup = 0.0;
};

// A parametric Riemann surface with exact metric, Christoffel and curvature
// evaluation. Immutable after construction; all methods are pure.
class SurfaceModel {
 public:
  SurfaceModel() = default;  // unit flat torus

  static SurfaceModel flat_torus(const Mat2& lattice);
  static SurfaceModel round_sphere(double kappa);
  static SurfaceModel warped_sphere(WarpFamily family, double a = 0.0);

  SurfaceKind kind() const { return kind_; }
  bool is_spherical() const { return kind_ != SurfaceKind::FlatTorus; }
  std::string kind_name() const;

  // Chart geometry. Spherical charts raise PoleProximityError strictly inside
  // the guard band (x1 < guard or x1 > pi - guard).
  Sym2 metric_at(ChartCoords p) const;
  Christoffel christoffel_at(ChartCoords p) const;
  double curvature_at(ChartCoords p) const;
  CurvatureBounds curvature_bounds() const { return bounds_; }

  // Pole guard width in radians; quantities at closer points must come from
  // ghost-row stencils, never direct chart evaluation. Returns a copy so the
  // model itself stays immutable.
  double pole_guard() const { return pole_guard_; }
  SurfaceModel with_pole_guard(double guard) const;

  // --- embedded representation (spherical kinds) ---
  // RoundSphere values live on the radius-R sphere in R^3 (R = 1/sqrt(kappa),
  // isometric). WarpedSphere values are carried on the unit sphere via the
  // shared (x1, x2) chart; its metric is applied in-chart, since profiles
  // with max |w'| > 1 admit no isometric surface of revolution.
  double embedding_radius() const;
  Vec3 embed(ChartCoords p) const;
  ChartCoords chart_of(Vec3 q) const;
  // Component of v orthogonal to the embedding normal at q.
  Vec3 tangent_project(Vec3 q, Vec3 v) const;
  // Snap q back onto the embedded sphere.
  Vec3 renormalize(Vec3 q) const;

  // --- torus helpers ---
  const Mat2& lattice() const { return lattice_; }
  Sym2 lattice_gram() const { return gram_; }
  // Length of the shortest nonzero lattice vector; displacements beyond half
  // of it have no unique nearest lift.
  double shortest_lattice_vector() const { return shortest_; }
  // Torus diameter (distance to the far corner of the half cell); reduced
  // displacements beyond half of it signal under-resolution.
  double torus_diameter() const;
  // Reduce lattice coordinates into the fundamental domain [0,1)^2.
  Vec2 reduce_chart(Vec2 x) const;

  // --- warp profile (WarpedSphere) ---
  double warp(double x1) const;
  double warp_d(double x1) const;
  double warp_dd(double x1) const;
  double warp_param() const { return warp_a_; }
  WarpFamily warp_family() const { return family_; }

  double kappa() const { return kappa_; }

 private:
  void check_pole(double x1) const;

  SurfaceKind kind_ = SurfaceKind::FlatTorus;
  Mat2 lattice_ = Mat2::identity();
  Sym2 gram_ = Sym2::identity();
  double shortest_ = 1.0;
  double kappa_ = 1.0;
  WarpFamily family_ = WarpFamily::Sin;
  double warp_a_ = 0.0;
  double pole_guard_ = 1e-9;
  CurvatureBounds bounds_;
};

// Gauss curvature of a chart metric from a 3x3 stencil of metric samples
// (spacings h1, h2), by the determinant formula on E, F, G and their central
// second-order differences. g[di+1][dj+1] is the sample at offset (di, dj).
double brioschi_from_stencil(const Sym2 g[3][3], double h1, double h2);

}  // namespace graphflow
