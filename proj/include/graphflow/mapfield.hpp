#pragma once

#include "graphflow/grid.hpp"
#include "graphflow/linalg.hpp"
#include "graphflow/surface.hpp"

#include <vector>

namespace graphflow {

// Discretized map f: M -> N on a structured chart grid. Values are stored per
// grid point: sphere-kind targets as embedded 3-vectors (on the radius-R
// sphere, or the unit carrier sphere for warped targets), torus targets as
// lattice chart coordinates in the xy components.
//
// torus_twist is the linear part of torus -> torus maps (the covering-space
// slope). Maps whose linear part does not preserve the lattice (for example
// the 0.8 Id contraction) are discontinuous as stored chart values exactly at
// the domain seam, by a jump that is not a lattice vector; stencils therefore
// lift each neighbor relative to the twist prediction twist * dx and only the
// periodic remainder goes through the nearest-lattice-representative rule.
// The flow preserves the twist (its velocity is periodic).
struct MapState {
  SurfaceModel domain;
  SurfaceModel target;
  GridSpec grid;
  std::vector<Vec3> values;
  Mat2 torus_twist;  // zero for genuinely periodic data (constant maps)
  double t = 0.0;

  const Vec3& value(int i, int j) const { return values[grid.resolve(i, j).index]; }
};

// Orthonormal (w.r.t. g_N), positively oriented tangent frame at a target
// point. Sphere kinds: b1, b2 are tangent 3-vectors and `normal` the outward
// unit normal. Torus: b1, b2 hold chart 2-vectors in xy and `normal` is zero.
struct TargetFrame {
  Vec3 b1, b2, normal;
};

// df at a grid point, expressed with domain chart columns and target-frame
// rows (so the target metric in these components is the identity).
struct Differential {
  Mat2 in_frame;     // in_frame.m[a][i] = component of df(d/dx^i) on frame leg a
  TargetFrame frame;
  Vec3 t1, t2;       // df(d/dx^i) as raw target vectors (embedded / chart)
};

// Singular decomposition of df relative to (g_M, g_N): df(alpha_a) =
// lambda_a beta_a with 0 <= lambda <= mu, alpha g_M-orthonormal positively
// oriented, beta g_N-orthonormal. Ties and rank drops switch to deterministic
// frames and set `degenerate`.
struct SingularData {
  double lambda = 0.0, mu = 0.0;
  Vec2 alpha1, alpha2;
  Vec2 beta1, beta2;
  int orientation_sign = 1;  // sign of det df (+1 when rank deficient)
  bool degenerate = false;
};

struct JacobianQuantities {
  double u1 = 1.0;   // projection Jacobian to the domain factor, in (0, 1]
  double u2 = 0.0;   // projection Jacobian to the target factor, in [-1, 1]
  double phi = 1.0;  // u1 - u2
  double theta = 1.0;  // u1 + u2
  double rho = 1.0;    // phi * theta = u1^2 - u2^2
  double jac = 0.0;    // u2 / u1
};

enum class AreaClass { StrictlyDecreasing, Preserving, Increasing };

struct FieldSummary {
  double min_rho = 1.0;
  double min_gap = 1.0;  // min over the grid of u1 - |u2|
  double min_u1 = 1.0;
};

// Central finite-difference differential at a grid point. Torus targets are
// differenced through the nearest lift of every neighbor value relative to
// the center (LiftAmbiguityError if a displacement exceeds half the shortest
// lattice vector); sphere targets are differenced in the embedding and
// projected to the tangent plane at f(p). stencil_order is 2 or 4.
Differential differential_at(const MapState& state, int i, int j, int stencil_order = 2);

SingularData singular_decomposition(const Mat2& df, const Sym2& gM, const Sym2& gN);

JacobianQuantities jacobian_quantities(const SingularData& sd);

AreaClass area_class(const JacobianQuantities& q, double tol = 1e-12);

// Quadrature of sqrt((1+lambda^2)(1+mu^2)) * sqrt(det g_M): trapezoidal on
// periodic axes, latitude-weighted midpoint across sphere rows.
double area_functional(const MapState& state);

// Pointwise Jacobian quantities plus the monitored global minima. Raises
// GraphicalityLossError when min u1 <= u1_floor. `out`, when non-null,
// receives the per-point quantities in grid order.
FieldSummary field_quantities(const MapState& state,
                              std::vector<JacobianQuantities>* out = nullptr,
                              double u1_floor = 0.0, int stencil_order = 2);

// --- target-value helpers (kind-dispatched) ---

// Deterministic g_N-orthonormal oriented frame at a target value.
TargetFrame target_frame_at(const SurfaceModel& target, const Vec3& value);
// g_N inner product of two tangent vectors at `value`.
double target_dot(const SurfaceModel& target, const Vec3& value, const Vec3& u, const Vec3& v);
// Nearest-lift displacement from `center` to `neighbor` (torus kinds); plain
// difference otherwise. Raises LiftAmbiguityError when the reduced
// displacement exceeds half the torus diameter.
Vec3 target_displacement(const SurfaceModel& target, const Vec3& center, const Vec3& neighbor);
// Stencil neighbor at covering-space chart offset dx from the center, lifted
// next to the center. domain_wrap counts the domain periods crossed to reach
// the stored sample (torus domains only): the stored value then differs from
// the covering value by twist * domain_wrap plus a target-lattice vector, and
// only the latter goes through the nearest-representative rule.
Vec3 stencil_lift(const MapState& state, const Vec3& center, const Vec3& neighbor, Vec2 dx,
                  Vec2 domain_wrap);
// Domain periods crossed by the stencil index (i, j), possibly outside the
// stored range; zero on sphere grids.
Vec2 domain_wrap_of(const GridSpec& grid, int i, int j);
// Geodesic-equivalent distance used for image diameters.
double target_distance(const SurfaceModel& target, const Vec3& a, const Vec3& b);

// --- built-in initial map families ---

MapState make_constant_map(const SurfaceModel& domain, const SurfaceModel& target,
                           const GridSpec& grid, ChartCoords target_point);

struct FourierMode {
  int k1 = 0, k2 = 0;
  double amplitude = 0.0;
  double phase = 0.0;
  Vec2 direction{1.0, 0.0};
};

// Torus to torus: f(x) = A x + sum_m amp * sin(2 pi (k . x) + phase) * dir,
// reduced into the fundamental domain.
MapState make_torus_map(const SurfaceModel& domain, const SurfaceModel& target,
                        const GridSpec& grid, const Mat2& linear,
                        const std::vector<FourierMode>& modes = {});

// Sphere to sphere, rotationally symmetric: f(x1, x2) = (h(x1), x2) with
// h(x1) = d*x1 + a*sin(x1) + c*sin(2 x1), d in {0, 1}.
MapState make_rotsym_map(const SurfaceModel& domain, const SurfaceModel& target,
                         const GridSpec& grid, int d, double a, double c);

// Sphere to sphere Moebius-type contraction along meridians:
// h(x1) = 2 atan(k tan(x1 / 2)).
MapState make_mobius_map(const SurfaceModel& domain, const SurfaceModel& target,
                         const GridSpec& grid, double k);

MapState make_identity_map(const SurfaceModel& domain, const SurfaceModel& target,
                           const GridSpec& grid);

// Rotationally symmetric profile h evaluated with analytic derivatives.
struct RotSymShape {
  int d = 1;
  double a = 0.0, c = 0.0;
  double h(double x1) const;
  double dh(double x1) const;
  double ddh(double x1) const;
};

}  // namespace graphflow
