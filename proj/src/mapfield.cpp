#include "graphflow/mapfield.hpp"

#include "graphflow/errors.hpp"
#include "graphflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace graphflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

// gM-unit positively oriented complement of a gM-unit vector: rot90(gM v) is
// gM-orthogonal to v and cross(v, rot90(gM v)) = v^T gM v > 0.
Vec2 oriented_complement(const Sym2& gM, Vec2 v) {
  Vec2 gv = gM * v;
  Vec2 w{-gv.y, gv.x};
  double n = std::sqrt(quad(gM, w, w));
  return (1.0 / n) * w;
}

Vec2 metric_normalized(const Sym2& g, Vec2 v) {
  double n = std::sqrt(quad(g, v, v));
  return (1.0 / n) * v;
}

// Deterministic sign fix for an eigenvector: largest component positive.
Vec2 canonical_sign(Vec2 v) {
  double lead = std::abs(v.x) >= std::abs(v.y) ? v.x : v.y;
  return lead < 0.0 ? -1.0 * v : v;
}
}  // namespace

double RotSymShape::h(double x1) const {
  return d * x1 + a * std::sin(x1) + c * std::sin(2.0 * x1);
}
double RotSymShape::dh(double x1) const {
  return d + a * std::cos(x1) + 2.0 * c * std::cos(2.0 * x1);
}
double RotSymShape::ddh(double x1) const {
  return -a * std::sin(x1) - 4.0 * c * std::sin(2.0 * x1);
}

TargetFrame target_frame_at(const SurfaceModel& target, const Vec3& value) {
  TargetFrame f;
  if (target.kind() == SurfaceKind::FlatTorus) {
    Sym2 gram = target.lattice_gram();
    Vec2 b1 = metric_normalized(gram, {1.0, 0.0});
    Vec2 b2 = oriented_complement(gram, b1);
    f.b1 = lift3(b1);
    f.b2 = lift3(b2);
    return f;
  }
  Vec3 n = normalized(value);
  if (target.kind() == SurfaceKind::WarpedSphere) {
    double sin_th = std::sqrt(std::max(0.0, 1.0 - n.z * n.z));
    if (sin_th > 1e-8) {
      double cos_th = n.z;
      double cphi = n.x / sin_th, sphi = n.y / sin_th;
      Vec3 e_th{cos_th * cphi, cos_th * sphi, -sin_th};
      Vec3 e_phi{-sphi, cphi, 0.0};
      double w = target.warp(std::acos(std::clamp(n.z, -1.0, 1.0)));
      f.b1 = e_th;
      f.b2 = (sin_th / w) * e_phi;
      f.normal = n;
      return f;
    }
    // At the carrier pole w/sin -> w'(0) = 1: the metric is Euclidean there
    // and the round-style frame below is exact.
  }
  double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  Vec3 axis = (ax <= ay && ax <= az) ? Vec3{1, 0, 0} : (ay <= az ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  Vec3 t1 = normalized(axis - dot(axis, n) * n);
  f.b1 = t1;
  f.b2 = cross(n, t1);
  f.normal = n;
  return f;
}

double target_dot(const SurfaceModel& target, const Vec3& value, const Vec3& u, const Vec3& v) {
  switch (target.kind()) {
    case SurfaceKind::FlatTorus:
      return quad(target.lattice_gram(), xy(u), xy(v));
    case SurfaceKind::RoundSphere:
      return dot(u, v);
    case SurfaceKind::WarpedSphere: {
      Vec3 n = normalized(value);
      double sin_th = std::sqrt(std::max(0.0, 1.0 - n.z * n.z));
      if (sin_th <= 1e-8) return dot(u, v);
      double cphi = n.x / sin_th, sphi = n.y / sin_th;
      Vec3 e_th{n.z * cphi, n.z * sphi, -sin_th};
      Vec3 e_phi{-sphi, cphi, 0.0};
      double w = target.warp(std::acos(std::clamp(n.z, -1.0, 1.0)));
      double s = (w / sin_th) * (w / sin_th);
      return dot(u, e_th) * dot(v, e_th) + s * dot(u, e_phi) * dot(v, e_phi);
    }
  }
  return 0.0;
}

namespace {
Vec2 nearest_lattice_residual(const Sym2& gram, Vec2 d0) {
  // componentwise rounding centers the search; the 3x3 scan around it picks
  // the gram-nearest representative for skew lattices
  Vec2 centered{d0.x - std::round(d0.x), d0.y - std::round(d0.y)};
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_d = centered;
  for (int k1 = -1; k1 <= 1; ++k1) {
    for (int k2 = -1; k2 <= 1; ++k2) {
      Vec2 d{centered.x + k1, centered.y + k2};
      double len2 = quad(gram, d, d);
      if (len2 < best) {
        best = len2;
        best_d = d;
      }
    }
  }
  return best_d;
}

Vec2 checked_residual(const SurfaceModel& target, Vec2 d0) {
  Sym2 gram = target.lattice_gram();
  Vec2 d = nearest_lattice_residual(gram, d0);
  double len = std::sqrt(quad(gram, d, d));
  double limit = 0.5 * target.torus_diameter();
  if (len > limit * (1.0 + 1e-12)) {
    throw LiftAmbiguityError("torus displacement " + std::to_string(len) +
                             " exceeds half the torus diameter " + std::to_string(limit) +
                             "; the grid does not resolve the map");
  }
  return d;
}
}  // namespace

Vec3 target_displacement(const SurfaceModel& target, const Vec3& center, const Vec3& neighbor) {
  if (target.kind() != SurfaceKind::FlatTorus) return neighbor - center;
  return lift3(checked_residual(target, xy(neighbor) - xy(center)));
}

Vec3 stencil_lift(const MapState& state, const Vec3& center, const Vec3& neighbor, Vec2 dx,
                  Vec2 domain_wrap) {
  if (state.target.kind() != SurfaceKind::FlatTorus) return neighbor;
  Vec2 predicted = state.torus_twist * dx;
  Vec2 adjusted = xy(neighbor) + state.torus_twist * domain_wrap;
  Vec2 residual = checked_residual(state.target, adjusted - xy(center) - predicted);
  return center + lift3(predicted + residual);
}

// domain periods crossed by a torus-domain stencil index (|offset| <= 2)
static double wrap_count(int idx, int n) { return idx < 0 ? -1.0 : (idx >= n ? 1.0 : 0.0); }

Vec2 domain_wrap_of(const GridSpec& grid, int i, int j) {
  if (grid.polar) return {0.0, 0.0};
  return {wrap_count(i, grid.n1), wrap_count(j, grid.n2)};
}

double target_distance(const SurfaceModel& target, const Vec3& a, const Vec3& b) {
  if (target.kind() == SurfaceKind::FlatTorus) {
    Sym2 gram = target.lattice_gram();
    Vec2 d0 = xy(b) - xy(a);
    d0 = {d0.x - std::round(d0.x), d0.y - std::round(d0.y)};
    double best = std::numeric_limits<double>::infinity();
    for (int k1 = -1; k1 <= 1; ++k1)
      for (int k2 = -1; k2 <= 1; ++k2) {
        Vec2 d{d0.x + k1, d0.y + k2};
        best = std::min(best, quad(gram, d, d));
      }
    return std::sqrt(best);
  }
  // chord form: well conditioned near coincident points, exact zero for
  // identical values (acos of a dot product is not)
  double r = target.embedding_radius();
  double half_chord = 0.5 * norm(a - b) / r;
  return 2.0 * r * std::asin(std::clamp(half_chord, 0.0, 1.0));
}

Differential differential_at(const MapState& state, int i, int j, int stencil_order) {
  const GridSpec& g = state.grid;
  const SurfaceModel& tgt = state.target;
  const Vec3 center = state.values[g.index(i, j)];

  auto lifted = [&](int di, int dj) {
    const Vec3& raw = state.values[g.resolve(i + di, j + dj).index];
    return stencil_lift(state, center, raw, {di * g.h1, dj * g.h2},
                        domain_wrap_of(g, i + di, j + dj));
  };

  Vec3 d1, d2;
  if (stencil_order == 4) {
    d1 = (1.0 / (12.0 * g.h1)) *
         (lifted(-2, 0) - lifted(2, 0) + 8.0 * (lifted(1, 0) - lifted(-1, 0)));
    d2 = (1.0 / (12.0 * g.h2)) *
         (lifted(0, -2) - lifted(0, 2) + 8.0 * (lifted(0, 1) - lifted(0, -1)));
  } else {
    d1 = (1.0 / (2.0 * g.h1)) * (lifted(1, 0) - lifted(-1, 0));
    d2 = (1.0 / (2.0 * g.h2)) * (lifted(0, 1) - lifted(0, -1));
  }

  Differential out;
  out.t1 = tgt.tangent_project(center, d1);
  out.t2 = tgt.tangent_project(center, d2);
  out.frame = target_frame_at(tgt, center);
  out.in_frame.m[0][0] = target_dot(tgt, center, out.t1, out.frame.b1);
  out.in_frame.m[0][1] = target_dot(tgt, center, out.t2, out.frame.b1);
  out.in_frame.m[1][0] = target_dot(tgt, center, out.t1, out.frame.b2);
  out.in_frame.m[1][1] = target_dot(tgt, center, out.t2, out.frame.b2);
  return out;
}

SingularData singular_decomposition(const Mat2& df, const Sym2& gM, const Sym2& gN) {
  SingularData sd;
  const Sym2 S = pullback(df, gN);  // f* gN on domain chart vectors

  // Eigenvalues of S relative to gM: k^2 det(gM) - k b + det(S) = 0.
  const double a = gM.det();
  const double b = S.a11 * gM.a22 + S.a22 * gM.a11 - 2.0 * S.a12 * gM.a12;
  const double c = S.det();
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) disc = 0.0;
  const double kmax = std::max(0.0, (b + std::sqrt(disc)) / (2.0 * a));
  const double kmin = kmax > 0.0 ? std::max(0.0, c / (a * kmax)) : 0.0;

  sd.lambda = std::sqrt(kmin);
  sd.mu = std::sqrt(kmax);

  // The snap to chart-axis frames happens only at genuine degeneracy: for a
  // merely near-tied spectrum the computed eigenvector (deterministic, if
  // noisy) keeps the off-diagonal pullback at rounding level, which the
  // df-paired beta construction below turns into exactly graph-normal
  // adapted frames. The broader flag is informational.
  const bool tie = (kmax - kmin) <= 1e-12 * (1.0 + kmax);
  const bool rank0 = sd.mu <= 1e-12;
  const bool rank1 = sd.lambda <= 1e-9 * (1.0 + sd.mu);
  sd.degenerate = (kmax - kmin) <= 3e-5 * (1.0 + kmax) || rank1;

  if (tie) {
    sd.alpha1 = metric_normalized(gM, {1.0, 0.0});
  } else {
    // Row of (S - kmin gM) with the larger norm gives the kmin eigenvector.
    Vec2 r1{S.a11 - kmin * gM.a11, S.a12 - kmin * gM.a12};
    Vec2 r2{S.a12 - kmin * gM.a12, S.a22 - kmin * gM.a22};
    Vec2 r = dot(r1, r1) >= dot(r2, r2) ? r1 : r2;
    sd.alpha1 = metric_normalized(gM, canonical_sign({-r.y, r.x}));
  }
  sd.alpha2 = oriented_complement(gM, sd.alpha1);

  const double det_df = df.det();
  sd.orientation_sign = det_df > 0.0 ? 1 : (det_df < 0.0 ? -1 : 1);

  // beta paired with df directly: df(alpha_a) = |df(alpha_a)| beta_a holds by
  // construction, so the adapted normal legs built from (lambda_a, alpha_a,
  // beta_a) are graph-normal to rounding even across near-ties.
  Vec2 img1 = df * sd.alpha1;
  Vec2 img2 = df * sd.alpha2;
  if (rank0) {
    sd.beta1 = metric_normalized(gN, {1.0, 0.0});
    sd.beta2 = oriented_complement(gN, sd.beta1);
    return sd;
  }
  sd.beta2 = metric_normalized(gN, img2);
  if (rank1) {
    // gN-unit complement of beta2 with (beta1, beta2) positively oriented.
    Vec2 gb = gN * sd.beta2;
    sd.beta1 = metric_normalized(gN, {gb.y, -gb.x});
  } else {
    sd.beta1 = metric_normalized(gN, img1);
    if (sd.lambda <= 1e-5 * (1.0 + sd.mu)) {
      // nearly rank deficient: restore orthogonality, the pairing residual
      // this introduces is bounded by lambda times the correction
      double c12 = quad(gN, sd.beta1, sd.beta2);
      sd.beta1 = metric_normalized(gN, sd.beta1 - c12 * sd.beta2);
    }
  }
  return sd;
}

JacobianQuantities jacobian_quantities(const SingularData& sd) {
  JacobianQuantities q;
  const double l = sd.lambda, m = sd.mu;
  q.u1 = 1.0 / std::sqrt((1.0 + l * l) * (1.0 + m * m));
  q.u2 = sd.orientation_sign * l * m * q.u1;
  q.phi = q.u1 - q.u2;
  q.theta = q.u1 + q.u2;
  q.rho = q.phi * q.theta;
  q.jac = q.u2 / q.u1;
  return q;
}

AreaClass area_class(const JacobianQuantities& q, double tol) {
  double gap = q.u1 - std::abs(q.u2);
  if (gap > tol) return AreaClass::StrictlyDecreasing;
  if (gap >= -tol) return AreaClass::Preserving;
  return AreaClass::Increasing;
}

double area_functional(const MapState& state) {
  const GridSpec& g = state.grid;
  std::vector<double> partial(worker_count(), 0.0);
  parallel_chunks(g.n1, [&](int chunk, int begin, int end) {
    double acc = 0.0;
    for (int i = begin; i < end; ++i) {
      Sym2 gM = state.domain.metric_at(g.point(i, 0));
      for (int j = 0; j < g.n2; ++j) {
        Differential df = differential_at(state, i, j);
        Sym2 ind = gM + pullback(df.in_frame, Sym2::identity());
        acc += std::sqrt(ind.det());
      }
    }
    partial[chunk] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total * g.h1 * g.h2;
}

FieldSummary field_quantities(const MapState& state, std::vector<JacobianQuantities>* out,
                              double u1_floor, int stencil_order) {
  const GridSpec& g = state.grid;
  if (out) out->assign(g.size(), {});
  const int workers = worker_count();
  std::vector<FieldSummary> partial(workers);
  parallel_chunks(g.n1, [&](int chunk, int begin, int end) {
    FieldSummary s;
    for (int i = begin; i < end; ++i) {
      Sym2 gM = state.domain.metric_at(g.point(i, 0));
      for (int j = 0; j < g.n2; ++j) {
        Differential df = differential_at(state, i, j, stencil_order);
        SingularData sd = singular_decomposition(df.in_frame, gM, Sym2::identity());
        JacobianQuantities q = jacobian_quantities(sd);
        if (out) (*out)[g.index(i, j)] = q;
        s.min_rho = std::min(s.min_rho, q.rho);
        s.min_gap = std::min(s.min_gap, q.u1 - std::abs(q.u2));
        s.min_u1 = std::min(s.min_u1, q.u1);
      }
    }
    partial[chunk] = s;
  });
  FieldSummary s;
  for (const auto& p : partial) {
    s.min_rho = std::min(s.min_rho, p.min_rho);
    s.min_gap = std::min(s.min_gap, p.min_gap);
    s.min_u1 = std::min(s.min_u1, p.min_u1);
  }
  if (s.min_u1 <= u1_floor) {
    throw GraphicalityLossError("min u1 = " + std::to_string(s.min_u1) +
                                " at or below the graphicality floor " +
                                std::to_string(u1_floor));
  }
  return s;
}

namespace {
MapState base_state(const SurfaceModel& domain, const SurfaceModel& target, const GridSpec& grid) {
  MapState s;
  s.domain = domain.is_spherical() ? domain.with_pole_guard(0.5 * grid.h1) : domain;
  s.target = target;
  s.grid = grid;
  s.values.assign(grid.size(), Vec3{});
  return s;
}

void require_kinds(const SurfaceModel& domain, const SurfaceModel& target, bool spherical,
                   const char* family) {
  bool dom_ok = domain.is_spherical() == spherical;
  bool tgt_ok = target.is_spherical() == spherical;
  if (!dom_ok || !tgt_ok) {
    throw ConfigRejectedError(std::string("initial map family '") + family +
                              "' requires " + (spherical ? "spherical" : "torus") +
                              " domain and target");
  }
}
}  // namespace

MapState make_constant_map(const SurfaceModel& domain, const SurfaceModel& target,
                           const GridSpec& grid, ChartCoords target_point) {
  MapState s = base_state(domain, target, grid);
  Vec3 v;
  if (target.kind() == SurfaceKind::FlatTorus) {
    v = lift3(target.reduce_chart({target_point.x1, target_point.x2}));
  } else {
    v = target.embed(target_point);
  }
  for (auto& val : s.values) val = v;
  return s;
}

MapState make_torus_map(const SurfaceModel& domain, const SurfaceModel& target,
                        const GridSpec& grid, const Mat2& linear,
                        const std::vector<FourierMode>& modes) {
  require_kinds(domain, target, false, "torus");
  MapState s = base_state(domain, target, grid);
  s.torus_twist = linear;
  for (int i = 0; i < grid.n1; ++i) {
    for (int j = 0; j < grid.n2; ++j) {
      Vec2 x{grid.x1(i), grid.x2(j)};
      Vec2 y = linear * x;
      for (const auto& m : modes) {
        double ph = 2.0 * kPi * (m.k1 * x.x + m.k2 * x.y) + m.phase;
        y = y + (m.amplitude * std::sin(ph)) * m.direction;
      }
      s.values[grid.index(i, j)] = lift3(target.reduce_chart(y));
    }
  }
  return s;
}

MapState make_rotsym_map(const SurfaceModel& domain, const SurfaceModel& target,
                         const GridSpec& grid, int d, double a, double c) {
  require_kinds(domain, target, true, "rotsym");
  if (d != 0 && d != 1) throw ConfigRejectedError("rotsym profile needs d in {0, 1}");
  RotSymShape shape{d, a, c};
  for (int k = 0; k <= 4096; ++k) {
    double h = shape.h(k * kPi / 4096);
    if (h < -1e-12 || h > kPi + 1e-12) {
      throw ConfigRejectedError("rotsym profile leaves the colatitude range [0, pi]");
    }
  }
  MapState s = base_state(domain, target, grid);
  for (int i = 0; i < grid.n1; ++i) {
    double h = shape.h(grid.x1(i));
    for (int j = 0; j < grid.n2; ++j) {
      s.values[grid.index(i, j)] = target.embed({h, grid.x2(j)});
    }
  }
  return s;
}

MapState make_mobius_map(const SurfaceModel& domain, const SurfaceModel& target,
                         const GridSpec& grid, double k) {
  require_kinds(domain, target, true, "mobius");
  if (!(k > 0.0)) throw ConfigRejectedError("mobius contraction factor must be positive");
  MapState s = base_state(domain, target, grid);
  for (int i = 0; i < grid.n1; ++i) {
    double h = 2.0 * std::atan(k * std::tan(0.5 * grid.x1(i)));
    for (int j = 0; j < grid.n2; ++j) {
      s.values[grid.index(i, j)] = target.embed({h, grid.x2(j)});
    }
  }
  return s;
}

MapState make_identity_map(const SurfaceModel& domain, const SurfaceModel& target,
                           const GridSpec& grid) {
  if (domain.is_spherical()) return make_rotsym_map(domain, target, grid, 1, 0.0, 0.0);
  return make_torus_map(domain, target, grid, Mat2::identity());
}

}  // namespace graphflow
