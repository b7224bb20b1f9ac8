#include "graphflow/oracle.hpp"

#include "graphflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace graphflow {
namespace oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Own twist-aware nearest-lift, deliberately separate from the main pipeline:
// the covering-space slope predicts the displacement across both the step and
// any domain seam crossing, and only the periodic remainder is reduced to its
// nearest lattice representative.
Vec2 hodge_lift(const SurfaceModel& target, const Mat2& twist, Vec2 dx, Vec2 wrap,
                Vec2 center, Vec2 neighbor) {
  Sym2 gram = target.lattice_gram();
  Vec2 predicted = twist * dx;
  Vec2 d0 = neighbor + twist * wrap - center - predicted;
  Vec2 centered{d0.x - std::round(d0.x), d0.y - std::round(d0.y)};
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_d = centered;
  for (int k1 = -1; k1 <= 1; ++k1)
    for (int k2 = -1; k2 <= 1; ++k2) {
      Vec2 d{centered.x + k1, centered.y + k2};
      double l2 = quad(gram, d, d);
      if (l2 < best) {
        best = l2;
        best_d = d;
      }
    }
  return predicted + best_d;
}
}  // namespace

std::pair<double, double> u_via_hodge(const MapState& state, int i, int j) {
  const GridSpec& g = state.grid;
  const SurfaceModel& tgt = state.target;
  const Vec3 center = state.values[g.index(i, j)];
  const Sym2 gM = state.domain.metric_at(g.point(i, j));

  auto neighbor = [&](int di, int dj) { return state.values[g.resolve(i + di, j + dj).index]; };

  double det_pullback_form;  // f* (target area form) on (d_1, d_2)
  Sym2 S;                    // f* g_N on chart vectors

  if (tgt.kind() == SurfaceKind::FlatTorus) {
    Vec2 c = xy(center);
    const Mat2& tw = state.torus_twist;
    auto wrap1 = [&](int idx, int n) { return idx < 0 ? -1.0 : (idx >= n ? 1.0 : 0.0); };
    auto wraps = [&](int di, int dj) {
      return Vec2{wrap1(i + di, g.n1), wrap1(j + dj, g.n2)};
    };
    Vec2 d1 = (1.0 / (2.0 * g.h1)) *
              (hodge_lift(tgt, tw, {g.h1, 0.0}, wraps(1, 0), c, xy(neighbor(1, 0))) -
               hodge_lift(tgt, tw, {-g.h1, 0.0}, wraps(-1, 0), c, xy(neighbor(-1, 0))));
    Vec2 d2 = (1.0 / (2.0 * g.h2)) *
              (hodge_lift(tgt, tw, {0.0, g.h2}, wraps(0, 1), c, xy(neighbor(0, 1))) -
               hodge_lift(tgt, tw, {0.0, -g.h2}, wraps(0, -1), c, xy(neighbor(0, -1))));
    Sym2 gram = tgt.lattice_gram();
    S = {quad(gram, d1, d1), quad(gram, d1, d2), quad(gram, d2, d2)};
    det_pullback_form = (d1.x * d2.y - d1.y * d2.x) * std::sqrt(gram.det());
  } else {
    Vec3 d1 = (1.0 / (2.0 * g.h1)) * (neighbor(1, 0) - neighbor(-1, 0));
    Vec3 d2 = (1.0 / (2.0 * g.h2)) * (neighbor(0, 1) - neighbor(0, -1));
    Vec3 t1 = tgt.tangent_project(center, d1);
    Vec3 t2 = tgt.tangent_project(center, d2);
    Vec3 n = normalized(center);
    if (tgt.kind() == SurfaceKind::RoundSphere) {
      S = {dot(t1, t1), dot(t1, t2), dot(t2, t2)};
      det_pullback_form = dot(n, cross(t1, t2));
    } else {
      // warped metric on the unit carrier: decompose on (e_th, e_phi)
      double sin_th = std::sqrt(std::max(0.0, 1.0 - n.z * n.z));
      double th = std::acos(std::clamp(n.z, -1.0, 1.0));
      double ratio = sin_th > 1e-8 ? tgt.warp(th) / sin_th : 1.0;
      if (sin_th > 1e-8) {
        double cphi = n.x / sin_th, sphi = n.y / sin_th;
        Vec3 e_th{n.z * cphi, n.z * sphi, -sin_th};
        Vec3 e_phi{-sphi, cphi, 0.0};
        auto wdot = [&](Vec3 a, Vec3 b) {
          return dot(a, e_th) * dot(b, e_th) + ratio * ratio * dot(a, e_phi) * dot(b, e_phi);
        };
        S = {wdot(t1, t1), wdot(t1, t2), wdot(t2, t2)};
      } else {
        S = {dot(t1, t1), dot(t1, t2), dot(t2, t2)};
      }
      det_pullback_form = ratio * dot(n, cross(t1, t2));
    }
  }

  Sym2 ind = gM + S;
  double sq_g = std::sqrt(ind.det());
  return {std::sqrt(gM.det()) / sq_g, det_pullback_form / sq_g};
}

double RotSym1D::s(int i) const { return (i + 0.5) * kPi / n; }

double RotSym1D::ghosted(int i) const {
  if (i < 0) return -h[0];
  if (i >= n) return 2.0 * h_end - h[n - 1];
  return h[i];
}

RotSym1D make_rotsym_1d(const RotSymShape& shape, int n, double target_kappa) {
  double at0 = shape.h(0.0);
  double at_pi = shape.h(kPi);
  if (std::abs(at0) > 1e-8) {
    throw EndpointViolationError("profile must vanish at the north pole, h(0) = " +
                                 std::to_string(at0));
  }
  double h_end;
  if (std::abs(at_pi) <= 1e-8) {
    h_end = 0.0;
  } else if (std::abs(at_pi - kPi) <= 1e-8) {
    h_end = kPi;
  } else {
    throw EndpointViolationError("profile must send the south pole to a pole, h(pi) = " +
                                 std::to_string(at_pi));
  }
  RotSym1D st;
  st.n = n;
  st.target_kappa = target_kappa;
  st.h_end = h_end;
  st.h.resize(n);
  for (int i = 0; i < n; ++i) st.h[i] = shape.h(st.s(i));
  return st;
}

std::vector<double> rotsym_velocity(const RotSym1D& st) {
  const int n = st.n;
  const double ds = kPi / n;
  const double R2 = 1.0 / st.target_kappa;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    double s = st.s(i);
    double hm = st.ghosted(i - 1), h0 = st.h[i], hp = st.ghosted(i + 1);
    double dh = (hp - hm) / (2.0 * ds);
    double ddh = (hp - 2.0 * h0 + hm) / (ds * ds);
    double sin_s = std::sin(s), cos_s = std::cos(s);
    double sin_h = std::sin(h0), cos_h = std::cos(h0);
    double g1 = 1.0 + R2 * dh * dh;
    double g2 = sin_s * sin_s + R2 * sin_h * sin_h;
    v[i] = ddh / g1 + (sin_s * cos_s * dh - sin_h * cos_h) / g2;
  }
  return v;
}

void rotsym_step(RotSym1D& st, double dt, bool heun) {
  std::vector<double> v1 = rotsym_velocity(st);
  if (!heun) {
    for (int i = 0; i < st.n; ++i) st.h[i] += dt * v1[i];
    st.t += dt;
    return;
  }
  RotSym1D pred = st;
  for (int i = 0; i < st.n; ++i) pred.h[i] += dt * v1[i];
  std::vector<double> v2 = rotsym_velocity(pred);
  for (int i = 0; i < st.n; ++i) st.h[i] += 0.5 * dt * (v1[i] + v2[i]);
  st.t += dt;
}

double rotsym_advance(RotSym1D& st, double dt, double t_end, bool heun) {
  while (st.t < t_end - 1e-14) {
    double step_dt = std::min(dt, t_end - st.t);
    rotsym_step(st, step_dt, heun);
    for (double hv : st.h) {
      if (!std::isfinite(hv) || hv < -0.5 || hv > kPi + 0.5) {
        throw EndpointViolationError("reduced profile left the physical band at t = " +
                                     std::to_string(st.t));
      }
    }
  }
  std::vector<double> v = rotsym_velocity(st);
  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x));
  return sup;
}

RotSymDiag rotsym_diag(const RotSym1D& st, int i) {
  const double ds = kPi / st.n;
  double dh = (st.ghosted(i + 1) - st.ghosted(i - 1)) / (2.0 * ds);
  double R = 1.0 / std::sqrt(st.target_kappa);
  RotSymDiag d;
  double s1 = R * dh;
  double s2 = R * std::sin(st.h[i]) / std::sin(st.s(i));
  d.lambda = std::min(std::abs(s1), std::abs(s2));
  d.mu = std::max(std::abs(s1), std::abs(s2));
  d.u1 = 1.0 / std::sqrt((1.0 + s1 * s1) * (1.0 + s2 * s2));
  d.u2 = s1 * s2 * d.u1;
  return d;
}

RotSymPointData rotsym_exact(const RotSymShape& shape, double target_kappa, double s) {
  const double R = 1.0 / std::sqrt(target_kappa);
  RotSymPointData out;
  const double h = shape.h(s), dh = shape.dh(s), ddh = shape.ddh(s);
  const double sin_s = std::sin(s), cos_s = std::cos(s);
  const double sin_h = std::sin(h), cos_h = std::cos(h);

  const double s1 = R * dh;
  const double s2 = R * sin_h / sin_s;
  out.s1 = s1;
  out.s2 = s2;

  const double g1 = 1.0 + s1 * s1;                     // induced g_11
  const double g2 = sin_s * sin_s + R * R * sin_h * sin_h;  // induced g_22
  const double q2 = 1.0 + s2 * s2;                     // g_22 / gM_22

  out.u1 = 1.0 / std::sqrt(g1 * q2);
  out.u2 = s1 * s2 * out.u1;

  const double a3_11 = R * ddh / std::sqrt(g1);
  const double a3_22 = (s1 * sin_s * cos_s - R * sin_h * cos_h) / std::sqrt(g1);
  const double a4_12 = (R * dh * cos_h - s2 * cos_s) / std::sqrt(q2);

  out.normA2 = (a3_11 / g1) * (a3_11 / g1) + (a3_22 / g2) * (a3_22 / g2) +
               2.0 * (a4_12 * a4_12) / (g1 * g2);
  const double h3 = a3_11 / g1 + a3_22 / g2;
  out.normH2 = h3 * h3;

  const double t3_11 = a3_11 / g1;                   // adapted-frame components
  const double t3_22 = a3_22 / (sin_s * sin_s * q2); // gM_22 * q2 = g_22
  const double t4_12 = a4_12 / (std::sqrt(g1) * sin_s * std::sqrt(q2));
  out.sigma_perp = t4_12 * (t3_22 - t3_11);

  out.v1 = ddh / g1 + (sin_s * cos_s * dh - sin_h * cos_h) / g2;
  return out;
}

double linearized_mode_decay(double amplitude, int k1, int k2, double dt) {
  if (amplitude > 1e-3) {
    throw ConfigRejectedError("linearized mode prediction needs amplitude <= 1e-3");
  }
  double k2norm = double(k1) * k1 + double(k2) * k2;
  return std::exp(-2.0 * kPi * kPi * k2norm * dt);
}

}  // namespace oracle
}  // namespace graphflow
