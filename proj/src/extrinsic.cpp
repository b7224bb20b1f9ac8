#include "graphflow/extrinsic.hpp"

#include "graphflow/errors.hpp"
#include "graphflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace graphflow {

namespace {

struct DomainRow {
  Sym2 gM;
  Sym2 gM_inv;
  double sqrt_det_gM = 1.0;
  double sigma_M = 0.0;
  Sym2 gamma1;  // Gamma^1_{ij}
  Sym2 gamma2;  // Gamma^2_{ij}
};

std::vector<DomainRow> domain_rows(const MapState& state) {
  const GridSpec& g = state.grid;
  std::vector<DomainRow> rows(g.n1);
  for (int i = 0; i < g.n1; ++i) {
    ChartCoords p = g.point(i, 0);
    DomainRow r;
    r.gM = state.domain.metric_at(p);
    r.gM_inv = sym_inverse(r.gM);
    r.sqrt_det_gM = std::sqrt(r.gM.det());
    r.sigma_M = state.domain.curvature_at(p);
    Christoffel ch = state.domain.christoffel_at(p);
    r.gamma1 = {ch.c[0][0][0], ch.c[0][0][1], ch.c[0][1][1]};
    r.gamma2 = {ch.c[1][0][0], ch.c[1][0][1], ch.c[1][1][1]};
    rows[i] = r;
  }
  return rows;
}

double target_curvature_at_value(const SurfaceModel& target, const Vec3& value) {
  switch (target.kind()) {
    case SurfaceKind::FlatTorus:
      return 0.0;
    case SurfaceKind::RoundSphere:
      return target.kappa();
    case SurfaceKind::WarpedSphere: {
      Vec3 n = normalized(value);
      double sin_th2 = std::max(0.0, 1.0 - n.z * n.z);
      if (sin_th2 < 1e-12) return 1.0 - 6.0 * target.warp_param();  // series limit at the pole
      double th = std::acos(std::clamp(n.z, -1.0, 1.0));
      return -target.warp_dd(th) / target.warp(th);
    }
  }
  return 0.0;
}

// Everything the per-point operators need: differential, target-frame Hessian
// components and the induced metric.
struct PointCore {
  Differential df;
  Sym2 hf[2];  // map Hessian on the target-frame legs (domain chart indices)
  Sym2 g, g_inv;
  double det_gM = 1.0;
};

PointCore point_core(const MapState& state, const DomainRow& row, int i, int j) {
  const GridSpec& grid = state.grid;
  const SurfaceModel& tgt = state.target;
  const Vec3 center = state.values[grid.index(i, j)];
  const double h1 = grid.h1, h2 = grid.h2;

  // 3x3 neighborhood, torus values lifted next to the center.
  Vec3 st[3][3];
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      const Vec3& raw = state.values[grid.resolve(i + di, j + dj).index];
      st[di + 1][dj + 1] = stencil_lift(state, center, raw, {di * h1, dj * h2},
                                        domain_wrap_of(grid, i + di, j + dj));
    }
  }

  PointCore pc;
  Vec3 d1 = (1.0 / (2.0 * h1)) * (st[2][1] - st[0][1]);
  Vec3 d2 = (1.0 / (2.0 * h2)) * (st[1][2] - st[1][0]);
  Vec3 hxx = (1.0 / (h1 * h1)) * (st[2][1] - 2.0 * center + st[0][1]);
  Vec3 hyy = (1.0 / (h2 * h2)) * (st[1][2] - 2.0 * center + st[1][0]);
  Vec3 hxy = (1.0 / (4.0 * h1 * h2)) * (st[2][2] - st[2][0] - st[0][2] + st[0][0]);

  pc.df.t1 = tgt.tangent_project(center, d1);
  pc.df.t2 = tgt.tangent_project(center, d2);
  pc.df.frame = target_frame_at(tgt, center);
  const TargetFrame& fr = pc.df.frame;

  auto frame_comp = [&](const Vec3& v, const Vec3& leg) {
    return target_dot(tgt, center, v, leg);
  };
  pc.df.in_frame.m[0][0] = frame_comp(pc.df.t1, fr.b1);
  pc.df.in_frame.m[0][1] = frame_comp(pc.df.t2, fr.b1);
  pc.df.in_frame.m[1][0] = frame_comp(pc.df.t1, fr.b2);
  pc.df.in_frame.m[1][1] = frame_comp(pc.df.t2, fr.b2);

  switch (tgt.kind()) {
    case SurfaceKind::FlatTorus:
    case SurfaceKind::RoundSphere: {
      // Dotting the raw chart second differences with the (tangent) frame
      // legs performs the tangential projection; for the round sphere that
      // projection is exactly the target connection correction.
      for (int a = 0; a < 2; ++a) {
        const Vec3& leg = a == 0 ? fr.b1 : fr.b2;
        pc.hf[a] = {frame_comp(hxx, leg), frame_comp(hxy, leg), frame_comp(hyy, leg)};
      }
      break;
    }
    case SurfaceKind::WarpedSphere: {
      // Carried on the unit sphere: tangential projection gives the round
      // Hessian; correct by the Christoffel difference of the warped metric.
      Vec3 n = normalized(center);
      double sin_th = std::sqrt(std::max(0.0, 1.0 - n.z * n.z));
      double th = std::acos(std::clamp(n.z, -1.0, 1.0));
      if (sin_th < 1e-8) {
        for (int a = 0; a < 2; ++a) {
          const Vec3& leg = a == 0 ? fr.b1 : fr.b2;
          pc.hf[a] = {frame_comp(hxx, leg), frame_comp(hxy, leg), frame_comp(hyy, leg)};
        }
        break;
      }
      double cphi = n.x / sin_th, sphi = n.y / sin_th;
      Vec3 e_th{n.z * cphi, n.z * sphi, -sin_th};
      Vec3 e_phi{-sphi, cphi, 0.0};
      auto chart_of_vec = [&](const Vec3& v) {
        return Vec2{dot(v, e_th), dot(v, e_phi) / sin_th};
      };
      Vec2 dc1 = chart_of_vec(pc.df.t1), dc2 = chart_of_vec(pc.df.t2);
      double w = tgt.warp(th), wd = tgt.warp_d(th);
      double dG1_22 = sin_th * n.z - w * wd;       // warped minus round
      double dG2_12 = wd / w - n.z / sin_th;
      Vec3 proj_hxx = tgt.tangent_project(center, hxx);
      Vec3 proj_hxy = tgt.tangent_project(center, hxy);
      Vec3 proj_hyy = tgt.tangent_project(center, hyy);
      Vec2 hc[3] = {chart_of_vec(proj_hxx), chart_of_vec(proj_hxy), chart_of_vec(proj_hyy)};
      const Vec2 d[2] = {dc1, dc2};
      Vec2 corr[3];
      int slot = 0;
      for (int ii = 0; ii < 2; ++ii) {
        for (int jj = ii; jj < 2; ++jj) {
          corr[slot].x = dG1_22 * d[ii].y * d[jj].y;
          corr[slot].y = dG2_12 * (d[ii].x * d[jj].y + d[ii].y * d[jj].x);
          ++slot;
        }
      }
      // frame legs are (e_th, d/dphi / w): frame comps of p*d_th + q*d_phi are (p, q w)
      pc.hf[0] = {hc[0].x + corr[0].x, hc[1].x + corr[1].x, hc[2].x + corr[2].x};
      pc.hf[1] = {(hc[0].y + corr[0].y) * w, (hc[1].y + corr[1].y) * w,
                  (hc[2].y + corr[2].y) * w};
      break;
    }
  }

  pc.g = row.gM + pullback(pc.df.in_frame, Sym2::identity());
  pc.g_inv = sym_inverse(pc.g);
  pc.det_gM = row.gM.det();
  return pc;
}

double contract_inv(const Sym2& g_inv, const Sym2& t) {
  // g^{ik} g^{jl} t_{ij} t_{kl} for symmetric t.
  double m00 = g_inv.a11 * t.a11 + g_inv.a12 * t.a12;
  double m01 = g_inv.a11 * t.a12 + g_inv.a12 * t.a22;
  double m10 = g_inv.a12 * t.a11 + g_inv.a22 * t.a12;
  double m11 = g_inv.a12 * t.a12 + g_inv.a22 * t.a22;
  return m00 * m00 + 2.0 * m01 * m10 + m11 * m11;
}

double trace_inv(const Sym2& g_inv, const Sym2& t) {
  return g_inv.a11 * t.a11 + 2.0 * g_inv.a12 * t.a12 + g_inv.a22 * t.a22;
}

struct PointExtrinsic {
  ExtrinsicData ex;
  SingularData sd;
  JacobianQuantities jq;
  Vec2 v_frame;       // nonparametric velocity on the frame legs
  double consistency; // max_alpha |<(0+v), e_alpha> - H^alpha|
};

PointExtrinsic point_extrinsic(const MapState& state, const DomainRow& row, int i, int j) {
  PointCore pc = point_core(state, row, i, j);
  PointExtrinsic pe;
  pe.sd = singular_decomposition(pc.df.in_frame, row.gM, Sym2::identity());
  pe.jq = jacobian_quantities(pe.sd);

  const Mat2& dff = pc.df.in_frame;

  // Adapted normal legs built directly from the beta pair: for any target
  // vector b, (-gM^{-1} df^T b (+) b) is exactly normal to the graph, so the
  // Gram-Schmidt pair below stays normal to rounding even where the singular
  // decomposition degenerates; at regular points it coincides with the
  // classical (-lambda alpha (+) beta)/sqrt(1 + lambda^2) frame.
  const Vec2 q1{dff.m[0][0] * pe.sd.beta1.x + dff.m[1][0] * pe.sd.beta1.y,
                dff.m[0][1] * pe.sd.beta1.x + dff.m[1][1] * pe.sd.beta1.y};
  const Vec2 q2{dff.m[0][0] * pe.sd.beta2.x + dff.m[1][0] * pe.sd.beta2.y,
                dff.m[0][1] * pe.sd.beta2.x + dff.m[1][1] * pe.sd.beta2.y};
  const Sym2 gM_inv = row.gM_inv;
  const Vec2 m1 = gM_inv * q1, m2 = gM_inv * q2;
  const double n11 = 1.0 + dot(q1, m1);
  const double n12 = dot(q1, m2) + dot(pe.sd.beta1, pe.sd.beta2);
  const double n22 = 1.0 + dot(q2, m2);
  const double inv_s3 = 1.0 / std::sqrt(n11);
  const double mix = n12 / n11;
  const double inv_s4 = 1.0 / std::sqrt(std::max(n22 - n12 * mix, 1e-300));

  // chart-indexed A^alpha_{ij} = <Gamma_M^k_{ij} d_k (+) hess_{ij}, e_alpha>
  auto a_raw = [&](const Vec2& q, const Vec2& beta) {
    Sym2 a;
    double* out[3] = {&a.a11, &a.a12, &a.a22};
    const double g1[3] = {row.gamma1.a11, row.gamma1.a12, row.gamma1.a22};
    const double g2[3] = {row.gamma2.a11, row.gamma2.a12, row.gamma2.a22};
    const Sym2& h0 = pc.hf[0];
    const Sym2& h1 = pc.hf[1];
    const double hx[3] = {h0.a11, h0.a12, h0.a22};
    const double hy[3] = {h1.a11, h1.a12, h1.a22};
    for (int slot = 0; slot < 3; ++slot) {
      *out[slot] = -(g1[slot] * q.x + g2[slot] * q.y) + beta.x * hx[slot] + beta.y * hy[slot];
    }
    return a;
  };
  Sym2 raw3 = a_raw(q1, pe.sd.beta1);
  Sym2 raw4 = a_raw(q2, pe.sd.beta2);
  Sym2 a3_chart = inv_s3 * raw3;
  Sym2 a4_chart = inv_s4 * (raw4 - mix * raw3);

  ExtrinsicData& ex = pe.ex;
  ex.g = pc.g;
  ex.g_inv = pc.g_inv;
  ex.frame_degenerate = pe.sd.degenerate;
  ex.h3 = trace_inv(pc.g_inv, a3_chart);
  ex.h4 = trace_inv(pc.g_inv, a4_chart);
  ex.normH2 = ex.h3 * ex.h3 + ex.h4 * ex.h4;
  ex.normA2 = contract_inv(pc.g_inv, a3_chart) + contract_inv(pc.g_inv, a4_chart);

  // adapted-frame components through the g-orthonormal tangent legs
  const double l1 = std::sqrt(dot(q1, m1));  // paired stretch of alpha1
  const double l2 = norm(Vec2{dff.m[0][0] * pe.sd.alpha2.x + dff.m[0][1] * pe.sd.alpha2.y,
                              dff.m[1][0] * pe.sd.alpha2.x + dff.m[1][1] * pe.sd.alpha2.y});
  Vec2 v1 = (1.0 / std::sqrt(1.0 + l1 * l1)) * pe.sd.alpha1;
  Vec2 v2 = (1.0 / std::sqrt(1.0 + l2 * l2)) * pe.sd.alpha2;
  auto to_frame = [&](const Sym2& a) {
    Sym2 f;
    f.a11 = quad(a, v1, v1);
    f.a12 = quad(a, v1, v2);
    f.a22 = quad(a, v2, v2);
    return f;
  };
  ex.a3 = to_frame(a3_chart);
  ex.a4 = to_frame(a4_chart);
  ex.sigma_perp = normal_commutator(ex.a3, ex.a4);

  // nonparametric velocity: g^{ij} (hess_{ij} - Gamma_M^k_{ij} df(d_k))
  double c1 = trace_inv(pc.g_inv, row.gamma1);
  double c2 = trace_inv(pc.g_inv, row.gamma2);
  pe.v_frame.x = trace_inv(pc.g_inv, pc.hf[0]) -
                 (c1 * pc.df.in_frame.m[0][0] + c2 * pc.df.in_frame.m[0][1]);
  pe.v_frame.y = trace_inv(pc.g_inv, pc.hf[1]) -
                 (c1 * pc.df.in_frame.m[1][0] + c2 * pc.df.in_frame.m[1][1]);

  double p3 = dot(pe.v_frame, pe.sd.beta1);
  double p4 = dot(pe.v_frame, pe.sd.beta2);
  double proj3 = inv_s3 * p3;
  double proj4 = inv_s4 * (p4 - mix * p3);
  pe.consistency = std::max(std::abs(proj3 - ex.h3), std::abs(proj4 - ex.h4));
  return pe;
}

DomainRow one_row(const MapState& state, int i) {
  // helper for the single-point public entry points
  return domain_rows(state)[i];
}

}  // namespace

std::pair<Sym2, Sym2> induced_metric_at(const Sym2& gM, const Mat2& df, const Sym2& gN) {
  Sym2 g = gM + pullback(df, gN);
  return {g, sym_inverse(g)};
}

double normal_commutator(const Sym2& a3, const Sym2& a4) {
  return -a3.a11 * a4.a12 + a3.a12 * a4.a11 - a3.a12 * a4.a22 + a3.a22 * a4.a12;
}

ExtrinsicData second_fundamental_form(const MapState& state, int i, int j) {
  return point_extrinsic(state, one_row(state, i), i, j).ex;
}

Vec3 mean_curvature(const MapState& state, int i, int j) {
  PointExtrinsic pe = point_extrinsic(state, one_row(state, i), i, j);
  TargetFrame fr = target_frame_at(state.target, state.values[state.grid.index(i, j)]);
  return pe.v_frame.x * fr.b1 + pe.v_frame.y * fr.b2;
}

double velocity_consistency_residual(const MapState& state, int i, int j) {
  return point_extrinsic(state, one_row(state, i), i, j).consistency;
}

namespace {

// sigma_g of the sampled induced-metric field by the finite-difference
// curvature formula; chart tensors flip the sign of the mixed component when
// a stencil row reflects across a pole.
double sigma_g_from_field(const GridSpec& grid, const std::vector<Sym2>& gfield, int i, int j) {
  Sym2 st[3][3];
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      auto r = grid.resolve(i + di, j + dj);
      Sym2 v = gfield[r.index];
      if (r.reflected) v.a12 = -v.a12;
      st[di + 1][dj + 1] = v;
    }
  }
  return brioschi_from_stencil(st, grid.h1, grid.h2);
}

}  // namespace

double gauss_residual(const MapState& state, int i, int j) {
  auto rows = domain_rows(state);
  const GridSpec& grid = state.grid;

  // local 3x3 induced-metric stencil
  std::vector<Sym2> local(grid.size());
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      auto r = grid.resolve(i + di, j + dj);
      int ri = r.index / grid.n2, rj = r.index % grid.n2;
      PointCore pc = point_core(state, rows[ri], ri, rj);
      local[r.index] = pc.g;
    }
  }
  double sigma_g = sigma_g_from_field(grid, local, i, j);

  PointExtrinsic pe = point_extrinsic(state, rows[i], i, j);
  double sigma_N = target_curvature_at_value(state.target, state.values[grid.index(i, j)]);
  double rhs = 2.0 * pe.jq.u1 * pe.jq.u1 * rows[i].sigma_M +
               2.0 * pe.jq.u2 * pe.jq.u2 * sigma_N + pe.ex.normH2 - pe.ex.normA2;
  return std::abs(2.0 * sigma_g - rhs);
}

namespace {

struct VelocityAcc {
  double min_u1 = 1.0, min_gap = 1.0, sup_speed2 = 0.0;
  double min_cell = std::numeric_limits<double>::infinity();
  bool finite = true;
};

// Shared per-point tail: stability/graphicality statistics from the induced
// metric and pullback determinants.
inline void velocity_stats(VelocityAcc& a, double g11i, double g12i, double g22i,
                           double det_g, double det_gM, double det_S, double speed2,
                           double h_loc2, double cap_ratio, bool polar, double& g11max,
                           double& g22max) {
  a.sup_speed2 = std::max(a.sup_speed2, speed2);
  if (!std::isfinite(speed2 + det_g)) a.finite = false;
  double u1 = std::sqrt(std::max(det_gM / det_g, 0.0));
  double lam_mu = std::sqrt(std::max(det_S / det_gM, 0.0));
  a.min_u1 = std::min(a.min_u1, u1);
  a.min_gap = std::min(a.min_gap, u1 * (1.0 - lam_mu));
  g11max = std::max(g11max, g11i);
  g22max = std::max(g22max, g22i);
  double tr_eff = polar ? g11i + std::min(g22i, cap_ratio * g11i) : g11i + g22i;
  a.min_cell = std::min(a.min_cell, h_loc2 / tr_eff);
  (void)g12i;
}

// Round-sphere target: frame-free embedded arithmetic. The tangential
// projection of the chart second differences is the whole target connection
// correction, so no per-point frames or singular data are needed.
void velocity_rows_sphere(const MapState& state, const std::vector<DomainRow>& rows,
                          VelocityField& out, VelocityAcc& a, int begin, int end) {
  const GridSpec& grid = state.grid;
  const int n1 = grid.n1, n2 = grid.n2;
  const double h1 = grid.h1, h2 = grid.h2;
  const double inv2h1 = 1.0 / (2.0 * h1), inv2h2 = 1.0 / (2.0 * h2);
  const double invh1s = 1.0 / (h1 * h1), invh2s = 1.0 / (h2 * h2);
  const double invm = 1.0 / (4.0 * h1 * h2);
  const double h_loc2 = std::min(h1, h2) * std::min(h1, h2);
  const double cap_ratio = 0.5 * (h2 / h1) * (h2 / h1);
  const double inv_r2 = 1.0 / (state.target.embedding_radius() * state.target.embedding_radius());
  const Vec3* val = state.values.data();

  for (int i = begin; i < end; ++i) {
    const DomainRow& row = rows[i];
    const double gm1 = row.gM.a11, gm2 = row.gM.a22;
    const double det_gM = gm1 * gm2;
    const double gam1_22 = row.gamma1.a22, gam2_12 = row.gamma2.a12;
    const long base = static_cast<long>(i) * n2;

    // neighbor rows; polar boundary rows reflect with a half-revolution shift
    long base_n, base_s;
    bool shift_n = false, shift_s = false;
    if (i > 0) {
      base_n = base - n2;
    } else if (grid.polar) {
      base_n = 0;
      shift_n = true;
    } else {
      base_n = static_cast<long>(n1 - 1) * n2;
    }
    if (i + 1 < n1) {
      base_s = base + n2;
    } else if (grid.polar) {
      base_s = base;
      shift_s = true;
    } else {
      base_s = 0;
    }
    const int half = n2 / 2;
    auto at_n = [&](int jj) {
      if (shift_n) { jj += half; if (jj >= n2) jj -= n2; }
      return val[base_n + jj];
    };
    auto at_s = [&](int jj) {
      if (shift_s) { jj += half; if (jj >= n2) jj -= n2; }
      return val[base_s + jj];
    };
    double g11max = 0.0, g22max = 0.0;

    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      const int jp = j + 1 == n2 ? 0 : j + 1;

      const Vec3 c = val[base + j];
      const Vec3 pn = at_n(j), ps = at_s(j);
      const Vec3 pe = val[base + jp], pw = val[base + jm];
      const Vec3 pne = at_n(jp), pnw = at_n(jm);
      const Vec3 pse = at_s(jp), psw = at_s(jm);

      const Vec3 d1 = inv2h1 * (ps - pn);  // x1 increases toward larger i
      const Vec3 d2 = inv2h2 * (pe - pw);
      // tangential projections; c sits exactly on the radius-R sphere so the
      // unit normal is c / R and dot(v, c) / R^2 its normal coefficient
      const double d1n = dot(d1, c) * inv_r2;
      const double d2n = dot(d2, c) * inv_r2;
      const Vec3 t1 = d1 - d1n * c;
      const Vec3 t2 = d2 - d2n * c;

      const double s11 = dot(t1, t1), s12 = dot(t1, t2), s22 = dot(t2, t2);
      const double g11 = gm1 + s11, g12 = s12, g22 = gm2 + s22;
      const double det_g = g11 * g22 - g12 * g12;
      const double inv_det = 1.0 / det_g;
      const double gi11 = g22 * inv_det, gi12 = -g12 * inv_det, gi22 = g11 * inv_det;

      const Vec3 hxx = invh1s * (ps - 2.0 * c + pn);
      const Vec3 hyy = invh2s * (pe - 2.0 * c + pw);
      const Vec3 hxy = invm * (pse - psw - pne + pnw);
      Vec3 hess = gi11 * hxx + (2.0 * gi12) * hxy + gi22 * hyy;
      const double hn = dot(hess, c) * inv_r2;
      hess = hess - hn * c;

      const double c1 = gi22 * gam1_22;
      const double c2 = 2.0 * gi12 * gam2_12;
      const Vec3 v = hess - c1 * t1 - c2 * t2;
      out.v[base + j] = v;

      velocity_stats(a, gi11, gi12, gi22, det_g, det_gM, s11 * s22 - s12 * s12, dot(v, v),
                     h_loc2, cap_ratio, grid.polar, g11max, g22max);
    }
    out.row_g11_max[i] = g11max;
    out.row_g22_max[i] = g22max;
  }
}

// Flat torus to flat torus with a diagonal target Gram: the domain is flat
// (no Christoffel terms), the metric row-constant, and the nearest lift of
// the twist residual is plain componentwise rounding.
void velocity_rows_torus(const MapState& state, const std::vector<DomainRow>& rows,
                         VelocityField& out, VelocityAcc& a, int begin, int end) {
  const GridSpec& grid = state.grid;
  const int n1 = grid.n1, n2 = grid.n2;
  const double h1 = grid.h1, h2 = grid.h2;
  const double inv2h1 = 1.0 / (2.0 * h1), inv2h2 = 1.0 / (2.0 * h2);
  const double invh1s = 1.0 / (h1 * h1), invh2s = 1.0 / (h2 * h2);
  const double invm = 1.0 / (4.0 * h1 * h2);
  const double h_loc2 = std::min(h1, h2) * std::min(h1, h2);
  const Sym2 gram = state.target.lattice_gram();
  const double gn1 = gram.a11, gn2 = gram.a22;
  const double lift_limit2 = 0.25 * state.target.torus_diameter() *
                             state.target.torus_diameter() * (1.0 + 1e-12);
  const Mat2& tw = state.torus_twist;
  const Vec3* val = state.values.data();
  const Sym2 gM = rows[0].gM;
  const double det_gM = gM.det();

  for (int i = begin; i < end; ++i) {
    const long base = static_cast<long>(i) * n2;
    const long base_n = static_cast<long>(i > 0 ? i - 1 : n1 - 1) * n2;
    const long base_s = static_cast<long>(i + 1 < n1 ? i + 1 : 0) * n2;
    const double wrap_n = i > 0 ? 0.0 : -1.0;
    const double wrap_s = i + 1 < n1 ? 0.0 : 1.0;
    double g11max = 0.0, g22max = 0.0;

    for (int j = 0; j < n2; ++j) {
      const int jm = j == 0 ? n2 - 1 : j - 1;
      const int jp = j + 1 == n2 ? 0 : j + 1;
      const double wrap_e = j + 1 == n2 ? 1.0 : 0.0;
      const double wrap_w = j == 0 ? -1.0 : 0.0;
      const Vec3 c = val[base + j];

      auto lift = [&](const Vec3& raw, double dx1, double dx2, double w1, double w2) {
        // covering prediction + componentwise-rounded periodic remainder
        double sx = tw.m[0][0] * dx1 + tw.m[0][1] * dx2;  // twist * step
        double sy = tw.m[1][0] * dx1 + tw.m[1][1] * dx2;
        double rx = raw.x + tw.m[0][0] * w1 + tw.m[0][1] * w2 - c.x - sx;
        double ry = raw.y + tw.m[1][0] * w1 + tw.m[1][1] * w2 - c.y - sy;
        rx -= std::round(rx);
        ry -= std::round(ry);
        if (gn1 * rx * rx + gn2 * ry * ry > lift_limit2) {
          throw LiftAmbiguityError("torus displacement exceeds half the torus diameter; "
                                   "the grid does not resolve the map");
        }
        return Vec2{c.x + sx + rx, c.y + sy + ry};
      };

      const Vec2 pn = lift(val[base_n + j], -h1, 0.0, wrap_n, 0.0);
      const Vec2 ps = lift(val[base_s + j], h1, 0.0, wrap_s, 0.0);
      const Vec2 pe = lift(val[base + jp], 0.0, h2, 0.0, wrap_e);
      const Vec2 pw = lift(val[base + jm], 0.0, -h2, 0.0, wrap_w);
      const Vec2 pne = lift(val[base_n + jp], -h1, h2, wrap_n, wrap_e);
      const Vec2 pnw = lift(val[base_n + jm], -h1, -h2, wrap_n, wrap_w);
      const Vec2 pse = lift(val[base_s + jp], h1, h2, wrap_s, wrap_e);
      const Vec2 psw = lift(val[base_s + jm], h1, -h2, wrap_s, wrap_w);

      const Vec2 cc = xy(c);
      const Vec2 d1 = inv2h1 * (ps - pn);
      const Vec2 d2 = inv2h2 * (pe - pw);
      const Vec2 hxx = invh1s * (ps - 2.0 * cc + pn);
      const Vec2 hyy = invh2s * (pe - 2.0 * cc + pw);
      const Vec2 hxy = invm * (pse - psw - pne + pnw);

      const double s11 = gn1 * d1.x * d1.x + gn2 * d1.y * d1.y;
      const double s12 = gn1 * d1.x * d2.x + gn2 * d1.y * d2.y;
      const double s22 = gn1 * d2.x * d2.x + gn2 * d2.y * d2.y;
      const double g11 = gM.a11 + s11, g12 = gM.a12 + s12, g22 = gM.a22 + s22;
      const double det_g = g11 * g22 - g12 * g12;
      const double inv_det = 1.0 / det_g;
      const double gi11 = g22 * inv_det, gi12 = -g12 * inv_det, gi22 = g11 * inv_det;

      const Vec2 v = gi11 * hxx + (2.0 * gi12) * hxy + gi22 * hyy;
      out.v[base + j] = lift3(v);

      const double speed2 = gn1 * v.x * v.x + gn2 * v.y * v.y;
      velocity_stats(a, gi11, gi12, gi22, det_g, det_gM, s11 * s22 - s12 * s12, speed2,
                     h_loc2, 0.0, false, g11max, g22max);
    }
    out.row_g11_max[i] = g11max;
    out.row_g22_max[i] = g22max;
  }
}

// Generic kinds (torus chart values, warped carrier) go through the shared
// per-point kernel.
void velocity_rows_generic(const MapState& state, const std::vector<DomainRow>& rows,
                           VelocityField& out, VelocityAcc& a, int begin, int end) {
  const GridSpec& grid = state.grid;
  const double h_loc = std::min(grid.h1, grid.h2);
  const double h_loc2 = h_loc * h_loc;
  const double cap_ratio = 0.5 * (grid.h2 / grid.h1) * (grid.h2 / grid.h1);
  for (int i = begin; i < end; ++i) {
    const DomainRow& row = rows[i];
    double g22max = 0.0, g11max = 0.0;
    for (int j = 0; j < grid.n2; ++j) {
      PointCore pc = point_core(state, row, i, j);
      double c1 = trace_inv(pc.g_inv, row.gamma1);
      double c2 = trace_inv(pc.g_inv, row.gamma2);
      Vec2 vf{trace_inv(pc.g_inv, pc.hf[0]) -
                  (c1 * pc.df.in_frame.m[0][0] + c2 * pc.df.in_frame.m[0][1]),
              trace_inv(pc.g_inv, pc.hf[1]) -
                  (c1 * pc.df.in_frame.m[1][0] + c2 * pc.df.in_frame.m[1][1])};
      out.v[grid.index(i, j)] = vf.x * pc.df.frame.b1 + vf.y * pc.df.frame.b2;
      velocity_stats(a, pc.g_inv.a11, pc.g_inv.a12, pc.g_inv.a22, pc.g.det(), pc.det_gM,
                     pullback(pc.df.in_frame, Sym2::identity()).det(), dot(vf, vf), h_loc2,
                     cap_ratio, grid.polar, g11max, g22max);
    }
    out.row_g22_max[i] = g22max;
    out.row_g11_max[i] = g11max;
  }
}

}  // namespace

VelocityField velocity_field(const MapState& state) {
  const GridSpec& grid = state.grid;
  auto rows = domain_rows(state);
  VelocityField out;
  out.v.assign(grid.size(), Vec3{});
  out.row_g22_max.assign(grid.n1, 0.0);
  out.row_g11_max.assign(grid.n1, 0.0);

  const int workers = worker_count();
  std::vector<VelocityAcc> acc(workers);
  const bool fast_sphere = state.target.kind() == SurfaceKind::RoundSphere;
  const bool fast_torus = state.target.kind() == SurfaceKind::FlatTorus &&
                          state.domain.kind() == SurfaceKind::FlatTorus &&
                          state.target.lattice_gram().a12 == 0.0;

  parallel_chunks(grid.n1, [&](int chunk, int begin, int end) {
    VelocityAcc a;
    if (fast_sphere) {
      velocity_rows_sphere(state, rows, out, a, begin, end);
    } else if (fast_torus) {
      velocity_rows_torus(state, rows, out, a, begin, end);
    } else {
      velocity_rows_generic(state, rows, out, a, begin, end);
    }
    acc[chunk] = a;
  });

  out.min_dt_cell = std::numeric_limits<double>::infinity();
  double sup2 = 0.0;
  for (const auto& a : acc) {
    out.min_u1 = std::min(out.min_u1, a.min_u1);
    out.min_gap = std::min(out.min_gap, a.min_gap);
    sup2 = std::max(sup2, a.sup_speed2);
    out.min_dt_cell = std::min(out.min_dt_cell, a.min_cell);
    out.finite = out.finite && a.finite;
  }
  out.sup_speed = std::sqrt(std::max(sup2, 0.0));
  return out;
}

FieldDiagnostics field_diagnostics(const MapState& state) {
  const GridSpec& grid = state.grid;
  auto rows = domain_rows(state);
  const double wq = grid.h1 * grid.h2;
  const int workers = worker_count();

  std::vector<Sym2> gfield(grid.size());
  std::vector<double> u1f(grid.size()), u2f(grid.size());
  std::vector<double> a2f(grid.size()), h2f(grid.size());

  std::vector<FieldDiagnostics> acc(workers);
  for (auto& a : acc) {
    a.h2_2a2_min_margin = std::numeric_limits<double>::infinity();
    a.a_sigma_min_margin = std::numeric_limits<double>::infinity();
  }

  parallel_chunks(grid.n1, [&](int chunk, int begin, int end) {
    FieldDiagnostics d = acc[chunk];
    for (int i = begin; i < end; ++i) {
      const DomainRow& row = rows[i];
      for (int j = 0; j < grid.n2; ++j) {
        PointExtrinsic pe = point_extrinsic(state, row, i, j);
        int idx = grid.index(i, j);
        gfield[idx] = pe.ex.g;
        u1f[idx] = pe.jq.u1;
        u2f[idx] = pe.jq.u2;
        a2f[idx] = pe.ex.normA2;
        h2f[idx] = pe.ex.normH2;

        d.min_rho = std::min(d.min_rho, pe.jq.rho);
        d.min_gap = std::min(d.min_gap, pe.jq.u1 - std::abs(pe.jq.u2));
        d.min_u1 = std::min(d.min_u1, pe.jq.u1);
        d.max_normA2 = std::max(d.max_normA2, pe.ex.normA2);
        d.max_normH2 = std::max(d.max_normH2, pe.ex.normH2);

        double sqg = std::sqrt(pe.ex.g.det());
        d.area += sqg * wq;
        d.int_H2_gt += pe.ex.normH2 * sqg * wq;
        d.int_A2_gt += pe.ex.normA2 * sqg * wq;
        d.int_A2_gM += pe.ex.normA2 * row.sqrt_det_gM * wq;

        double uu = pe.jq.u1 * pe.jq.u1 + pe.jq.u2 * pe.jq.u2;
        double lo = (1.0 - pe.jq.rho * pe.jq.rho) - 2.0 * (1.0 - uu);
        double hi = 2.0 * (1.0 - uu) - 2.0 * (1.0 - pe.jq.rho * pe.jq.rho);
        d.pinch_lo_violation = std::max(d.pinch_lo_violation, lo);
        d.pinch_hi_violation = std::max(d.pinch_hi_violation, hi);
        d.h2_2a2_min_margin =
            std::min(d.h2_2a2_min_margin, 2.0 * pe.ex.normA2 - pe.ex.normH2);
        d.a_sigma_min_margin =
            std::min(d.a_sigma_min_margin,
                     std::min(pe.ex.normA2 + 2.0 * pe.ex.sigma_perp,
                              pe.ex.normA2 - 2.0 * pe.ex.sigma_perp));
        d.vel_consistency_max =
            std::max(d.vel_consistency_max,
                     pe.consistency / (1.0 + std::sqrt(pe.ex.normA2)));
      }
    }
    acc[chunk] = d;
  });

  FieldDiagnostics d;
  d.h2_2a2_min_margin = std::numeric_limits<double>::infinity();
  d.a_sigma_min_margin = std::numeric_limits<double>::infinity();
  for (const auto& a : acc) {
    d.min_rho = std::min(d.min_rho, a.min_rho);
    d.min_gap = std::min(d.min_gap, a.min_gap);
    d.min_u1 = std::min(d.min_u1, a.min_u1);
    d.max_normA2 = std::max(d.max_normA2, a.max_normA2);
    d.max_normH2 = std::max(d.max_normH2, a.max_normH2);
    d.area += a.area;
    d.int_H2_gt += a.int_H2_gt;
    d.int_A2_gt += a.int_A2_gt;
    d.int_A2_gM += a.int_A2_gM;
    d.pinch_lo_violation = std::max(d.pinch_lo_violation, a.pinch_lo_violation);
    d.pinch_hi_violation = std::max(d.pinch_hi_violation, a.pinch_hi_violation);
    d.h2_2a2_min_margin = std::min(d.h2_2a2_min_margin, a.h2_2a2_min_margin);
    d.a_sigma_min_margin = std::min(d.a_sigma_min_margin, a.a_sigma_min_margin);
    d.vel_consistency_max = std::max(d.vel_consistency_max, a.vel_consistency_max);
  }

  // second pass: curvature of the induced metric field, residual of the
  // curvature identity 2 sigma_g = 2 u1^2 sigma_M + 2 u2^2 sigma_N + H^2 - A^2.
  // The reported maximum skips rows with sin(x1) < 0.2 on polar grids: the
  // determinant formula divides by (det g)^2 ~ sin^4 there and the chart
  // estimate of sigma_g loses its conditioning (the identity itself is fine;
  // per-point gauss_residual still evaluates anywhere).
  std::vector<double> res_max(workers, 0.0), res_int(workers, 0.0);
  parallel_chunks(grid.n1, [&](int chunk, int begin, int end) {
    double worst = 0.0, worst_int = 0.0;
    for (int i = begin; i < end; ++i) {
      double sin_row = grid.polar ? std::sin(grid.x1(i)) : 1.0;
      if (sin_row < 0.2) continue;
      double row_worst = 0.0;
      for (int j = 0; j < grid.n2; ++j) {
        int idx = grid.index(i, j);
        double sigma_g = sigma_g_from_field(grid, gfield, i, j);
        double sigma_N = target_curvature_at_value(state.target, state.values[idx]);
        double rhs = 2.0 * u1f[idx] * u1f[idx] * rows[i].sigma_M +
                     2.0 * u2f[idx] * u2f[idx] * sigma_N + h2f[idx] - a2f[idx];
        row_worst = std::max(row_worst, std::abs(2.0 * sigma_g - rhs));
      }
      worst = std::max(worst, row_worst);
      if (sin_row >= 0.5) worst_int = std::max(worst_int, row_worst);
    }
    res_max[chunk] = worst;
    res_int[chunk] = worst_int;
  });
  for (double r : res_max) d.gauss_residual_max = std::max(d.gauss_residual_max, r);
  for (double r : res_int) d.gauss_residual_interior = std::max(d.gauss_residual_interior, r);
  return d;
}

}  // namespace graphflow
