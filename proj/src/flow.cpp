#include "graphflow/flow.hpp"

#include "graphflow/errors.hpp"
#include "graphflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace graphflow {

namespace {

// Longitudinal spectral damping of the velocity on sphere rows whose
// longitude stiffness exceeds what the chosen dt can integrate. Mode m of row
// i is scaled by d_m = min(1, budget / (dt * (alpha_lat + alpha_m))), which is
// inert on resolved modes (and exactly inert on rotationally symmetric data).
struct PoleFilter {
  const GridSpec& grid;
  double dt;
  const std::vector<double>& row_g11;
  const std::vector<double>& row_g22;
  double budget = 1.5;  // of the explicit two-level bound 2
  std::vector<double> costab, sintab;  // cos/sin(2 pi k / n2)

  PoleFilter(const GridSpec& g, double dt_, const std::vector<double>& g11,
             const std::vector<double>& g22)
      : grid(g), dt(dt_), row_g11(g11), row_g22(g22) {
    costab.resize(grid.n2);
    sintab.resize(grid.n2);
    for (int k = 0; k < grid.n2; ++k) {
      double ang = 2.0 * 3.14159265358979323846 * k / grid.n2;
      costab[k] = std::cos(ang);
      sintab[k] = std::sin(ang);
    }
  }

  bool row_needs_filter(int i, double& alpha_lat) const {
    alpha_lat = 4.0 * row_g11[i] / (grid.h1 * grid.h1);
    double alpha_max = 4.0 * row_g22[i] / (grid.h2 * grid.h2);
    return dt * (alpha_lat + alpha_max) > budget;
  }

  void apply_row(std::vector<Vec3>& v, int i) const {
    double alpha_lat;
    if (!row_needs_filter(i, alpha_lat)) return;
    const int n2 = grid.n2;
    const double h2 = grid.h2;

    Vec3* row = v.data() + static_cast<long>(i) * n2;
    for (int m = 1; m <= n2 / 2; ++m) {
      double s = std::sin(0.5 * m * h2);
      double alpha_m = 4.0 * row_g22[i] * s * s / (h2 * h2);
      double d = budget / (dt * (alpha_lat + alpha_m));
      if (d >= 1.0) continue;
      double ca = 0, cb = 0, cc = 0, sa = 0, sb = 0, sc = 0;
      long idx = 0;
      for (int j = 0; j < n2; ++j) {
        double cj = costab[idx], sj = sintab[idx];
        idx += m;
        if (idx >= n2) idx -= n2;
        ca += row[j].x * cj; sa += row[j].x * sj;
        cb += row[j].y * cj; sb += row[j].y * sj;
        cc += row[j].z * cj; sc += row[j].z * sj;
      }
      double scale = (m == n2 / 2) ? 1.0 / n2 : 2.0 / n2;
      ca *= scale; cb *= scale; cc *= scale;
      sa *= scale; sb *= scale; sc *= scale;
      double shave = 1.0 - d;
      idx = 0;
      for (int j = 0; j < n2; ++j) {
        double cj = costab[idx], sj = sintab[idx];
        idx += m;
        if (idx >= n2) idx -= n2;
        row[j].x -= shave * (ca * cj + sa * sj);
        row[j].y -= shave * (cb * cj + sb * sj);
        row[j].z -= shave * (cc * cj + sc * sj);
      }
    }
  }

  void apply(std::vector<Vec3>& v) const {
    for (int i = 0; i < grid.n1; ++i) apply_row(v, i);
  }
};

MapState apply_update(const MapState& state, const std::vector<Vec3>& v, double dt) {
  MapState next = state;
  next.t = state.t + dt;
  const bool torus = state.target.kind() == SurfaceKind::FlatTorus;
  const long n = state.grid.size();
  bool finite = true;
  for (long k = 0; k < n; ++k) {
    Vec3 nv = state.values[k] + dt * v[k];
    if (torus) {
      Vec2 red = state.target.reduce_chart(xy(nv));
      nv = lift3(red);
    } else {
      nv = state.target.renormalize(nv);
    }
    if (!std::isfinite(nv.x) || !std::isfinite(nv.y) || !std::isfinite(nv.z)) finite = false;
    next.values[k] = nv;
  }
  if (!finite) {
    throw NonFiniteValueError("time step at t = " + std::to_string(state.t) +
                              " produced a non-finite map value");
  }
  return next;
}

double dt_from_stats(const VelocityField& vf, const MapState& state, const FlowConfig& cfg) {
  double dt = cfg.cfl * vf.min_dt_cell;
  double remaining = cfg.t_max - state.t;
  if (remaining > 0.0) dt = std::min(dt, remaining);
  return dt;
}

std::vector<Vec3> filtered_velocity(const MapState& state, const VelocityField& vf, double dt) {
  std::vector<Vec3> v = vf.v;
  if (state.grid.polar) {
    PoleFilter f(state.grid, dt, vf.row_g11_max, vf.row_g22_max);
    f.apply(v);
  }
  return v;
}

DiagnosticsRecord make_record(const MapState& state, double dt) {
  FieldDiagnostics d = field_diagnostics(state);
  DiagnosticsRecord r;
  r.t = state.t;
  r.dt = dt;
  r.min_rho = d.min_rho;
  r.min_gap = d.min_gap;
  r.min_u1 = d.min_u1;
  r.max_normA2 = d.max_normA2;
  r.max_normH2 = d.max_normH2;
  r.area = d.area;
  r.int_H2_gt = d.int_H2_gt;
  r.int_A2_gt = d.int_A2_gt;
  r.int_A2_gM = d.int_A2_gM;
  r.gauss_residual_max = d.gauss_residual_max;
  r.pinch_lo_violation = d.pinch_lo_violation;
  r.pinch_hi_violation = d.pinch_hi_violation;
  r.h2_2a2_min_margin = d.h2_2a2_min_margin;
  r.a_sigma_min_margin = d.a_sigma_min_margin;
  r.vel_consistency_max = d.vel_consistency_max;
  return r;
}

}  // namespace

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxTime: return "max_time";
    case Termination::GraphicalityLoss: return "graphicality_loss";
    case Termination::BlowupGuard: return "blowup_guard";
  }
  return "?";
}

double stable_dt(const MapState& state, const FlowConfig& cfg) {
  VelocityField vf = velocity_field(state);
  return dt_from_stats(vf, state, cfg);
}

MapState step(const MapState& state, double dt, const FlowConfig& cfg) {
  VelocityField vf1 = velocity_field(state);
  std::vector<Vec3> v1 = filtered_velocity(state, vf1, dt);
  MapState predictor = apply_update(state, v1, dt);
  if (cfg.integrator == Integrator::Euler) return predictor;

  VelocityField vf2 = velocity_field(predictor);
  std::vector<Vec3> v2 = filtered_velocity(predictor, vf2, dt);
  // Heun average; torus velocities are chart vectors, sphere velocities are
  // tangent vectors at slightly different base points, both averages are
  // consistent to the scheme's order.
  std::vector<Vec3> vavg(v1.size());
  for (size_t k = 0; k < v1.size(); ++k) vavg[k] = 0.5 * (v1[k] + v2[k]);
  return apply_update(state, vavg, dt);
}

Trajectory run(const MapState& initial, const FlowConfig& cfg) {
  CurvatureBounds dom_b = initial.domain.curvature_bounds();
  CurvatureBounds tgt_b = initial.target.curvature_bounds();
  if (dom_b.min < tgt_b.sup - 1e-12) {
    throw ConfigRejectedError(
        "curvature hypothesis violated: min sigma_M = " + std::to_string(dom_b.min) +
        " < sup sigma_N = " + std::to_string(tgt_b.sup));
  }

  Trajectory traj;
  traj.sigma = dom_b.min;
  MapState state = initial;

  VelocityField vf = velocity_field(state);
  double dt = dt_from_stats(vf, state, cfg);
  DiagnosticsRecord rec0 = make_record(state, dt);
  traj.records.push_back(rec0);

  // envelope fitted at t = 0 when the data is strictly area decreasing
  if (rec0.min_rho > 0.0 && rec0.min_rho < 1.0 - 1e-15) {
    traj.envelope.fitted = true;
    traj.envelope.params = fit_c0(rec0.min_rho, traj.sigma);
    traj.envelope.eps =
        cfg.eps_residual_coeff * rec0.gauss_residual_max + cfg.eps_dt_coeff * dt;
  }

  traj.resolved_classify = cfg.classify;
  if (cfg.auto_tol_A) {
    traj.resolved_classify.tol_A = std::max(10.0 * rec0.gauss_residual_max, 1e-10);
  }
  if (cfg.auto_tol_H) {
    traj.resolved_classify.tol_H = std::max(4.0 * cfg.h_tol * cfg.h_tol, 1e-12);
  }

  auto finish = [&](Termination why, bool need_record) {
    traj.termination = why;
    traj.final_state = state;
    if (need_record) traj.records.push_back(make_record(state, dt));
    return traj;
  };

  if (rec0.min_u1 <= cfg.u1_floor) return finish(Termination::GraphicalityLoss, false);
  if (rec0.max_normA2 >= cfg.blowup_guard) return finish(Termination::BlowupGuard, false);
  if (vf.sup_speed <= cfg.h_tol) return finish(Termination::Converged, false);

  long steps_since_record = 0;
  while (true) {
    // advance one step, reusing vf as the first-stage velocity
    {
      std::vector<Vec3> v1 = filtered_velocity(state, vf, dt);
      if (cfg.integrator == Integrator::Euler) {
        state = apply_update(state, v1, dt);
      } else {
        MapState predictor = apply_update(state, v1, dt);
        VelocityField vf2 = velocity_field(predictor);
        std::vector<Vec3> v2 = filtered_velocity(predictor, vf2, dt);
        for (size_t k = 0; k < v1.size(); ++k) v1[k] = 0.5 * (v1[k] + v2[k]);
        state = apply_update(state, v1, dt);
      }
    }
    ++traj.total_steps;
    ++steps_since_record;

    vf = velocity_field(state);
    dt = dt_from_stats(vf, state, cfg);

    bool converged = vf.sup_speed <= cfg.h_tol;
    bool out_of_time = state.t >= cfg.t_max - 1e-14;
    bool lost_graph = vf.min_u1 <= cfg.u1_floor;
    bool record_due = steps_since_record >= cfg.record_every;

    if (converged || out_of_time || lost_graph || record_due) {
      DiagnosticsRecord rec = make_record(state, dt);
      traj.records.push_back(rec);
      steps_since_record = 0;
      if (lost_graph) {
        traj.termination = Termination::GraphicalityLoss;
        traj.final_state = state;
        return traj;
      }
      if (rec.max_normA2 >= cfg.blowup_guard) {
        traj.termination = Termination::BlowupGuard;
        traj.final_state = state;
        return traj;
      }
      if (converged) {
        traj.termination = Termination::Converged;
        traj.final_state = state;
        return traj;
      }
      if (out_of_time) {
        traj.termination = Termination::MaxTime;
        traj.final_state = state;
        return traj;
      }
    }
  }
}

}  // namespace graphflow
