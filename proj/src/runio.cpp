#include "graphflow/runio.hpp"

#include "graphflow/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace graphflow {

namespace {
double darea_dt(const std::vector<DiagnosticsRecord>& recs, size_t k) {
  if (recs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  size_t lo = k == 0 ? 0 : k - 1;
  size_t hi = k + 1 >= recs.size() ? recs.size() - 1 : k + 1;
  double dt = recs[hi].t - recs[lo].t;
  if (dt <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (recs[hi].area - recs[lo].area) / dt;
}
}  // namespace

void write_series_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write series file '" + path + "'");
  out << "t,dt,min_rho,min_gap,min_u1,max_normA2,max_normH2,area,dArea_dt_est,"
         "int_normA2_gt,int_normA2_gM,gauss_residual_max,envelope_value,envelope_margin\n";
  char buf[64];
  auto cell = [&](double v, bool last = false) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << (last ? "\n" : ",");
  };
  for (size_t k = 0; k < traj.records.size(); ++k) {
    const auto& r = traj.records[k];
    double env = std::numeric_limits<double>::quiet_NaN();
    double margin = env;
    if (traj.envelope.fitted) {
      env = envelope(r.t, traj.envelope.params);
      margin = r.min_rho - env;
    }
    cell(r.t);
    cell(r.dt);
    cell(r.min_rho);
    cell(r.min_gap);
    cell(r.min_u1);
    cell(r.max_normA2);
    cell(r.max_normH2);
    cell(r.area);
    cell(darea_dt(traj.records, k));
    cell(r.int_A2_gt);
    cell(r.int_A2_gM);
    cell(r.gauss_residual_max);
    cell(env);
    cell(margin, true);
  }
}

nlohmann::json summary_json(const Trajectory& traj, const DecayReport& report,
                            LimitClass classification, const nlohmann::json& config_echo,
                            double wall_seconds) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["termination"] = termination_name(traj.termination);
  j["classification"] = limit_class_name(classification);
  j["wall_time_s"] = wall_seconds;
  j["n_records"] = traj.records.size();
  j["n_steps"] = traj.total_steps;
  j["sigma"] = traj.sigma;

  auto num_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };

  nlohmann::json env;
  env["fitted"] = traj.envelope.fitted;
  env["c0"] = traj.envelope.fitted ? num_or_null(traj.envelope.params.c0) : nlohmann::json(nullptr);
  env["eps"] = traj.envelope.eps;
  j["envelope"] = env;

  nlohmann::json dr;
  dr["sup_t_max_H2"] = num_or_null(report.sup_t_max_H2);
  dr["sup_t_max_A2"] = num_or_null(report.sup_t_max_A2);
  dr["sup_max_A2"] = num_or_null(report.sup_max_A2);
  dr["sup_t_int_A2_gt"] = num_or_null(report.sup_t_int_A2_gt);
  dr["sup_t_int_A2_gM"] = num_or_null(report.sup_t_int_A2_gM);
  dr["envelope_min_margin"] = num_or_null(report.envelope_min_margin);
  dr["area_identity_max_error"] = num_or_null(report.area_identity_max_error);
  dr["verdicts"] = report.verdicts;
  dr["pass"] = report.pass;
  j["decay_report"] = dr;

  nlohmann::json checks;
  double pinch_lo = 0.0, pinch_hi = 0.0, h2a2 = std::numeric_limits<double>::infinity();
  double asig = h2a2, vcons = 0.0, min_gap = 1.0, min_u1 = 1.0;
  for (const auto& r : traj.records) {
    pinch_lo = std::max(pinch_lo, r.pinch_lo_violation);
    pinch_hi = std::max(pinch_hi, r.pinch_hi_violation);
    h2a2 = std::min(h2a2, r.h2_2a2_min_margin);
    asig = std::min(asig, r.a_sigma_min_margin);
    vcons = std::max(vcons, r.vel_consistency_max);
    min_gap = std::min(min_gap, r.min_gap);
    min_u1 = std::min(min_u1, r.min_u1);
  }
  checks["pinch_lo_violation_max"] = num_or_null(pinch_lo);
  checks["pinch_hi_violation_max"] = num_or_null(pinch_hi);
  checks["h2_le_2a2_min_margin"] = num_or_null(h2a2);
  checks["a2_sigma_perp_min_margin"] = num_or_null(asig);
  checks["vel_consistency_max"] = num_or_null(vcons);
  checks["min_gap_overall"] = num_or_null(min_gap);
  checks["min_u1_overall"] = num_or_null(min_u1);
  j["checks"] = checks;

  nlohmann::json fin;
  if (!traj.records.empty()) {
    const auto& r = traj.records.back();
    fin["t"] = r.t;
    fin["area"] = r.area;
    fin["min_rho"] = r.min_rho;
    fin["min_gap"] = r.min_gap;
    fin["min_u1"] = r.min_u1;
    fin["max_normA2"] = r.max_normA2;
    fin["max_normH2"] = r.max_normH2;
    fin["gauss_residual_max"] = r.gauss_residual_max;
  }
  j["final"] = fin;

  nlohmann::json tol;
  tol["tol_diam"] = traj.resolved_classify.tol_diam;
  tol["tol_A"] = traj.resolved_classify.tol_A;
  tol["tol_H"] = traj.resolved_classify.tol_H;
  j["classify_tolerances"] = tol;

  j["config"] = config_echo;
  return j;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace graphflow
