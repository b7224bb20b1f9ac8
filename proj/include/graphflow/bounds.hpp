#pragma once

#include "graphflow/mapfield.hpp"

#include <map>
#include <string>
#include <vector>

namespace graphflow {

enum class EnvelopeVariant { SigmaNonneg, SigmaNeg };

// Parameters of the analytic lower bound for min rho produced by the
// comparison ODE of the maximum principle.
struct EnvelopeParams {
  double sigma = 0.0;
  double c0 = 1.0;
  EnvelopeVariant variant = EnvelopeVariant::SigmaNonneg;
};

// c0 such that the envelope equals rho0_min at t = 0: c0 = rho0 / sqrt(1 -
// rho0^2). Requires strictly area decreasing data (0 < rho0_min < 1).
EnvelopeParams fit_c0(double rho0_min, double sigma);

// sigma >= 0: c0 e^{sigma t} / sqrt(1 + c0^2 e^{2 sigma t});
// sigma <  0: c0 e^{2 sigma t} / sqrt(1 + c0^2 e^{4 sigma t}).
double envelope(double t, const EnvelopeParams& p);

enum class SigmaSign { Positive, Zero };

// One diagnostics record of a trajectory; everything the monitored bounds
// need, sampled at a record time.
struct DiagnosticsRecord {
  double t = 0.0, dt = 0.0;
  double min_rho = 1.0, min_gap = 1.0, min_u1 = 1.0;
  double max_normA2 = 0.0, max_normH2 = 0.0;
  double area = 0.0;
  double int_H2_gt = 0.0;
  double int_A2_gt = 0.0, int_A2_gM = 0.0;
  double gauss_residual_max = 0.0;
  double pinch_lo_violation = 0.0, pinch_hi_violation = 0.0;
  double h2_2a2_min_margin = 0.0;
  double a_sigma_min_margin = 0.0;
  double vel_consistency_max = 0.0;
};

// Envelope context attached to a trajectory: fitted parameters plus the
// discretization slack eps(h, dt).
struct EnvelopeContext {
  bool fitted = false;
  EnvelopeParams params;
  double eps = 0.0;
};

struct DecayReport {
  double sup_t_max_H2 = 0.0;        // sup_t [t * max ||H||^2]
  double sup_t_max_A2 = 0.0;        // sup_t [t * max ||A||^2]
  double sup_max_A2 = 0.0;          // sup_t [max ||A||^2]
  double sup_t_int_A2_gt = 0.0;     // sup_t [t * int ||A||^2 d(evolving area)]
  double sup_t_int_A2_gM = 0.0;     // sup_t [t * int ||A||^2 d(domain area)]
  double envelope_min_margin = 0.0; // min_t (min_x rho - envelope(t)); 0 if unfitted
  double area_identity_max_error = 0.0;
  std::map<std::string, std::string> verdicts;  // clause -> "pass"/"fail"/"n/a"
  bool pass = true;
};

// Suprema of the monitored series, envelope margin, area-derivative identity
// error, and per-clause verdicts. A t-weighted series passes when its
// supremum is finite and it does not rise above (1 + slack) times its value
// at the start of the final half of the run.
DecayReport check_decay(const std::vector<DiagnosticsRecord>& records, SigmaSign sigma_sign,
                        const EnvelopeContext& env, double trend_slack = 0.10);

enum class LimitClass { ConstantMap, TotallyGeodesic, Minimal, NotConverged };

std::string limit_class_name(LimitClass c);

struct ClassifyTolerances {
  double tol_diam = 1e-2;
  double tol_A = 1e-10;   // max ||A||^2 threshold
  double tol_H = 1e-8;    // max ||H||^2 threshold
};

// Strictly ordered classification of a final state: image diameter below
// tol_diam, else vanishing second fundamental form, else vanishing mean
// curvature, else not converged. max_normA2 / max_normH2 come from the final
// record.
LimitClass classify_limit(const MapState& final_state, double max_normA2, double max_normH2,
                          const ClassifyTolerances& tol);

// Max pairwise target distance over the grid values.
double image_diameter(const MapState& state);

}  // namespace graphflow
