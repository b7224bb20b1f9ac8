#pragma once

#include "graphflow/bounds.hpp"
#include "graphflow/extrinsic.hpp"
#include "graphflow/mapfield.hpp"

#include <vector>

namespace graphflow {

enum class Integrator { Euler, Heun };

struct FlowConfig {
  double cfl = 0.25;          // fraction of the explicit stability bound, (0, 0.5]
  double t_max = 1.0;
  double u1_floor = 0.01;     // graphicality guard
  double h_tol = 1e-5;        // sup-norm velocity threshold for convergence
  double blowup_guard = 1e6;  // abort when max ||A||^2 exceeds
  Integrator integrator = Integrator::Heun;
  int record_every = 50;      // steps between diagnostics records
  // envelope slack eps(h, dt) = res_coeff * gauss_residual_max(0) + dt_coeff * dt
  double eps_residual_coeff = 5.0;
  double eps_dt_coeff = 10.0;
  ClassifyTolerances classify;       // tol_A / tol_H < 0 pick automatic values
  bool auto_tol_A = true;
  bool auto_tol_H = true;
};

enum class Termination { Converged, MaxTime, GraphicalityLoss, BlowupGuard };

std::string termination_name(Termination t);

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  Termination termination = Termination::MaxTime;
  MapState final_state;
  double sigma = 0.0;           // min curvature of the domain
  EnvelopeContext envelope;     // fitted at t = 0 when the data allows it
  long total_steps = 0;
  ClassifyTolerances resolved_classify;
};

// cfl * min over the grid of h_loc^2 / tr(g^{-1}); on sphere grids the polar
// part of tr(g^{-1}) is capped at the level the longitudinal mode damping
// enforces, which keeps dt at the mid-latitude h^2 scale. Clipped to the
// remaining time.
double stable_dt(const MapState& state, const FlowConfig& cfg);

// One explicit step (Euler or Heun): f <- f + dt * v with sphere targets
// renormalized after every stage. Raises NonFiniteValueError when an updated
// value is not finite.
MapState step(const MapState& state, double dt, const FlowConfig& cfg);

// Advance until convergence (sup speed <= h_tol), t_max, the graphicality
// floor, or the blow-up guard. Requires min sigma_M >= sup sigma_N.
Trajectory run(const MapState& initial, const FlowConfig& cfg);

}  // namespace graphflow
