#pragma once

#include "graphflow/mapfield.hpp"

#include <utility>
#include <vector>

namespace graphflow {
namespace oracle {

// Projection Jacobians straight from the pulled-back area forms: u1 =
// *(area form of the domain factor), u2 = *(f^* area form of the target),
// with * the Hodge star of the induced metric. Reimplements its own
// differencing and lifts on top of the surface module only; no singular
// values anywhere on this path.
std::pair<double, double> u_via_hodge(const MapState& state, int i, int j);

// 1-D state of the rotationally symmetric reduction f(x1, x2) = (h(x1), x2)
// between a unit-curvature sphere domain and a round sphere target of
// curvature target_kappa. Nodes sit at s_i = (i + 1/2) pi / n, matching the
// 2-D latitude rows; ghost nodes reflect oddly through (0, 0) and
// (pi, h_end).
struct RotSym1D {
  int n = 0;
  double target_kappa = 1.0;
  double h_end = 0.0;  // 0 or pi
  double t = 0.0;
  std::vector<double> h;

  double s(int i) const;
  double ghosted(int i) const;  // h at node i, i in [-1, n]
};

// Samples the analytic profile; EndpointViolationError unless h(0) = 0 and
// h(pi) lands on {0, pi} within 1e-8.
RotSym1D make_rotsym_1d(const RotSymShape& shape, int n, double target_kappa);

// Velocity of the reduced parabolic equation at every node.
std::vector<double> rotsym_velocity(const RotSym1D& st);

// One explicit step (Euler or Heun to match the 2-D integrator family).
void rotsym_step(RotSym1D& st, double dt, bool heun);

// Advance to t_end with fixed dt; returns sup |velocity| at the end.
double rotsym_advance(RotSym1D& st, double dt, double t_end, bool heun);

struct RotSymDiag {
  double lambda = 0.0, mu = 0.0;  // meridian / azimuthal stretch factors
  double u1 = 1.0, u2 = 0.0;
};
RotSymDiag rotsym_diag(const RotSym1D& st, int i);

// Closed-form reduction of the graph quantities for an analytic profile at
// colatitude s (unit domain sphere, target curvature target_kappa): signed
// stretch factors, projection Jacobians, tensor norms, normal commutator and
// the meridian velocity component.
struct RotSymPointData {
  double s1 = 0.0, s2 = 0.0;  // R h', R sin h / sin s (s1 signed)
  double u1 = 1.0, u2 = 0.0;
  double normA2 = 0.0, normH2 = 0.0;
  double sigma_perp = 0.0;
  double v1 = 0.0;  // chart meridian component of the velocity
};
RotSymPointData rotsym_exact(const RotSymShape& shape, double target_kappa, double s);

// Per-step decay factor of a single sin mode perturbing the identity map of
// the square torus with equal metrics: exp(-2 pi^2 |k|^2 dt). The induced
// metric of the identity graph is twice the domain metric, hence the 1/2 in
// the exponent relative to the plain heat kernel. Amplitudes above 1e-3 are
// outside the linearized regime and rejected.
double linearized_mode_decay(double amplitude, int k1, int k2, double dt);

}  // namespace oracle
}  // namespace graphflow
