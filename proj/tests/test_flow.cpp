#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphflow/errors.hpp"
#include "graphflow/flow.hpp"
#include "graphflow/oracle.hpp"

#include <cmath>
#include <limits>

using namespace graphflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

SurfaceModel unit_torus() { return SurfaceModel::flat_torus(Mat2::identity()); }

MapState mode_state(int n, double amp, int k1, int k2) {
  SurfaceModel t = unit_torus();
  FourierMode m{k1, k2, amp, 0.0, {1.0, 0.0}};
  return make_torus_map(t, t, GridSpec::torus(n, n), Mat2::identity(), {m});
}

double mode_coeff(const MapState& s, int k1, int k2) {
  const GridSpec& g = s.grid;
  double acc = 0.0;
  for (int i = 0; i < g.n1; ++i)
    for (int j = 0; j < g.n2; ++j) {
      Vec2 x{g.x1(i), g.x2(j)};
      Vec3 ident = lift3(s.target.reduce_chart(x));
      Vec3 disp = target_displacement(s.target, ident, s.values[g.index(i, j)]);
      acc += disp.x * std::sin(2.0 * kPi * (k1 * x.x + k2 * x.y));
    }
  return 2.0 * acc / (double(g.n1) * g.n2);
}

double state_distance(const MapState& a, const MapState& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.values.size(); ++k)
    worst = std::max(worst, target_distance(a.target, a.values[k], b.values[k]));
  return worst;
}
}  // namespace

TEST_CASE("stable_dt reproduces the hand formula on the identity graph") {
  SurfaceModel t = unit_torus();
  FlowConfig cfg;
  cfg.cfl = 0.25;
  cfg.t_max = 1e9;
  MapState s = make_identity_map(t, t, GridSpec::torus(64, 64));
  // g = 2 I so tr(g^{-1}) = 1; dt = cfl h^2 / tr
  double h = 1.0 / 64.0;
  CHECK(stable_dt(s, cfg) == doctest::Approx(0.25 * h * h).epsilon(1e-12));

  MapState s2 = make_identity_map(t, t, GridSpec::torus(128, 128));
  CHECK(stable_dt(s, cfg) / stable_dt(s2, cfg) == doctest::Approx(4.0).epsilon(1e-10));

  // clipped to the remaining time
  cfg.t_max = 1e-9;
  CHECK(stable_dt(s, cfg) == doctest::Approx(1e-9));
}

TEST_CASE("step leaves stationary states unchanged") {
  SurfaceModel t = unit_torus();
  FlowConfig cfg;
  MapState id = make_identity_map(t, t, GridSpec::torus(64, 64));
  double dt = stable_dt(id, cfg);
  MapState next = id;
  for (int k = 0; k < 100; ++k) {
    MapState stepped = step(next, dt, cfg);
    CHECK(state_distance(stepped, next) <= 1e-12);  // per-step drift
    next = stepped;
  }
  CHECK(state_distance(next, id) <= 1e-10);

  SurfaceModel sp = SurfaceModel::round_sphere(1.0);
  MapState c = make_constant_map(sp, sp, GridSpec::sphere(16, 16), {0.9, 1.4});
  MapState c1 = step(c, 1e-4, cfg);
  CHECK(state_distance(c1, c) <= 1e-14);
}

TEST_CASE("one Euler step damps a small mode by the linearized factor") {
  const int n = 64;
  const double amp = 1e-3, dt = 5e-5;
  FlowConfig cfg;
  cfg.integrator = Integrator::Euler;
  MapState s = mode_state(n, amp, 1, 0);
  REQUIRE(dt <= stable_dt(s, cfg));
  double before = mode_coeff(s, 1, 0);
  MapState after = step(s, dt, cfg);
  double factor = mode_coeff(after, 1, 0) / before;
  double predicted = oracle::linearized_mode_decay(amp, 1, 0, dt);
  CHECK(std::abs(factor / predicted - 1.0) <= 1e-4);
}

TEST_CASE("step raises on non-finite values and broken states") {
  MapState s = mode_state(16, 0.05, 1, 0);
  FlowConfig cfg;
  cfg.integrator = Integrator::Euler;

  // poisoned value propagates into the update and is rejected
  MapState bad = s;
  bad.values[40].x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step(bad, 1e-5, cfg), NonFiniteValueError);

  // a step far beyond stability shreds the state; some guard error surfaces
  CHECK_THROWS_AS(
      {
        MapState x = s;
        for (int k = 0; k < 60; ++k) x = step(x, 50.0, cfg);
      },
      Error);
}

TEST_CASE("run converges immediately on the identity graph") {
  SurfaceModel t = unit_torus();
  FlowConfig cfg;
  cfg.t_max = 1.0;
  MapState id = make_identity_map(t, t, GridSpec::torus(64, 64));
  Trajectory traj = run(id, cfg);
  CHECK(traj.termination == Termination::Converged);
  CHECK(traj.records.size() == 1);
  CHECK(traj.records[0].t == 0.0);
  CHECK(traj.records[0].max_normH2 <= 1e-20);
  CHECK(traj.total_steps == 0);
}

TEST_CASE("run rejects a curvature-hypothesis violation") {
  SurfaceModel t = unit_torus();
  SurfaceModel sp = SurfaceModel::round_sphere(1.0);
  MapState s = make_constant_map(t, sp, GridSpec::torus(16, 16), {1.0, 1.0});
  FlowConfig cfg;
  CHECK_THROWS_AS(run(s, cfg), ConfigRejectedError);
}

TEST_CASE("guards terminate the run with the matching reason") {
  MapState s = mode_state(32, 0.03, 1, 0);
  FlowConfig cfg;
  cfg.t_max = 1.0;

  FlowConfig floor_cfg = cfg;
  floor_cfg.u1_floor = 0.1;
  SurfaceModel t = unit_torus();
  // 3.2 Id has u1 = 1/(1 + 3.2^2) < 0.1 everywhere
  MapState stretched =
      make_torus_map(t, t, GridSpec::torus(32, 32), Mat2{{{3.2, 0.0}, {0.0, 3.2}}});
  Trajectory lost = run(stretched, floor_cfg);
  CHECK(lost.termination == Termination::GraphicalityLoss);

  FlowConfig guard_cfg = cfg;
  guard_cfg.blowup_guard = 1e-12;
  Trajectory tripped = run(s, guard_cfg);
  CHECK(tripped.termination == Termination::BlowupGuard);

  FlowConfig budget_cfg = cfg;
  budget_cfg.t_max = 1e-4;
  Trajectory timed = run(s, budget_cfg);
  CHECK(timed.termination == Termination::MaxTime);
  CHECK(timed.final_state.t == doctest::Approx(1e-4));
}

TEST_CASE("perturbed contraction flows to an affine map") {
  SurfaceModel t = unit_torus();
  // directions not aligned with the wavevectors keep the graph genuinely
  // curved (separable perturbations have an exactly flat product metric)
  FourierMode m1{1, 0, 0.02, 0.0, {0.6, 0.8}};
  FourierMode m2{0, 1, 0.02, 0.7, {-0.8, 0.6}};
  MapState s = make_torus_map(t, t, GridSpec::torus(32, 32), 0.8 * Mat2::identity(), {m1, m2});
  FlowConfig cfg;
  cfg.t_max = 2.0;
  cfg.record_every = 40;
  Trajectory traj = run(s, cfg);
  CHECK(traj.termination == Termination::Converged);
  CHECK(traj.records.back().max_normA2 <= 10.0 * traj.records[0].gauss_residual_max);
  CHECK(traj.records.back().min_gap >= traj.records[0].min_gap - 1e-6);
  // graphicality held throughout
  for (const auto& r : traj.records) CHECK(r.min_u1 > cfg.u1_floor);

  // affine-fit oracle: with the linear part carried by the twist, the
  // periodic remainder of an affine limit is a constant translation
  const MapState& fin = traj.final_state;
  const GridSpec& g = fin.grid;
  Vec2 first{};
  Vec2 mean{};
  std::vector<Vec2> rem(g.size());
  for (int i = 0; i < g.n1; ++i) {
    for (int j = 0; j < g.n2; ++j) {
      Vec2 x{g.x1(i), g.x2(j)};
      Vec2 pred = fin.torus_twist * x;
      Vec2 p = xy(fin.values[g.index(i, j)]) - pred;
      p = {p.x - std::floor(p.x), p.y - std::floor(p.y)};
      if (i == 0 && j == 0) {
        first = p;
      } else {
        // lift next to the first remainder
        p.x -= std::round(p.x - first.x);
        p.y -= std::round(p.y - first.y);
      }
      rem[g.index(i, j)] = p;
      mean = mean + (1.0 / g.size()) * p;
    }
  }
  double affine_residual = 0.0;
  for (const Vec2& p : rem) affine_residual = std::max(affine_residual, norm(p - mean));
  CHECK(affine_residual <= 1e-6);
}

TEST_CASE("area decreases and its derivative tracks the mean curvature integral") {
  SurfaceModel t = unit_torus();
  FourierMode m{1, 1, 0.05, 0.2, {0.7, 0.3}};
  MapState s = make_torus_map(t, t, GridSpec::torus(32, 32), Mat2::identity(), {m});
  FlowConfig cfg;
  cfg.t_max = 4e-3;
  cfg.record_every = 4;
  Trajectory traj = run(s, cfg);
  REQUIRE(traj.records.size() >= 4);
  for (size_t k = 1; k < traj.records.size(); ++k) {
    CHECK(traj.records[k].area <= traj.records[k - 1].area + 1e-12);
  }
  for (size_t k = 1; k + 1 < traj.records.size(); ++k) {
    const auto& a = traj.records[k - 1];
    const auto& b = traj.records[k];
    const auto& c = traj.records[k + 1];
    double darea = (c.area - a.area) / (c.t - a.t);
    CHECK(std::abs(darea + b.int_H2_gt) <= 0.05 * std::max(1.0, b.int_H2_gt));
  }
}

TEST_CASE("time-step halving: Euler first order, Heun second order") {
  auto final_state = [&](Integrator integ, double dt) {
    MapState s = mode_state(16, 0.05, 1, 0);
    FlowConfig cfg;
    cfg.integrator = integ;
    double t_end = 4e-3;
    while (s.t < t_end - 1e-15) {
      s = step(s, std::min(dt, t_end - s.t), cfg);
    }
    return s;
  };
  double base = 4e-4;
  for (auto integ : {Integrator::Euler, Integrator::Heun}) {
    MapState f1 = final_state(integ, base);
    MapState f2 = final_state(integ, base / 2.0);
    MapState f4 = final_state(integ, base / 4.0);
    double e1 = state_distance(f1, f2);
    double e2 = state_distance(f2, f4);
    double order = std::log2(e1 / e2);
    if (integ == Integrator::Euler) {
      CHECK(order == doctest::Approx(1.0).epsilon(0.25));
    } else {
      CHECK(order == doctest::Approx(2.0).epsilon(0.25));
    }
  }
}

TEST_CASE("sphere cap contraction stays graphical and area decreasing") {
  SurfaceModel sp = SurfaceModel::round_sphere(1.0);
  MapState s = make_rotsym_map(sp, sp, GridSpec::sphere(24, 24), 0, 0.85, 0.05);
  FlowConfig cfg;
  cfg.t_max = 0.3;
  cfg.record_every = 60;
  Trajectory traj = run(s, cfg);
  REQUIRE(traj.records.size() >= 3);
  double gap0 = traj.records[0].min_gap;
  CHECK(gap0 > 0.0);
  for (const auto& r : traj.records) {
    CHECK(r.min_gap >= -1e-6);
    CHECK(r.min_u1 > cfg.u1_floor);
  }
  // the gap opens along the contraction
  CHECK(traj.records.back().min_gap >= gap0 - 1e-6);
  CHECK(traj.envelope.fitted);
}
