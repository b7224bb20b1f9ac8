#include "graphflow/grid.hpp"

#include "graphflow/errors.hpp"

namespace graphflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

int wrap(int v, int n) {
  int r = v % n;
  return r < 0 ? r + n : r;
}
}  // namespace

GridSpec GridSpec::torus(int n1, int n2) {
  if (n1 < 8 || n2 < 8) throw ConfigRejectedError("grid resolution must be at least 8 per axis");
  GridSpec g;
  g.n1 = n1;
  g.n2 = n2;
  g.h1 = 1.0 / n1;
  g.h2 = 1.0 / n2;
  g.polar = false;
  return g;
}

GridSpec GridSpec::sphere(int n1, int n2) {
  if (n1 < 8 || n2 < 8) throw ConfigRejectedError("grid resolution must be at least 8 per axis");
  if (n2 % 2 != 0) throw ConfigRejectedError("sphere grids need even n2 for the pole ghost shift");
  GridSpec g;
  g.n1 = n1;
  g.n2 = n2;
  g.h1 = kPi / n1;
  g.h2 = 2.0 * kPi / n2;
  g.polar = true;
  return g;
}

GridSpec::Resolved GridSpec::resolve(int i, int j) const {
  if (!polar) {
    return {index(wrap(i, n1), wrap(j, n2)), false};
  }
  bool reflected = false;
  if (i < 0) {
    i = -1 - i;
    j += n2 / 2;
    reflected = true;
  } else if (i >= n1) {
    i = 2 * n1 - 1 - i;
    j += n2 / 2;
    reflected = true;
  }
  return {index(i, wrap(j, n2)), reflected};
}

GridSpec grid_for_surface(const SurfaceModel& domain, int n1, int n2) {
  return domain.is_spherical() ? GridSpec::sphere(n1, n2) : GridSpec::torus(n1, n2);
}

}  // namespace graphflow
