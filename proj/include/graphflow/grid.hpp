#pragma once

#include "graphflow/surface.hpp"

namespace graphflow {

// Structured chart grid. Torus grids are periodic in both axes over the
// fundamental domain [0,1)^2. Sphere grids offset the latitude rows half a
// cell from the poles and are periodic in longitude only; stencil rows past a
// pole resolve through the longitude-shift rule
//   value(-x1, x2) = value(x1, x2 + pi).
struct GridSpec {
  int n1 = 0, n2 = 0;
  double h1 = 0.0, h2 = 0.0;
  bool polar = false;  // sphere grid (pole ghost rows), else torus

  static GridSpec torus(int n1, int n2);
  static GridSpec sphere(int n1, int n2);  // n2 must be even

  double x1(int i) const { return polar ? (i + 0.5) * h1 : i * h1; }
  double x2(int j) const { return j * h2; }
  ChartCoords point(int i, int j) const { return {x1(i), x2(j)}; }

  int index(int i, int j) const { return i * n2 + j; }
  long size() const { return static_cast<long>(n1) * n2; }

  // Resolves a stencil coordinate (i possibly in [-n1, 2*n1), any j) to a
  // stored sample. `reflected` reports a pole crossing, where chart-tensor
  // components transform with dx1 -> -dx1 (sign flip on mixed components);
  // plain point values copy through unchanged.
  struct Resolved {
    int index;
    bool reflected;
  };
  Resolved resolve(int i, int j) const;
};

GridSpec grid_for_surface(const SurfaceModel& domain, int n1, int n2);

}  // namespace graphflow
