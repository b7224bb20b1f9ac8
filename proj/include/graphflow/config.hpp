#pragma once

#include "graphflow/flow.hpp"
#include "graphflow/mapfield.hpp"

#include <json.hpp>

#include <string>

namespace graphflow {

// Parsed and validated run configuration. Loading rejects unknown keys,
// schema mismatches, out-of-range values and curvature-hypothesis violations
// with ConfigRejectedError.
struct RunConfig {
  SurfaceModel domain;
  SurfaceModel target;
  int n1 = 64, n2 = 64;
  int stencil_order = 2;

  // initial map
  std::string map_family;  // constant | identity | linear | fourier | rotsym | mobius
  ChartCoords constant_point;
  Mat2 linear = Mat2::identity();
  std::vector<FourierMode> modes;
  int rotsym_d = 1;
  double rotsym_a = 0.0, rotsym_c = 0.0;
  double mobius_k = 1.0;

  FlowConfig flow;
  std::string output_dir = "out";

  nlohmann::json echo;  // the validated document, echoed into summaries
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

GridSpec make_grid(const RunConfig& cfg);
MapState build_initial_state(const RunConfig& cfg);

// Same config with grid resolution scaled by `factor` (both axes).
RunConfig with_grid_scale(const RunConfig& cfg, double factor);

}  // namespace graphflow
