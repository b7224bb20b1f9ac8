#pragma once

#include "graphflow/bounds.hpp"
#include "graphflow/flow.hpp"

#include <json.hpp>

#include <string>

namespace graphflow {

// series.csv columns, in order:
//   t, dt, min_rho, min_gap, min_u1, max_normA2, max_normH2, area,
//   dArea_dt_est, int_normA2_gt, int_normA2_gM, gauss_residual_max,
//   envelope_value, envelope_margin
// dArea_dt_est is the centered difference of the area series over record
// times (one-sided at the ends); envelope columns are nan when no envelope
// was fitted.
void write_series_csv(const std::string& path, const Trajectory& traj);

nlohmann::json summary_json(const Trajectory& traj, const DecayReport& report,
                            LimitClass classification, const nlohmann::json& config_echo,
                            double wall_seconds);

void write_json(const std::string& path, const nlohmann::json& doc);

}  // namespace graphflow
