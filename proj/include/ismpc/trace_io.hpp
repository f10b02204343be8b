#pragma once

// Scenario result serialization.
//
// trace.csv: one header line, then one row per sample, numbers printed with
// 17 significant digits so that parsing reproduces the stored doubles.
// Columns, in order:
//
//   sample, time,
//   x_com, x_com_vel, x_zmp, y_com, y_com_vel, y_zmp,
//   x_zmp_vel, y_zmp_vel,
//   x_dist, y_dist, x_dist_slope, y_dist_slope,
//   x_est_com, x_est_com_vel, x_est_zmp, x_est_dist, x_est_dist_slope,
//   y_est_com, y_est_com_vel, y_est_zmp, y_est_dist, y_est_dist_slope,
//   region_x, region_y, region_orientation, region_violation,
//   x_delta_d, y_delta_d, feasible, qp_iterations, active_set_size
//
// summary.json: scenario name, mode, termination, run metrics, planned and
// realized footsteps and the canonical config.
//
// diagnostics.jsonl: one JSON object per MPC iteration (sample, mode,
// delta_d, rhs, feasible, status, active_set_size, iterations,
// stability_residual, kkt_residual).

#include "ismpc/simulation.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ismpc {

const std::vector<std::string>& traceColumns();

void writeTraceCsv(std::ostream& out, const ScenarioResult& result);
/// Inverse of writeTraceCsv for the per-sample fields listed above.
/// Throws std::runtime_error on malformed input.
std::vector<SampleRecord> readTraceCsv(std::istream& in);

struct RunMetrics {
  Eigen::Vector2d max_divergence = Eigen::Vector2d::Zero();  // max |x_u - x_z|
  double max_region_violation = 0.0;
  Eigen::Vector2d final_estimate_error = Eigen::Vector2d::Zero();  // |d_hat - d| at the last sample
  Eigen::Vector2d max_stability_residual = Eigen::Vector2d::Zero();
  double max_kkt_residual = 0.0;
  int total_qp_iterations = 0;
};

RunMetrics computeMetrics(const ScenarioResult& result);

std::string summaryJson(const ScenarioResult& result, const std::string& config_json);
void writeDiagnosticsJsonl(std::ostream& out, const ScenarioResult& result);

struct TraceDifference {
  double max_com = 0.0;  // max over samples of the planar CoM distance
  double rms_com = 0.0;
  double max_com_after = 0.0;  // same, restricted to t > after_time
  double after_time = 0.0;
  int compared_samples = 0;
};

/// CoM-trace difference over the common samples of two runs.
TraceDifference compareTraces(const ScenarioResult& a, const ScenarioResult& b, double after_time = 2.0);

}  // namespace ismpc
