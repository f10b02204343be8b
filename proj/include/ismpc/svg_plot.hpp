#pragma once

// Static SVG figures. Output depends only on the inputs (fixed number
// formatting, no timestamps), so identical runs give identical files.

#include "ismpc/simulation.hpp"

#include <string>
#include <vector>

namespace ismpc {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

std::string lineChartSvg(const std::string& title, const std::string& x_label, const std::string& y_label,
                         const std::vector<SvgSeries>& series, int width = 760, int height = 380);

/// Ground-plane view: footprint rectangles of the realized steps, CoM and
/// ZMP paths, and an arrow along the mean disturbance. An optional second
/// run is overlaid with dashed paths.
std::string gaitPlotSvg(const ScenarioResult& result, const ScenarioResult* overlay = nullptr);

/// True vs estimated disturbance for both axes.
std::string disturbancePlotSvg(const ScenarioResult& result);

/// x_u - x_z and y_u - y_z over time.
std::string divergencePlotSvg(const ScenarioResult& result);

}  // namespace ismpc
