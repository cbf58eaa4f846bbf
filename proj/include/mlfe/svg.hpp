#pragma once

#include <string>
#include <vector>

namespace mlfe {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
};

struct PlotPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Panels side by side as polylines with a bounding box and min/max tick
/// labels. Non-finite points are skipped. Output is deterministic.
std::string render_svg(const std::vector<PlotPanel>& panels, int panel_width = 480,
                       int panel_height = 360);

}  // namespace mlfe
