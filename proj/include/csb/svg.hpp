#pragma once

// Minimal SVG line plots.

#include <span>
#include <string>
#include <vector>

namespace csb {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label, y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640, height = 420;
};

// Points that cannot be drawn (non-finite, or nonpositive on a log axis) are
// skipped. Throws InvalidArgument when nothing is drawable.
std::string svg_line_plot(const PlotSpec& spec, std::span<const PlotSeries> series);

}  // namespace csb
