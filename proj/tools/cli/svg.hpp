#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dynbound::cli {

struct SvgPlot {
  std::vector<std::pair<double, double>> points;
  std::string x_label;
  std::string y_label;
  std::string title;
};

inline constexpr int kSvgWidth = 800;
inline constexpr int kSvgHeight = 600;
inline constexpr std::size_t kMaxPolylinePoints = 20000;

/// Every stride-th point plus the last one, so at most `max_points` remain.
std::vector<std::pair<double, double>> decimate(const std::vector<std::pair<double, double>>& pts,
                                                std::size_t max_points = kMaxPolylinePoints);

/// Self-contained 800x600 line plot with auto-scaled axes.
void write_svg(std::ostream& out, const SvgPlot& plot);

}  // namespace dynbound::cli
