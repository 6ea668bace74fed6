#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dynbound::cli {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round-number tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
    out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  }
  return out;
}

}  // namespace

std::vector<std::pair<double, double>> decimate(const std::vector<std::pair<double, double>>& pts,
                                                std::size_t max_points) {
  if (pts.size() <= max_points || max_points < 2) return pts;
  const std::size_t stride = (pts.size() - 1 + max_points - 2) / (max_points - 1);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < pts.size(); i += stride) out.push_back(pts[i]);
  if ((pts.size() - 1) % stride != 0) out.push_back(pts.back());
  return out;
}

void write_svg(std::ostream& out, const SvgPlot& plot) {
  const auto pts = decimate(plot.points);
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (!pts.empty()) {
    xlo = xhi = pts.front().first;
    ylo = yhi = pts.front().second;
    for (const auto& [x, y] : pts) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (!(span > 0.0)) span = std::max(1.0, std::abs(lo));
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  const double data_box[4] = {xlo, xhi, ylo, yhi};
  pad(xlo, xhi);
  pad(ylo, yhi);

  const double pw = kSvgWidth - kLeft - kRight;
  const double ph = kSvgHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xlo) / (xhi - xlo) * pw; };
  auto sy = [&](double y) { return kTop + (yhi - y) / (yhi - ylo) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
      << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\">\n"
      << "<desc>" << pts.size() << " points; " << escape(plot.x_label) << " in [" << fmt("%.17g", data_box[0])
      << ", " << fmt("%.17g", data_box[1]) << "]; " << escape(plot.y_label) << " in [" << fmt("%.17g", data_box[2])
      << ", " << fmt("%.17g", data_box[3]) << "]</desc>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!plot.title.empty()) {
    out << "<text x=\"" << kSvgWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << escape(plot.title) << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  out << "<g font-family=\"sans-serif\" font-size=\"11\" stroke=\"none\" fill=\"black\">\n";
  for (double t : ticks(xlo, xhi)) {
    const std::string x = fmt("%.2f", sx(t));
    out << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << fmt("%g", t)
        << "</text>\n";
  }
  for (double t : ticks(ylo, yhi)) {
    const std::string y = fmt("%.2f", sy(t));
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kLeft - 8 << "\" y=\"" << y << "\" text-anchor=\"end\" dominant-baseline=\"middle\">"
        << fmt("%g", t) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kSvgHeight - 12 << "\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << escape(plot.x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n"
      << "</g>\n";

  out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"0.6\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << fmt("%.2f", sx(pts[i].first)) << ',' << fmt("%.2f", sy(pts[i].second));
  }
  out << "\"/>\n</svg>\n";
}

}  // namespace dynbound::cli
