#include "csb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "csb/errors.hpp"

namespace csb {

namespace {

std::string fmt(double x, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;

  double map(double v) const { return log ? std::log10(v) : v; }
  bool drawable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  // Tick positions in mapped units.
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double d = std::ceil(lo - 1e-9); d <= hi + 1e-9; d += 1.0) out.push_back(d);
      if (out.size() >= 2) return out;
      out.clear();
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) out.push_back(v);
    return out;
  }

  std::string label(double mapped) const {
    if (log) {
      const double r = std::round(mapped);
      if (std::abs(mapped - r) < 1e-9) return "1e" + fmt(r, "%.0f");
      return fmt(std::pow(10.0, mapped), "%.3g");
    }
    return fmt(mapped, "%.4g");
  }
};

}  // namespace

std::string svg_line_plot(const PlotSpec& spec, std::span<const PlotSeries> series) {
  Axis ax{spec.log_x}, ay{spec.log_y};
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!ax.drawable(s.x[i]) || !ay.drawable(s.y[i])) continue;
      xmin = std::min(xmin, ax.map(s.x[i]));
      xmax = std::max(xmax, ax.map(s.x[i]));
      ymin = std::min(ymin, ay.map(s.y[i]));
      ymax = std::max(ymax, ay.map(s.y[i]));
    }
  if (!(xmin <= xmax) || !(ymin <= ymax)) throw InvalidArgument("svg plot: no drawable points");
  const auto pad = [](double& lo, double& hi) {
    if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) {
      lo -= 0.5 + 0.05 * std::abs(lo);
      hi += 0.5 + 0.05 * std::abs(hi);
    }
    const double m = 0.04 * (hi - lo);
    lo -= m;
    hi += m;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  ax.lo = xmin, ax.hi = xmax, ay.lo = ymin, ay.hi = ymax;

  const double left = 78, right = 20, top = 36, bottom = 52;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  const auto px = [&](double v) { return left + (v - ax.lo) / (ax.hi - ax.lo) * pw; };
  const auto py = [&](double v) { return top + ph - (v - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
    << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt(spec.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    o << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(x) << "\" y2=\""
      << fmt(top + ph + 5) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
      << escape(ax.label(t)) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    o << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(y)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
      << escape(ay.label(t)) << "</text>\n";
  }
  o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(spec.height - 12.0)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fmt(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  int row = 0;
  for (const auto& s : series) {
    std::ostringstream pts;
    int count = 0;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!ax.drawable(s.x[i]) || !ay.drawable(s.y[i])) continue;
      pts << (count++ ? " " : "") << fmt(px(ax.map(s.x[i]))) << ',' << fmt(py(ay.map(s.y[i])));
    }
    if (count == 0) continue;
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    const double ly = top + 14 + 16 * row++;
    o << "<line x1=\"" << fmt(left + pw - 150) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(left + pw - 126)
      << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>";
    o << "<text x=\"" << fmt(left + pw - 120) << "\" y=\"" << fmt(ly) << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace csb
