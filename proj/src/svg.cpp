#include "mlfe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mlfe {

namespace {

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
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

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, int panel_width, int panel_height) {
  const int width = panel_width * static_cast<int>(std::max<std::size_t>(1, panels.size()));
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(panel_height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double ml = 70, mr = 20, mt = 30, mb = 45;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double ox = static_cast<double>(p) * panel_width;
    const double pw = panel_width - ml - mr, ph = panel_height - mt - mb;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : panel.series) {
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double x) { return ox + ml + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    out += "<g>\n";
    out += "<rect x=\"" + fmt(ox + ml, "%.1f") + "\" y=\"" + fmt(mt, "%.1f") + "\" width=\"" +
           fmt(pw, "%.1f") + "\" height=\"" + fmt(ph, "%.1f") + "\" fill=\"none\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(ox + ml + pw / 2, "%.1f") + "\" y=\"18\" text-anchor=\"middle\">" +
           escape(panel.title) + "</text>\n";
    out += "<text x=\"" + fmt(ox + ml + pw / 2, "%.1f") + "\" y=\"" + fmt(panel_height - 8.0, "%.1f") +
           "\" text-anchor=\"middle\">" + escape(panel.x_label) + "</text>\n";
    out += "<text x=\"" + fmt(ox + 14, "%.1f") + "\" y=\"" + fmt(mt + ph / 2, "%.1f") +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 " + fmt(ox + 14, "%.1f") + " " +
           fmt(mt + ph / 2, "%.1f") + ")\">" + escape(panel.y_label) + "</text>\n";
    // Min and max ticks on both axes.
    out += "<text x=\"" + fmt(ox + ml, "%.1f") + "\" y=\"" + fmt(mt + ph + 15, "%.1f") +
           "\" text-anchor=\"middle\">" + fmt(x0) + "</text>\n";
    out += "<text x=\"" + fmt(ox + ml + pw, "%.1f") + "\" y=\"" + fmt(mt + ph + 15, "%.1f") +
           "\" text-anchor=\"middle\">" + fmt(x1) + "</text>\n";
    out += "<text x=\"" + fmt(ox + ml - 4, "%.1f") + "\" y=\"" + fmt(mt + ph, "%.1f") +
           "\" text-anchor=\"end\">" + fmt(y0) + "</text>\n";
    out += "<text x=\"" + fmt(ox + ml - 4, "%.1f") + "\" y=\"" + fmt(mt + 10, "%.1f") +
           "\" text-anchor=\"end\">" + fmt(y1) + "</text>\n";
    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const auto& s = panel.series[k];
      std::string pts;
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        pts += fmt(sx(s.x[i]), "%.2f") + "," + fmt(sy(s.y[i]), "%.2f") + " ";
      }
      out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      out += "<text x=\"" + fmt(ox + ml + pw - 6, "%.1f") + "\" y=\"" + fmt(mt + 16 + 14.0 * k, "%.1f") +
             "\" text-anchor=\"end\" fill=\"" + s.color + "\">" + escape(s.label) + "</text>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mlfe
