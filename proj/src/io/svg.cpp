#include "dgc/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dgc::io {

namespace {

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

std::string color(double v, double lo, double hi) {
  double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  // blue (t=0) -> white (t=0.5) -> red (t=1)
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(std::lround(33 + u * (255 - 33)));
    g = static_cast<int>(std::lround(102 + u * (255 - 102)));
    b = static_cast<int>(std::lround(172 + u * (255 - 172)));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(255 + u * (178 - 255)));
    g = static_cast<int>(std::lround(255 + u * (24 - 255)));
    b = static_cast<int>(std::lround(255 + u * (43 - 255)));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string polyline(const std::vector<double>& ys, double x0, double dx, double y_of_lo, double y_scale, double lo,
                     const char* stroke) {
  if (ys.empty()) return {};
  std::ostringstream o;
  o << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i)
    o << (i ? " " : "") << x0 + dx * static_cast<double>(i) << "," << y_of_lo - (ys[i] - lo) * y_scale;
  o << "\"/>\n";
  return o.str();
}

}  // namespace

std::string heatmap_svg(const MatD& values, const std::vector<std::string>& labels, const std::string& title,
                        double lo, double hi) {
  const Eigen::Index n = values.rows(), m = values.cols();
  const int cell = 40, left = 110, top = 50;
  const int width = left + static_cast<int>(m) * cell + 20;
  const int height = top + static_cast<int>(n) * cell + 110;
  std::ostringstream o;
  o.precision(3);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const int x = left + static_cast<int>(j) * cell, y = top + static_cast<int>(i) * cell;
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << color(values(i, j), lo, hi) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">"
        << values(i, j) << "</text>\n";
    }
    const std::string name = static_cast<std::size_t>(i) < labels.size() ? labels[i] : std::to_string(i);
    o << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(i) * cell + cell / 2 + 4
      << "\" text-anchor=\"end\">" << escape(name) << "</text>\n";
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::string name = static_cast<std::size_t>(j) < labels.size() ? labels[j] : std::to_string(j);
    const int x = left + static_cast<int>(j) * cell + cell / 2, y = top + static_cast<int>(n) * cell + 8;
    o << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(60 " << x << " " << y << ")\">" << escape(name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string forecast_svg(const std::vector<ForecastPanel>& panels, const std::string& title) {
  const int width = 760, panel_h = 160, top = 40, left = 60, right = 20, gap = 30;
  const int height = top + static_cast<int>(panels.size()) * (panel_h + gap) + 10;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& p = panels[k];
    const std::size_t len = p.history.size() + std::max(p.truth.size(), p.forecast.size());
    double lo = INFINITY, hi = -INFINITY;
    for (const auto* v : {&p.history, &p.truth, &p.forecast})
      for (double x : *v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double y0 = top + static_cast<double>(k) * (panel_h + gap);
    const double dx = len > 1 ? static_cast<double>(width - left - right) / static_cast<double>(len - 1) : 0.0;
    const double scale = panel_h / (hi - lo);
    const double base = y0 + panel_h;
    const double split_x = left + dx * static_cast<double>(p.history.size());
    o << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << width - left - right << "\" height=\"" << panel_h
      << "\" fill=\"none\" stroke=\"#999\"/>\n"
      << "<line x1=\"" << split_x << "\" y1=\"" << y0 << "\" x2=\"" << split_x << "\" y2=\"" << base
      << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n"
      << "<text x=\"" << left + 4 << "\" y=\"" << y0 + 14 << "\">" << escape(p.name) << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << hi << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << base << "\" text-anchor=\"end\">" << lo << "</text>\n";
    o << polyline(p.history, left, dx, base, scale, lo, "#777");
    o << polyline(p.truth, split_x, dx, base, scale, lo, "#000");
    o << polyline(p.forecast, split_x, dx, base, scale, lo, "#d62728");
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace dgc::io
