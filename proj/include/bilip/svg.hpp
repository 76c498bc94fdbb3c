#pragma once

// Small deterministic SVG plots: curves with CI bars and direction clouds.

#include "bilip/core.hpp"
#include "bilip/germs.hpp"
#include "bilip/io.hpp"
#include "bilip/seatangle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace bilip {

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double ci = 0.0;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "eps";
  std::string y_label;
  bool log_x = true;
  int width = 640;
  int height = 420;
};

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
         std::to_string(size) + "\">" + escape(s) + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const char* stroke = "black",
                        double width = 1.0) {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

inline std::string circle(double x, double y, double r, const char* fill = "#1f5fa8") {
  return "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace svg

/// Line plot with one marker and one CI bar per point.
inline std::string curve_svg(const std::vector<CurvePoint>& pts, const PlotOptions& opt) {
  require(!pts.empty(), "cannot plot an empty curve");
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto tx = [&](double x) { return opt.log_x ? std::log10(x) : x; };
  double x0 = tx(pts.front().x), x1 = x0, y0 = 0.0, y1 = 0.0;
  for (const auto& p : pts) {
    x0 = std::min(x0, tx(p.x));
    x1 = std::max(x1, tx(p.x));
    y1 = std::max(y1, p.y + p.ci);
    y0 = std::min(y0, p.y - p.ci);
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  y1 *= 1.05;
  auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string s = svg::header(opt.width, opt.height);
  s += svg::text(opt.width / 2.0, 22, opt.title, "middle", 14);
  s += svg::line(left, top + ph, left + pw, top + ph);
  s += svg::line(left, top, left, top + ph);
  for (int i = 0; i <= 4; ++i) {
    const double v = y0 + (y1 - y0) * i / 4.0;
    s += svg::line(left - 4, py(v), left, py(v));
    s += svg::text(left - 8, py(v) + 4, svg::tick_label(v), "end", 10);
  }
  for (const auto& p : pts) s += svg::text(px(p.x), top + ph + 16, svg::tick_label(p.x), "middle", 10);
  s += svg::text(left + pw / 2.0, opt.height - 10, opt.x_label + (opt.log_x ? " (log scale)" : ""));
  s += "<text x=\"16\" y=\"" + svg::num(top + ph / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       svg::num(top + ph / 2.0) + ")\">" + svg::escape(opt.y_label) + "</text>\n";

  std::string path;
  for (std::size_t i = 0; i < pts.size(); ++i)
    path += (i ? " L " : "M ") + svg::num(px(pts[i].x)) + " " + svg::num(py(pts[i].y));
  s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1.5\"/>\n";
  for (const auto& p : pts) {
    const double x = px(p.x);
    s += svg::line(x, py(p.y - p.ci), x, py(p.y + p.ci), "#888888");
    s += svg::line(x - 4, py(p.y - p.ci), x + 4, py(p.y - p.ci), "#888888");
    s += svg::line(x - 4, py(p.y + p.ci), x + 4, py(p.y + p.ci), "#888888");
    s += svg::circle(x, py(p.y), 3.5);
  }
  return s + "</svg>\n";
}

inline std::string curve_svg(const VolumeCurve& c, const PlotOptions& opt) {
  std::vector<CurvePoint> pts;
  for (const auto& e : c.entries) pts.push_back({e.eps, e.ratio, e.ci});
  return curve_svg(pts, opt);
}

/// Direction cloud: annotated empty plot, angle histogram on S^1, or two
/// orthographic views (xy and xz) on S^2. Higher dimensions show the first
/// three coordinates.
inline std::string cloud_svg(const SphericalCloud& c, const std::string& title) {
  if (c.empty()) {
    std::string s = svg::header(480, 240);
    s += svg::text(240, 30, title, "middle", 14);
    s += svg::text(240, 130, "∅ (dim −1)", "middle", 28);
    return s + "</svg>\n";
  }
  if (c.ambient_dim == 2) {
    constexpr int kBins = 72;
    std::vector<int> bins(kBins, 0);
    for (const auto& v : c.vectors) {
      double a = std::atan2(v[1], v[0]);
      if (a < 0) a += 2.0 * std::numbers::pi;
      bins[std::min(kBins - 1, static_cast<int>(a / (2.0 * std::numbers::pi) * kBins))]++;
    }
    const int peak = *std::max_element(bins.begin(), bins.end());
    const double left = 50, top = 40, pw = 540, ph = 300;
    std::string s = svg::header(640, 400);
    s += svg::text(320, 22, title, "middle", 14);
    s += svg::line(left, top + ph, left + pw, top + ph);
    for (int b = 0; b < kBins; ++b) {
      const double h = ph * bins[b] / peak;
      s += "<rect x=\"" + svg::num(left + pw * b / kBins) + "\" y=\"" + svg::num(top + ph - h) + "\" width=\"" +
           svg::num(pw / kBins - 1) + "\" height=\"" + svg::num(h) + "\" fill=\"#1f5fa8\"/>\n";
    }
    for (int d = 0; d <= 360; d += 90)
      s += svg::text(left + pw * d / 360.0, top + ph + 16, std::to_string(d) + "°", "middle", 10);
    s += svg::text(320, 390, "angle (" + std::to_string(c.size()) + " directions)");
    return s + "</svg>\n";
  }
  const double r = 130, cy = 190;
  const double cx[2] = {170, 470};
  const int axis2[2] = {1, 2};
  const char* labels[2] = {"x-y view", "x-z view"};
  std::string s = svg::header(640, 360);
  s += svg::text(320, 22, title, "middle", 14);
  for (int p = 0; p < 2; ++p) {
    s += "<circle cx=\"" + svg::num(cx[p]) + "\" cy=\"" + svg::num(cy) + "\" r=\"" + svg::num(r) +
         "\" fill=\"none\" stroke=\"#aaaaaa\"/>\n";
    s += svg::text(cx[p], cy + r + 22, labels[p]);
    for (const auto& v : c.vectors) s += svg::circle(cx[p] + r * v[0], cy - r * v[axis2[p]], 1.2);
  }
  return s + "</svg>\n";
}

inline void emit_plot(const std::string& svg_text, const std::string& path) { write_file(path, svg_text); }

}  // namespace bilip
