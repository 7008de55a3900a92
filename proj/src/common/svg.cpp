#include "odrop/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "odrop/text.hpp"

namespace odrop::svg {

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", std::clamp(r, 0, 255), std::clamp(g, 0, 255), std::clamp(b, 0, 255));
  return buf;
}

std::string coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

Document::Document(double width, double height) : width_(width), height_(height) {}

void Document::rect(double x, double y, double w, double h, const Rgb& fill, std::string_view extra) {
  body_ += "<rect x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" width=\"" + coord(w) + "\" height=\"" + coord(h) +
           "\" fill=\"" + fill.hex() + "\"";
  if (!extra.empty()) body_ += " " + std::string(extra);
  body_ += "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, const Rgb& stroke, double width,
                    std::string_view dash) {
  body_ += "<line x1=\"" + coord(x1) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(x2) + "\" y2=\"" + coord(y2) +
           "\" stroke=\"" + stroke.hex() + "\" stroke-width=\"" + coord(width) + "\"";
  if (!dash.empty()) body_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
  body_ += "/>\n";
}

void Document::polyline(const std::vector<std::pair<double, double>>& points, const Rgb& stroke, double width) {
  body_ += "<polyline fill=\"none\" stroke=\"" + stroke.hex() + "\" stroke-width=\"" + coord(width) + "\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ += ' ';
    body_ += coord(points[i].first) + "," + coord(points[i].second);
  }
  body_ += "\"/>\n";
}

void Document::circle(double cx, double cy, double r, const Rgb& fill) {
  body_ += "<circle cx=\"" + coord(cx) + "\" cy=\"" + coord(cy) + "\" r=\"" + coord(r) + "\" fill=\"" + fill.hex() +
           "\"/>\n";
}

void Document::text(double x, double y, std::string_view content, double size, std::string_view anchor,
                    double rotate) {
  body_ += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-size=\"" + coord(size) +
           "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\"";
  if (rotate != 0.0) body_ += " transform=\"rotate(" + coord(rotate) + " " + coord(x) + " " + coord(y) + ")\"";
  body_ += ">" + escape(content) + "</text>\n";
}

std::string Document::str() const {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(width_) + "\" height=\"" + coord(height_) +
         "\" viewBox=\"0 0 " + coord(width_) + " " + coord(height_) + "\">\n" + body_ + "</svg>\n";
}

std::vector<double> ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + step * 1e-9; v += step) {
    out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
  }
  return out;
}

Rgb palette(std::size_t i) {
  static const Rgb colors[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                               {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

std::string line_plot(const std::vector<Series>& series, const PlotOptions& o) {
  const double left = 70, right = 180, top = 40, bottom = 60;
  const double pw = o.width - left - right, ph = o.height - top - bottom;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x_lo = std::min(x_lo, v), x_hi = std::max(x_hi, v);
    for (double v : s.y) y_lo = std::min(y_lo, v), y_hi = std::max(y_hi, v);
  }
  if (std::isfinite(o.reference_y)) y_lo = std::min(y_lo, o.reference_y), y_hi = std::max(y_hi, o.reference_y);
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1;
  if (!std::isfinite(y_lo)) y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  Document doc(o.width, o.height);
  const Rgb black{0, 0, 0}, grid{220, 220, 220};
  doc.rect(0, 0, o.width, o.height, {255, 255, 255});
  for (double t : ticks(x_lo, x_hi)) {
    doc.line(px(t), top, px(t), top + ph, grid);
    doc.text(px(t), top + ph + 18, format_number(std::round(t * 1e6) / 1e6), 11, "middle");
  }
  for (double t : ticks(y_lo, y_hi)) {
    doc.line(left, py(t), left + pw, py(t), grid);
    doc.text(left - 6, py(t) + 4, format_number(std::round(t * 1e6) / 1e6), 11, "end");
  }
  doc.line(left, top + ph, left + pw, top + ph, black);
  doc.line(left, top, left, top + ph, black);
  if (std::isfinite(o.reference_y)) doc.line(left, py(o.reference_y), left + pw, py(o.reference_y), black, 1.0, "4 3");
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = 0; j < std::min(series[i].x.size(), series[i].y.size()); ++j) {
      pts.emplace_back(px(series[i].x[j]), py(series[i].y[j]));
    }
    doc.polyline(pts, palette(i));
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    doc.line(left + pw + 12, ly, left + pw + 32, ly, palette(i), 2.0);
    doc.text(left + pw + 38, ly + 4, series[i].name, 11);
  }
  doc.text(o.width / 2, 22, o.title, 14, "middle");
  doc.text(left + pw / 2, o.height - 15, o.x_label, 12, "middle");
  doc.text(18, top + ph / 2, o.y_label, 12, "middle", -90);
  return doc.str();
}

}  // namespace odrop::svg
