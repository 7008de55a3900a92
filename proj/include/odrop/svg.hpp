#pragma once

// Small SVG writer: shapes, text, and line plots with axes. Coordinates are
// printed with a fixed precision so that identical inputs give identical
// files.

#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace odrop::svg {

struct Rgb {
  int r = 0, g = 0, b = 0;
  std::string hex() const;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class Document {
 public:
  Document(double width, double height);

  void rect(double x, double y, double w, double h, const Rgb& fill, std::string_view extra = {});
  void line(double x1, double y1, double x2, double y2, const Rgb& stroke, double width = 1.0,
            std::string_view dash = {});
  void polyline(const std::vector<std::pair<double, double>>& points, const Rgb& stroke, double width = 1.5);
  void circle(double cx, double cy, double r, const Rgb& fill);
  // anchor: start, middle or end.
  void text(double x, double y, std::string_view content, double size = 12.0, std::string_view anchor = "start",
            double rotate = 0.0);

  std::string str() const;

 private:
  double width_;
  double height_;
  std::string body_;
};

std::string escape(std::string_view text);
// Fixed two-decimal formatting used for coordinates.
std::string coord(double v);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 720;
  double height = 480;
  // Optional horizontal reference line (e.g. a baseline); NaN disables it.
  double reference_y = std::numeric_limits<double>::quiet_NaN();
};

// Line plot of every series with shared axes and a legend.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

// "Nice" tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 6);

// Categorical palette used for series.
Rgb palette(std::size_t i);

}  // namespace odrop::svg
