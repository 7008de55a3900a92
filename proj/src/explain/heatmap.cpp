#include <algorithm>
#include <cmath>
#include <sstream>

#include "odrop/error.hpp"
#include "odrop/explain.hpp"
#include "odrop/stats.hpp"
#include "odrop/svg.hpp"
#include "odrop/text.hpp"

namespace odrop::explain {
namespace {

void check_shapes(const ShapMatrix& shap, const Dendrogram& rows, const Dendrogram& cols) {
  if (rows.leaf_order.size() != shap.values.rows() || cols.leaf_order.size() != shap.values.cols()) {
    throw SchemaError("dendrogram leaf counts do not match the SHAP matrix shape");
  }
}

}  // namespace

Matrix column_profiles(const ShapMatrix& shap, bool absolute) {
  const Matrix& v = shap.values;
  Matrix out(v.cols(), v.rows());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) out(c, r) = absolute ? std::abs(v(r, c)) : v(r, c);
  }
  return out;
}

Rgb8 diverging_color(double v, double limit) {
  if (!(limit > 0.0)) return {255, 255, 255};
  const double t = std::clamp(v / limit, -1.0, 1.0);
  // White at 0, (33, 102, 172) at -1, (178, 24, 43) at +1.
  const double a = std::abs(t);
  const auto mix = [a](int end) { return static_cast<int>(std::lround(255.0 + (end - 255.0) * a)); };
  return t < 0 ? Rgb8{mix(33), mix(102), mix(172)} : Rgb8{mix(178), mix(24), mix(43)};
}

double clip_limit(const Matrix& values, double q) {
  if (values.empty()) return 0.0;
  std::vector<double> mags(values.values().size());
  std::transform(values.values().begin(), values.values().end(), mags.begin(), [](double v) { return std::abs(v); });
  return stats::quantile(mags, q);
}

std::string heatmap_svg(const ShapMatrix& shap, const Dendrogram& rows, const Dendrogram& cols,
                        const HeatmapOptions& o) {
  check_shapes(shap, rows, cols);
  const double limit = clip_limit(shap.values, o.clip_quantile);
  const double strip = 12, left = 20 + strip, top = 110, right = 20, bottom = 60;
  const double width = left + o.cell_width * static_cast<double>(shap.values.cols()) + right;
  const double height = top + o.cell_height * static_cast<double>(shap.values.rows()) + bottom;
  svg::Document doc(std::max(width, 240.0), height);
  doc.rect(0, 0, std::max(width, 240.0), height, {255, 255, 255});
  for (std::size_t i = 0; i < rows.leaf_order.size(); ++i) {
    const std::size_t r = rows.leaf_order[i];
    const double y = top + o.cell_height * static_cast<double>(i);
    const svg::Rgb flag = shap.ood_flags.size() > r && shap.ood_flags[r] ? svg::Rgb{0, 0, 0} : svg::Rgb{200, 200, 200};
    doc.rect(left - strip - 2, y, strip, o.cell_height, flag);
    for (std::size_t j = 0; j < cols.leaf_order.size(); ++j) {
      const std::size_t c = cols.leaf_order[j];
      const Rgb8 color = diverging_color(shap.values(r, c), limit);
      doc.rect(left + o.cell_width * static_cast<double>(j), y, o.cell_width, o.cell_height,
               {color.r, color.g, color.b});
    }
  }
  for (std::size_t j = 0; j < cols.leaf_order.size(); ++j) {
    const std::size_t c = cols.leaf_order[j];
    const std::string name = c < shap.feature_names.size() ? shap.feature_names[c] : std::to_string(c);
    doc.text(left + o.cell_width * (static_cast<double>(j) + 0.5), top - 6, name, 9, "start", -60);
  }
  const double legend_y = height - bottom + 20;
  doc.text(left, legend_y + 20, "color limit +-" + format_number(limit) + " (black strip: OOD)", 10);
  for (int i = 0; i <= 20; ++i) {
    const Rgb8 c = diverging_color((i - 10) / 10.0 * limit, limit);
    doc.rect(left + 8.0 * i, legend_y, 8, 8, {c.r, c.g, c.b});
  }
  return doc.str();
}

std::string heatmap_csv(const ShapMatrix& shap, const Dendrogram& rows, const Dendrogram& cols) {
  check_shapes(shap, rows, cols);
  std::ostringstream out;
  out << "row_id,ood";
  for (std::size_t c : cols.leaf_order) {
    out << ',' << (c < shap.feature_names.size() ? shap.feature_names[c] : std::to_string(c));
  }
  out << '\n';
  for (std::size_t r : rows.leaf_order) {
    out << (r < shap.row_ids.size() ? shap.row_ids[r] : std::to_string(r)) << ','
        << (shap.ood_flags.size() > r ? static_cast<int>(shap.ood_flags[r]) : 0);
    for (std::size_t c : cols.leaf_order) out << ',' << format_number(shap.values(r, c));
    out << '\n';
  }
  return out.str();
}

}  // namespace odrop::explain
