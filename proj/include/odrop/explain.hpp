#pragma once

// Attribution and clustering for the boosted-tree predictor: path-dependent
// TreeSHAP, Ward agglomerative clustering of attribution rows, and a
// dendrogram-ordered heatmap.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "odrop/gbt.hpp"
#include "odrop/matrix.hpp"

namespace odrop::explain {

struct ShapValues {
  std::vector<double> values;  // one per feature, log-odds units
  double base_value = 0.0;
};

// Expected margin under the cover-weighted path distribution:
// base_score + eta * sum of tree expected values.
double shap_base_value(const gbt::Forest& forest);

// Exact Shapley values of the forest margin under the path-dependent value
// function. Throws InvalidArgument when the forest has no training covers.
ShapValues tree_shap(const gbt::Forest& forest, std::span<const double> x);

struct ShapMatrix {
  Matrix values;  // rows x features
  double base_value = 0.0;
  std::vector<std::string> row_ids;
  std::vector<std::string> feature_names;
  std::vector<std::uint8_t> ood_flags;  // score > threshold
};

// Rows are attributed independently on up to `jobs` threads. Empty row_ids
// are replaced by the row numbers.
ShapMatrix shap_matrix(const gbt::Forest& forest, const Matrix& features, std::span<const double> ood_scores,
                       double threshold, std::vector<std::string> row_ids = {}, unsigned jobs = 1);

struct Merge {
  std::size_t a = 0;  // cluster ids: leaves 0..n-1, merge s creates n + s
  std::size_t b = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;

  nlohmann::json to_json() const;
};

// Ward linkage through Lance-Williams updates of squared Euclidean
// distances; reported distances are the square roots of the updated values.
// Equal distances resolve to the smallest (i, j) pair of active slots, where
// a merged cluster takes the smaller slot.
Dendrogram ward_cluster(const Matrix& points);

// Feature-by-row matrix used to cluster the heatmap columns: |SHAP| by
// default, signed values when `absolute` is false.
Matrix column_profiles(const ShapMatrix& shap, bool absolute = true);

struct HeatmapOptions {
  double cell_width = 14;
  double cell_height = 4;
  // Colors saturate at this quantile of |value|.
  double clip_quantile = 0.99;
};

// Diverging blue-white-red mapping of v / limit; limit <= 0 maps everything
// to white.
struct Rgb8 {
  int r, g, b;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};
Rgb8 diverging_color(double v, double limit);
double clip_limit(const Matrix& values, double quantile);

// SVG heatmap in dendrogram leaf order with an ID/OOD strip on the left.
std::string heatmap_svg(const ShapMatrix& shap, const Dendrogram& rows, const Dendrogram& cols,
                        const HeatmapOptions& options = {});
// The reordered matrix as CSV: row_id, ood flag, then the features in
// column leaf order.
std::string heatmap_csv(const ShapMatrix& shap, const Dendrogram& rows, const Dendrogram& cols);

}  // namespace odrop::explain
