#include <cmath>

#include "odrop/error.hpp"
#include "odrop/explain.hpp"
#include "odrop/parallel.hpp"
#include "odrop/text.hpp"

namespace odrop::explain {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one_fraction * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(Path& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total weight of the path with element `index` removed.
double unwound_sum(const Path& path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else if (zero != 0.0) {
      total += path[i].weight / zero * (depth + 1) / static_cast<double>(depth - i);
    }
  }
  return total;
}

struct Walker {
  const gbt::Tree& tree;
  std::span<const double> x;
  double scale;
  std::vector<double>& phi;

  void recurse(int node_id, Path path, int depth, double zero_fraction, double one_fraction, int feature) {
    extend_path(path, depth, zero_fraction, one_fraction, feature);
    const gbt::Node& node = tree.nodes[node_id];
    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        phi[path[i].feature] += w * (path[i].one_fraction - path[i].zero_fraction) * node.value * scale;
      }
      return;
    }
    const double v = x[node.feature];
    const bool left = std::isnan(v) ? node.default_left : v < node.threshold;
    const int hot = left ? node.left : node.right;
    const int cold = left ? node.right : node.left;
    const double total = tree.nodes[node.left].cover + tree.nodes[node.right].cover;
    double incoming_zero = 1.0, incoming_one = 1.0;
    for (int k = 1; k <= depth; ++k) {
      if (path[k].feature == node.feature) {
        incoming_zero = path[k].zero_fraction;
        incoming_one = path[k].one_fraction;
        unwind_path(path, depth, k);
        --depth;
        break;
      }
    }
    recurse(hot, path, depth + 1, incoming_zero * tree.nodes[hot].cover / total, incoming_one, node.feature);
    recurse(cold, path, depth + 1, incoming_zero * tree.nodes[cold].cover / total, 0.0, node.feature);
  }
};

void check_covers(const gbt::Forest& forest) {
  if (!forest.has_cover()) {
    throw InvalidArgument("forest carries no training covers; re-fit it before computing SHAP values");
  }
  for (const auto& tree : forest.trees()) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf() && !(tree.nodes[node.left].cover + tree.nodes[node.right].cover > 0.0)) {
        throw InvalidArgument("forest has a split with zero cover; re-fit it before computing SHAP values");
      }
    }
  }
}

ShapValues shap_unchecked(const gbt::Forest& forest, std::span<const double> x) {
  ShapValues out;
  out.values.assign(forest.n_features(), 0.0);
  out.base_value = shap_base_value(forest);
  for (const auto& tree : forest.trees()) {
    const int depth = tree.depth();
    Walker walker{tree, x, forest.eta(), out.values};
    walker.recurse(0, Path(static_cast<std::size_t>(depth) + 2), 0, 1.0, 1.0, -1);
  }
  return out;
}

}  // namespace

double shap_base_value(const gbt::Forest& forest) {
  double sum = 0.0;
  for (const auto& tree : forest.trees()) sum += tree.expected_value();
  return forest.base_score() + forest.eta() * sum;
}

ShapValues tree_shap(const gbt::Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw SchemaError("forest expects " + std::to_string(forest.n_features()) + " features, got " +
                      std::to_string(x.size()));
  }
  check_covers(forest);
  return shap_unchecked(forest, x);
}

ShapMatrix shap_matrix(const gbt::Forest& forest, const Matrix& features, std::span<const double> ood_scores,
                       double threshold, std::vector<std::string> row_ids, unsigned jobs) {
  if (features.cols() != forest.n_features()) {
    throw SchemaError("forest expects " + std::to_string(forest.n_features()) + " features, got " +
                      std::to_string(features.cols()));
  }
  if (ood_scores.size() != features.rows()) throw InvalidArgument("one OOD score per row is required");
  if (!row_ids.empty() && row_ids.size() != features.rows()) throw InvalidArgument("one row id per row is required");
  check_covers(forest);
  ShapMatrix out;
  out.values = Matrix(features.rows(), features.cols());
  out.base_value = shap_base_value(forest);
  out.feature_names = forest.feature_names();
  if (out.feature_names.empty()) {
    for (std::size_t c = 0; c < features.cols(); ++c) out.feature_names.push_back("f" + std::to_string(c));
  }
  if (row_ids.empty()) {
    for (std::size_t r = 0; r < features.rows(); ++r) row_ids.push_back(std::to_string(r));
  }
  out.row_ids = std::move(row_ids);
  out.ood_flags.resize(features.rows());
  parallel_for(features.rows(), jobs, [&](std::size_t r) {
    const auto shap = shap_unchecked(forest, features.row(r));
    std::copy(shap.values.begin(), shap.values.end(), out.values.row(r).begin());
    out.ood_flags[r] = ood_scores[r] > threshold ? 1 : 0;
  });
  return out;
}

}  // namespace odrop::explain
