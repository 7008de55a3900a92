#include <algorithm>
#include <cstdint>
#include <limits>
#include <cmath>
#include <numeric>

#include "odrop/error.hpp"
#include "odrop/gbt.hpp"

namespace odrop::gbt {
namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  bool valid = false;
};

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

// Per-node scratch while one feature is scanned.
struct ScanState {
  double g_left = 0.0;
  double h_left = 0.0;
  double g_missing = 0.0;
  double h_missing = 0.0;
  bool has_missing = false;
  double last_value = 0.0;
  bool seen = false;
};

// Present rows of one feature ascending by value (stable by index), with
// the values stored alongside so the scan reads memory in order.
struct SortedFeature {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
  std::vector<std::uint32_t> missing;
};

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

double leaf_weight(const NodeStats& s, double lambda) {
  const double denom = s.h + lambda;
  if (denom <= 0.0) return 0.0;
  return std::clamp(-s.g / denom, -kWeightClip, kWeightClip);
}

double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid > lo ? mid : hi;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<SortedFeature>& sorted, const BoostConfig& config)
      : x_(x), sorted_(sorted), config_(config) {}

  Tree build(std::span<const double> g, std::span<const double> h, std::vector<int>& leaf_of_row) {
    const std::size_t n = x_.rows();
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<int> position(n, 0);
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
      stats[0].g += g[i];
      stats[0].h += h[i];
    }
    stats[0].count = n;
    std::vector<int> frontier{0};

    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
      // slot of each frontier node, -1 for nodes no longer expandable
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot[frontier[s]] = static_cast<int>(s);
      std::vector<SplitCandidate> best(frontier.size());
      std::vector<ScanState> scan(frontier.size());
      std::vector<double> parent(frontier.size());
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        parent[s] = score(stats[frontier[s]].g, stats[frontier[s]].h, config_.lambda);
      }

      for (std::size_t f = 0; f < x_.cols(); ++f) {
        const SortedFeature& sf = sorted_[f];
        for (auto& s : scan) s = ScanState{};
        for (std::uint32_t row : sf.missing) {
          const int p = position[row];
          if (p < 0 || slot[p] < 0) continue;
          auto& s = scan[slot[p]];
          s.g_missing += g[row];
          s.h_missing += h[row];
          s.has_missing = true;
        }
        const std::size_t present = sf.rows.size();
        for (std::size_t q = 0; q < present; ++q) {
          const std::uint32_t row = sf.rows[q];
          const int p = position[row];
          if (p < 0) continue;
          const int sl = slot[p];
          if (sl < 0) continue;
          auto& s = scan[static_cast<std::size_t>(sl)];
          const double v = sf.values[q];
          if (s.seen && v > s.last_value) {
            const auto su = static_cast<std::size_t>(sl);
            evaluate(stats[p], parent[su], s, static_cast<int>(f), s.last_value, v, best[su]);
          }
          s.g_left += g[row];
          s.h_left += h[row];
          s.last_value = v;
          s.seen = true;
        }
      }

      std::vector<int> next;
      std::vector<int> split_left(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const int id = frontier[s];
        if (!best[s].valid) continue;
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stats.resize(tree.nodes.size());
        Node& node = tree.nodes[id];
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.default_left = best[s].default_left;
        node.left = left;
        node.right = left + 1;
        node.gain = best[s].gain;
        split_left.resize(tree.nodes.size(), -1);
        split_left[id] = left;
        next.push_back(left);
        next.push_back(left + 1);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const int p = position[i];
        if (p < 0 || split_left[p] < 0) continue;
        const Node& node = tree.nodes[p];
        const double v = x_(i, static_cast<std::size_t>(node.feature));
        const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
        const int child = go_left ? node.left : node.right;
        position[i] = child;
        stats[child].g += g[i];
        stats[child].h += h[i];
        ++stats[child].count;
      }
      frontier = std::move(next);
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      Node& node = tree.nodes[id];
      node.cover = static_cast<double>(stats[id].count);
      node.hessian = stats[id].h;
      if (node.is_leaf()) node.value = leaf_weight(stats[id], config_.lambda);
    }
    leaf_of_row.assign(position.begin(), position.end());
    return tree;
  }

 private:
  // The threshold is the midpoint of the two adjacent values lo < hi.
  void evaluate(const NodeStats& node, double parent, const ScanState& s, int feature, double lo, double hi,
                SplitCandidate& best) const {
    const double lambda = config_.lambda;
    // Missing rows to the left first, so nodes without missing values keep
    // default_left = true and skip the second direction.
    for (int dir = 0; dir < (s.has_missing ? 2 : 1); ++dir) {
      const bool default_left = dir == 0;
      const double gl = s.g_left + (default_left ? s.g_missing : 0.0);
      const double hl = s.h_left + (default_left ? s.h_missing : 0.0);
      const double gr = node.g - gl;
      const double hr = node.h - hl;
      if (hl < config_.min_child_weight || hr < config_.min_child_weight) continue;
      const double gain = 0.5 * (score(gl, hl, lambda) + score(gr, hr, lambda) - parent);
      if (gain > 0.0 && (!best.valid || gain > best.gain)) {
        best = {gain, feature, midpoint(lo, hi), default_left, true};
      }
    }
  }

  const Matrix& x_;
  const std::vector<SortedFeature>& sorted_;
  const BoostConfig& config_;
};

}  // namespace

Forest fit_gbt(const Matrix& features, std::span<const int> labels, const BoostConfig& config,
               std::vector<std::string> feature_names) {
  config.validate();
  if (labels.size() != features.rows()) throw InvalidArgument("label count does not match the row count");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t n = labels.size();
  if (positives == 0 || positives == n) throw InvalidArgument("fit_gbt needs examples of both classes");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("fit_gbt supports at most 2^32-1 rows");

  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  Forest forest(features.cols(), std::log(prior / (1.0 - prior)), config, std::move(feature_names));

  std::vector<SortedFeature> sorted(features.cols());
  for (std::size_t f = 0; f < features.cols(); ++f) {
    auto& sf = sorted[f];
    for (std::size_t i = 0; i < n; ++i) {
      (std::isnan(features(i, f)) ? sf.missing : sf.rows).push_back(static_cast<std::uint32_t>(i));
    }
    std::stable_sort(sf.rows.begin(), sf.rows.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return features(a, f) < features(b, f); });
    sf.values.reserve(sf.rows.size());
    for (std::uint32_t r : sf.rows) sf.values.push_back(features(r, f));
  }
  std::vector<double> margin(n, forest.base_score());
  std::vector<double> g(n), h(n);
  std::vector<int> leaf_of_row;
  TreeBuilder builder(features, sorted, config);
  for (int round = 0; round < config.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-margin[i]));
      g[i] = p - labels[i];
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    Tree tree = builder.build(g, h, leaf_of_row);
    for (std::size_t i = 0; i < n; ++i) margin[i] += config.eta * tree.nodes[leaf_of_row[i]].value;
    forest.add_tree(std::move(tree));
  }
  return forest;
}

}  // namespace odrop::gbt
