#pragma once

// Gradient-boosted decision trees for binary classification: second-order
// boosting on the logistic loss with exact greedy, sparsity-aware split
// finding, plus grid search and recursive feature elimination.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "odrop/matrix.hpp"

namespace odrop::gbt {

// Leaf weights (and margins fed to the sigmoid) are clipped to this bound.
inline constexpr double kWeightClip = 30.0;

struct BoostConfig {
  int n_estimators = 100;
  int max_depth = 4;
  double min_child_weight = 1.0;
  double lambda = 1.0;  // L2 penalty on leaf weights
  double eta = 0.3;     // learning rate
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static BoostConfig from_json(const nlohmann::json& doc);

  friend bool operator==(const BoostConfig&, const BoostConfig&) = default;
};

struct GridSpec {
  std::vector<int> n_estimators{50, 100, 200};
  std::vector<int> max_depth{2, 4, 6};
  std::vector<double> min_child_weight{1.0, 2.0, 3.0};

  void validate() const;
  // Cross product in (n_estimators, max_depth, min_child_weight) nesting
  // order; eta, lambda and seed are copied from `base`.
  std::vector<BoostConfig> candidates(const BoostConfig& base) const;
};

struct Node {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // x < threshold goes left
  bool default_left = true;  // route for missing values
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf weight (before the learning rate)
  double cover = 0.0;  // training rows reaching the node
  double hessian = 0.0;
  double gain = 0.0;  // split gain, 0 for leaves

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root

  int leaf_index(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }
  // Cover-weighted mean leaf value.
  double expected_value() const;
  int depth() const;
};

class Forest {
 public:
  Forest() = default;
  Forest(std::size_t n_features, double base_score, BoostConfig config,
         std::vector<std::string> feature_names = {});

  // Appends a tree after checking its structure; leaf values are clipped to
  // +-kWeightClip and must not be NaN.
  void add_tree(Tree tree);

  std::size_t n_features() const { return n_features_; }
  double base_score() const { return base_score_; }
  double eta() const { return config_.eta; }
  const BoostConfig& config() const { return config_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<Tree>& trees() const { return trees_; }
  // Whether node covers came from training (required by TreeSHAP).
  bool has_cover() const { return has_cover_; }
  void set_has_cover(bool v) { has_cover_ = v; }

  // base_score + eta * sum of the first `tree_limit` tree outputs.
  double margin(std::span<const double> x, std::size_t tree_limit = kAllTrees) const;
  std::vector<double> predict_margin(const Matrix& x, std::size_t tree_limit = kAllTrees) const;
  std::vector<double> predict_proba(const Matrix& x, std::size_t tree_limit = kAllTrees) const;
  // Total split gain per feature.
  std::vector<double> feature_gain() const;

  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& doc);

  static constexpr std::size_t kAllTrees = std::numeric_limits<std::size_t>::max();

 private:
  void check_width(std::size_t cols) const;

  std::size_t n_features_ = 0;
  double base_score_ = 0.0;
  BoostConfig config_;
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
  bool has_cover_ = true;
};

double sigmoid(double margin);
double log_loss(std::span<const double> probabilities, std::span<const int> labels);

// Missing cells are NaN.
Forest fit_gbt(const Matrix& features, std::span<const int> labels, const BoostConfig& config,
               std::vector<std::string> feature_names = {});

struct GridPoint {
  BoostConfig config;
  double mean_auroc = 0.0;
  std::vector<double> fold_auroc;
};

struct GridResult {
  BoostConfig best;
  std::vector<GridPoint> points;  // candidate order
};

// k-fold stratified CV over every grid candidate, selecting the largest mean
// validation AUROC; ties prefer fewer trees, then shallower trees, then a
// larger min_child_weight. Configurations differing only in n_estimators
// share one fit per fold, since boosting rounds are deterministic prefixes.
GridResult grid_search(const Matrix& features, std::span<const int> labels, const GridSpec& grid,
                       std::size_t k, std::uint64_t seed, const BoostConfig& base = {}, unsigned jobs = 1);

// Recursive feature elimination by total split gain. `step` defaults to 10%
// of the remaining features (at least one); the last round is clamped to
// land exactly on target_k. Returns ascending column indices.
std::vector<std::size_t> rfe(const Matrix& features, std::span<const int> labels, std::size_t target_k,
                             std::optional<std::size_t> step, const BoostConfig& config);

}  // namespace odrop::gbt
