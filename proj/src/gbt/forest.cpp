#include <algorithm>
#include <cmath>
#include <functional>

#include "odrop/error.hpp"
#include "odrop/gbt.hpp"

namespace odrop::gbt {

double sigmoid(double margin) {
  const double m = std::clamp(margin, -kWeightClip, kWeightClip);
  return 1.0 / (1.0 + std::exp(-m));
}

double log_loss(std::span<const double> probabilities, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], 1e-15, 1.0 - 1e-15);
    total -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(labels.size());
}

void BoostConfig::validate() const {
  if (n_estimators < 1) throw InvalidArgument("n_estimators must be at least 1");
  if (max_depth < 1) throw InvalidArgument("max_depth must be at least 1");
  if (!(min_child_weight >= 0.0)) throw InvalidArgument("min_child_weight must be non-negative");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be non-negative");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must lie in (0, 1]");
}

nlohmann::json BoostConfig::to_json() const {
  return {{"n_estimators", n_estimators}, {"max_depth", max_depth}, {"min_child_weight", min_child_weight},
          {"lambda", lambda},             {"eta", eta},             {"seed", seed}};
}

BoostConfig BoostConfig::from_json(const nlohmann::json& doc) {
  BoostConfig c;
  try {
    c.n_estimators = doc.value("n_estimators", c.n_estimators);
    c.max_depth = doc.value("max_depth", c.max_depth);
    c.min_child_weight = doc.value("min_child_weight", c.min_child_weight);
    c.lambda = doc.value("lambda", c.lambda);
    c.eta = doc.value("eta", c.eta);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("boost config: ") + e.what());
  }
  c.validate();
  return c;
}

void GridSpec::validate() const {
  if (n_estimators.empty() || max_depth.empty() || min_child_weight.empty()) {
    throw InvalidArgument("grid candidate lists must be non-empty");
  }
}

std::vector<BoostConfig> GridSpec::candidates(const BoostConfig& base) const {
  validate();
  std::vector<BoostConfig> out;
  for (int n : n_estimators) {
    for (int depth : max_depth) {
      for (double mcw : min_child_weight) {
        BoostConfig c = base;
        c.n_estimators = n;
        c.max_depth = depth;
        c.min_child_weight = mcw;
        c.validate();
        out.push_back(c);
      }
    }
  }
  return out;
}

int Tree::leaf_index(std::span<const double> x) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const Node& n = nodes[i];
    const double v = x[static_cast<std::size_t>(n.feature)];
    if (std::isnan(v)) {
      i = n.default_left ? n.left : n.right;
    } else {
      i = v < n.threshold ? n.left : n.right;
    }
  }
  return i;
}

double Tree::expected_value() const {
  std::function<double(int)> walk = [&](int i) -> double {
    const Node& n = nodes[i];
    if (n.is_leaf()) return n.value;
    const double cl = nodes[n.left].cover, cr = nodes[n.right].cover;
    if (cl + cr <= 0.0) return 0.5 * (walk(n.left) + walk(n.right));
    return (cl * walk(n.left) + cr * walk(n.right)) / (cl + cr);
  };
  return walk(0);
}

int Tree::depth() const {
  std::function<int(int)> walk = [&](int i) -> int {
    const Node& n = nodes[i];
    return n.is_leaf() ? 0 : 1 + std::max(walk(n.left), walk(n.right));
  };
  return nodes.empty() ? 0 : walk(0);
}

Forest::Forest(std::size_t n_features, double base_score, BoostConfig config, std::vector<std::string> feature_names)
    : n_features_(n_features), base_score_(base_score), config_(config), feature_names_(std::move(feature_names)) {
  config_.validate();
  if (!std::isfinite(base_score_)) throw InvalidArgument("base_score must be finite");
  if (!feature_names_.empty() && feature_names_.size() != n_features_) {
    throw InvalidArgument("feature name count does not match the feature count");
  }
}

void Forest::add_tree(Tree tree) {
  if (tree.nodes.empty()) throw InvalidArgument("tree has no nodes");
  const int n = static_cast<int>(tree.nodes.size());
  std::vector<int> parents(tree.nodes.size(), 0);
  for (auto& node : tree.nodes) {
    if (node.is_leaf()) {
      if (std::isnan(node.value)) throw InvalidArgument("leaf weight is NaN");
      node.value = std::clamp(node.value, -kWeightClip, kWeightClip);
      continue;
    }
    if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n) {
      throw InvalidArgument("internal node references a missing child");
    }
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features_) {
      throw InvalidArgument("split feature index out of range");
    }
    ++parents[node.left];
    ++parents[node.right];
  }
  for (std::size_t i = 1; i < parents.size(); ++i) {
    if (parents[i] != 1) throw InvalidArgument("tree nodes must form a single tree rooted at node 0");
  }
  trees_.push_back(std::move(tree));
}

void Forest::check_width(std::size_t cols) const {
  if (cols != n_features_) {
    throw InvalidArgument("feature count mismatch: forest expects " + std::to_string(n_features_) + ", got " +
                          std::to_string(cols));
  }
}

double Forest::margin(std::span<const double> x, std::size_t tree_limit) const {
  check_width(x.size());
  const std::size_t limit = std::min(tree_limit, trees_.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < limit; ++t) sum += trees_[t].predict(x);
  return base_score_ + config_.eta * sum;
}

std::vector<double> Forest::predict_margin(const Matrix& x, std::size_t tree_limit) const {
  check_width(x.cols());
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = margin(x.row(r), tree_limit);
  return out;
}

std::vector<double> Forest::predict_proba(const Matrix& x, std::size_t tree_limit) const {
  auto out = predict_margin(x, tree_limit);
  for (auto& v : out) v = sigmoid(v);
  return out;
}

std::vector<double> Forest::feature_gain() const {
  std::vector<double> gain(n_features_, 0.0);
  for (const auto& t : trees_) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) gain[static_cast<std::size_t>(n.feature)] += n.gain;
    }
  }
  return gain;
}

nlohmann::json Forest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   default_left = nlohmann::json::array(), left = nlohmann::json::array(),
                   right = nlohmann::json::array(), value = nlohmann::json::array(),
                   cover = nlohmann::json::array(), hessian = nlohmann::json::array(),
                   gain = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      default_left.push_back(n.default_left);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      cover.push_back(n.cover);
      hessian.push_back(n.hessian);
      gain.push_back(n.gain);
    }
    trees.push_back({{"feature", feature},
                     {"threshold", threshold},
                     {"default_left", default_left},
                     {"left", left},
                     {"right", right},
                     {"value", value},
                     {"cover", cover},
                     {"hessian", hessian},
                     {"gain", gain}});
  }
  return {{"format", "odrop.forest"},
          {"version", 1},
          {"n_features", n_features_},
          {"feature_names", feature_names_},
          {"base_score", base_score_},
          {"eta", config_.eta},
          {"has_cover", has_cover_},
          {"config", config_.to_json()},
          {"trees", trees}};
}

Forest Forest::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "odrop.forest") throw ParseError("not a forest document");
    if (doc.at("version").get<int>() != 1) throw ParseError("unsupported forest document version");
    BoostConfig config = BoostConfig::from_json(doc.at("config"));
    config.eta = doc.at("eta").get<double>();
    Forest f(doc.at("n_features").get<std::size_t>(), doc.at("base_score").get<double>(), config,
             doc.at("feature_names").get<std::vector<std::string>>());
    f.has_cover_ = doc.value("has_cover", true);
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      const auto& feature = t.at("feature");
      tree.nodes.resize(feature.size());
      for (std::size_t i = 0; i < feature.size(); ++i) {
        Node& n = tree.nodes[i];
        n.feature = feature[i].get<int>();
        n.threshold = t.at("threshold")[i].get<double>();
        n.default_left = t.at("default_left")[i].get<bool>();
        n.left = t.at("left")[i].get<int>();
        n.right = t.at("right")[i].get<int>();
        n.value = t.at("value")[i].get<double>();
        n.cover = t.at("cover")[i].get<double>();
        n.hessian = t.at("hessian")[i].get<double>();
        n.gain = t.at("gain")[i].get<double>();
      }
      f.add_tree(std::move(tree));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("forest document: ") + e.what());
  }
}

}  // namespace odrop::gbt
