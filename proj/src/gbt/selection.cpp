#include <algorithm>
#include <numeric>
#include <tuple>

#include "odrop/error.hpp"
#include "odrop/gbt.hpp"
#include "odrop/parallel.hpp"
#include "odrop/rejection.hpp"
#include "odrop/tabular.hpp"

namespace odrop::gbt {

GridResult grid_search(const Matrix& features, std::span<const int> labels, const GridSpec& grid, std::size_t k,
                       std::uint64_t seed, const BoostConfig& base, unsigned jobs) {
  grid.validate();
  const auto candidates = grid.candidates(base);
  for (const auto& c : candidates) c.validate();
  const auto folds = tabular::stratified_folds(labels, k, seed);
  const int max_trees = *std::max_element(grid.n_estimators.begin(), grid.n_estimators.end());

  // One fit per (depth, min_child_weight, fold); every n_estimators value is
  // scored on a prefix of that fit.
  const std::size_t n_shapes = grid.max_depth.size() * grid.min_child_weight.size();
  const std::size_t n_trees = grid.n_estimators.size();
  std::vector<double> fold_auroc(n_shapes * k * n_trees);
  parallel_for(n_shapes * k, jobs, [&](std::size_t task) {
    const std::size_t shape = task / k;
    const std::size_t f = task % k;
    BoostConfig config = base;
    config.max_depth = grid.max_depth[shape / grid.min_child_weight.size()];
    config.min_child_weight = grid.min_child_weight[shape % grid.min_child_weight.size()];
    config.n_estimators = max_trees;
    const auto train = folds.train_rows(f);
    const auto test = folds.test_rows(f);
    std::vector<int> train_labels, test_labels;
    for (auto r : train) train_labels.push_back(labels[r]);
    for (auto r : test) test_labels.push_back(labels[r]);
    const Forest forest = fit_gbt(features.select_rows(train), train_labels, config);
    const Matrix test_x = features.select_rows(test);
    for (std::size_t t = 0; t < n_trees; ++t) {
      const auto proba = forest.predict_proba(test_x, static_cast<std::size_t>(grid.n_estimators[t]));
      fold_auroc[(shape * k + f) * n_trees + t] = rejection::auroc(proba, test_labels);
    }
  });

  GridResult result;
  // candidates() nests n_estimators -> max_depth -> min_child_weight.
  std::size_t index = 0;
  for (std::size_t t = 0; t < n_trees; ++t) {
    for (std::size_t shape = 0; shape < n_shapes; ++shape, ++index) {
      GridPoint point;
      point.config = candidates[index];
      for (std::size_t f = 0; f < k; ++f) point.fold_auroc.push_back(fold_auroc[(shape * k + f) * n_trees + t]);
      point.mean_auroc =
          std::accumulate(point.fold_auroc.begin(), point.fold_auroc.end(), 0.0) / static_cast<double>(k);
      result.points.push_back(std::move(point));
    }
  }

  auto better = [](const GridPoint& a, const GridPoint& b) {
    if (a.mean_auroc != b.mean_auroc) return a.mean_auroc > b.mean_auroc;
    return std::make_tuple(a.config.n_estimators, a.config.max_depth, -a.config.min_child_weight) <
           std::make_tuple(b.config.n_estimators, b.config.max_depth, -b.config.min_child_weight);
  };
  const GridPoint* best = &result.points.front();
  for (const auto& p : result.points) {
    if (better(p, *best)) best = &p;
  }
  result.best = best->config;
  return result;
}

std::vector<std::size_t> rfe(const Matrix& features, std::span<const int> labels, std::size_t target_k,
                             std::optional<std::size_t> step, const BoostConfig& config) {
  if (target_k == 0) throw InvalidArgument("rfe target_k must be positive");
  if (target_k > features.cols()) {
    throw InvalidArgument("rfe target_k " + std::to_string(target_k) + " exceeds the feature count " +
                          std::to_string(features.cols()));
  }
  if (step && *step == 0) throw InvalidArgument("rfe step must be positive");
  std::vector<std::size_t> current(features.cols());
  std::iota(current.begin(), current.end(), std::size_t{0});
  while (current.size() > target_k) {
    const Forest forest = fit_gbt(features.select_cols(current), labels, config);
    const auto gain = forest.feature_gain();
    std::size_t remove = step ? *step : std::max<std::size_t>(1, current.size() / 10);
    remove = std::min(remove, current.size() - target_k);
    std::vector<std::size_t> rank(current.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    // Lowest gain first; among equal gains the later column goes first.
    std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      if (gain[a] != gain[b]) return gain[a] < gain[b];
      return a > b;
    });
    std::vector<bool> drop(current.size(), false);
    for (std::size_t i = 0; i < remove; ++i) drop[rank[i]] = true;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (!drop[i]) next.push_back(current[i]);
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace odrop::gbt
