#include <cmath>
#include <numeric>

#include "odrop/rejection.hpp"
#include "odrop/tabular.hpp"

namespace odrop::rejection {
namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

BaselineResult cv_baseline(const Matrix& features, std::span<const int> labels, std::size_t k, std::uint64_t seed,
                           const gbt::BoostConfig& config) {
  const auto folds = tabular::stratified_folds(labels, k, seed);
  BaselineResult out;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train = folds.train_rows(f);
    const auto test = folds.test_rows(f);
    std::vector<int> train_labels, test_labels;
    for (auto r : train) train_labels.push_back(labels[r]);
    for (auto r : test) test_labels.push_back(labels[r]);
    const auto forest = gbt::fit_gbt(features.select_rows(train), train_labels, config);
    const auto proba = forest.predict_proba(features.select_rows(test));
    out.fold_auroc.push_back(auroc(proba, test_labels));
    out.fold_prauc.push_back(prauc(proba, test_labels));
  }
  std::tie(out.auroc_mean, out.auroc_std) = mean_and_population_std(out.fold_auroc);
  std::tie(out.prauc_mean, out.prauc_std) = mean_and_population_std(out.fold_prauc);
  return out;
}

nlohmann::json BaselineResult::to_json() const {
  return {{"fold_auroc", fold_auroc}, {"fold_prauc", fold_prauc}, {"auroc_mean", auroc_mean},
          {"auroc_std", auroc_std},   {"prauc_mean", prauc_mean}, {"prauc_std", prauc_std}};
}

}  // namespace odrop::rejection
