#pragma once

// Pieces shared by the individual commands and the pipeline.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "odrop/cli.hpp"
#include "odrop/explain.hpp"
#include "odrop/gbt.hpp"
#include "odrop/ood.hpp"
#include "odrop/rejection.hpp"
#include "odrop/tabular.hpp"

namespace odrop::cli {

// A fitted forest together with the training columns it reads, so that
// categorical tokens from another file map to the training codes.
struct Predictor {
  std::vector<tabular::Column> columns;
  gbt::Forest forest;

  // Columns looked up by name; unseen categorical tokens become missing.
  Matrix features(const tabular::Table& table) const;
  std::vector<double> predict_proba(const tabular::Table& table) const { return forest.predict_proba(features(table)); }

  nlohmann::json to_json() const;
  static Predictor from_json(const nlohmann::json& doc);
};

struct PredictorTraining {
  Predictor predictor;
  std::optional<gbt::GridResult> grid;
  std::vector<std::string> selected;
  rejection::BaselineResult baseline;

  nlohmann::json grid_json() const;
};

PredictorTraining train_predictor(const tabular::Table& features, std::span<const int> labels,
                                  const PredictorSettings& settings, unsigned jobs);

nlohmann::json read_json(const std::filesystem::path& path);
tabular::Table load_table(const std::filesystem::path& path);

// Columns of `table` reordered to the encoder's training order.
tabular::Table encoder_view(const tabular::Table& table, const tabular::NeuralEncoder& encoder);
std::vector<double> score_table(const ood::OodScorer& scorer, const tabular::Table& table);

std::string scores_csv(std::span<const double> scores);
std::vector<double> read_scores_csv(const std::filesystem::path& path);
nlohmann::json scores_meta(ood::Method method, std::size_t rows);

std::string predictions_csv(std::span<const double> probability, std::span<const int> labels);

std::string curve_name(ood::Method method, rejection::MetricKind kind);

// Curves for every method, curve CSVs, the two SVG plots and report.json.
// `ood_mask`, when non-empty, adds the fraction of rejected rows that are
// truly shifted to each point.
std::vector<rejection::MethodReport> write_curves(ArtifactWriter& out, std::span<const ood::Method> methods,
                                                  const std::vector<std::vector<double>>& scores,
                                                  std::span<const double> probability, std::span<const int> labels,
                                                  std::span<const double> rate_grid,
                                                  const std::vector<bool>& ood_mask,
                                                  const nlohmann::json& extra_report);

// SHAP matrix, dendrograms and heatmap for the chosen rows.
void write_explain(ArtifactWriter& out, const Predictor& predictor, const tabular::Table& test,
                   std::span<const int> labels, std::span<const double> scores, double rate,
                   const ExplainSettings& settings, std::uint64_t seed, unsigned jobs);

}  // namespace odrop::cli

namespace odrop::cli {

struct Dataset {
  tabular::Table train;  // features only
  std::vector<int> train_labels;
  tabular::Table test;
  std::vector<int> test_labels;
  std::vector<bool> ood_mask;  // synthetic data only
  std::vector<double> oracle_probability;  // synthetic data only
};

// Appends a 0/1 label column.
tabular::Table with_label(const tabular::Table& features, std::span<const int> labels, const std::string& name);
Dataset dataset_from_scenario(const synth::ShiftScenario& scenario);
Dataset dataset_from_files(const std::filesystem::path& train, const std::filesystem::path& test,
                           const std::string& label_column);
// train.csv, test.csv (with labels) and, for synthetic data, test_truth.csv.
void write_dataset(ArtifactWriter& out, const Dataset& data, const std::string& label_column);

}  // namespace odrop::cli
