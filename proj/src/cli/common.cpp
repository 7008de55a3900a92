#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "odrop/random.hpp"
#include "odrop/svg.hpp"
#include "odrop/text.hpp"

namespace odrop::cli {

namespace fs = std::filesystem;

Matrix Predictor::features(const tabular::Table& table) const {
  Matrix x(table.rows(), columns.size(), kMissing);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& col = columns[j];
    const std::size_t c = table.column_index(col.name);
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.is_missing(r, c)) continue;
      if (col.kind == tabular::ColumnKind::categorical) {
        const std::string token = table.cell_text(r, c);
        auto it = std::find(col.categories.begin(), col.categories.end(), token);
        if (it != col.categories.end()) x(r, j) = static_cast<double>(it - col.categories.begin());
      } else {
        x(r, j) = table.value(r, c);
      }
    }
  }
  return x;
}

nlohmann::json Predictor::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    cols.push_back({{"name", c.name}, {"kind", std::string(tabular::to_string(c.kind))}, {"categories", c.categories}});
  }
  return {{"format", "odrop.predictor"}, {"version", 1}, {"columns", cols}, {"forest", forest.to_json()}};
}

Predictor Predictor::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "odrop.predictor") throw ParseError("not an odrop.predictor document");
    if (doc.at("version").get<int>() != 1) throw ParseError("unsupported odrop.predictor version");
    Predictor p;
    for (const auto& c : doc.at("columns")) {
      p.columns.push_back({c.at("name").get<std::string>(),
                           tabular::column_kind_from_string(c.at("kind").get<std::string>()),
                           c.at("categories").get<std::vector<std::string>>()});
    }
    p.forest = gbt::Forest::from_json(doc.at("forest"));
    if (p.forest.n_features() != p.columns.size()) throw ParseError("predictor column count does not match the forest");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("predictor: ") + e.what());
  }
}

nlohmann::json PredictorTraining::grid_json() const {
  nlohmann::json doc;
  doc["format"] = "odrop.grid_search";
  doc["version"] = 1;
  doc["selected_features"] = selected;
  if (grid) {
    doc["best"] = grid->best.to_json();
    auto& pts = doc["points"] = nlohmann::json::array();
    for (const auto& p : grid->points) {
      pts.push_back({{"config", p.config.to_json()}, {"mean_auroc", p.mean_auroc}, {"fold_auroc", p.fold_auroc}});
    }
  } else {
    doc["best"] = predictor.forest.config().to_json();
  }
  return doc;
}

PredictorTraining train_predictor(const tabular::Table& features, std::span<const int> labels,
                                  const PredictorSettings& settings, unsigned jobs) {
  PredictorTraining out;
  const Matrix& all = features.values();
  std::vector<std::size_t> keep(features.cols());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (settings.rfe_k && *settings.rfe_k < features.cols()) {
    keep = gbt::rfe(all, labels, *settings.rfe_k, settings.rfe_step, settings.config);
  }
  const Matrix x = all.select_cols(keep);
  std::vector<std::string> names;
  for (auto c : keep) {
    names.push_back(features.column(c).name);
    out.predictor.columns.push_back(features.column(c));
  }
  out.selected = names;
  gbt::BoostConfig best = settings.config;
  if (settings.search) {
    out.grid = gbt::grid_search(x, labels, settings.grid, settings.folds, settings.config.seed, settings.config, jobs);
    best = out.grid->best;
  }
  out.predictor.forest = gbt::fit_gbt(x, labels, best, names);
  out.baseline = rejection::cv_baseline(x, labels, settings.folds, settings.config.seed, best);
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

tabular::Table load_table(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  return tabular::load_csv(path);
}

tabular::Table encoder_view(const tabular::Table& table, const tabular::NeuralEncoder& encoder) {
  std::vector<std::size_t> cols;
  for (const auto& c : encoder.columns()) cols.push_back(table.column_index(c.name));
  return table.select_columns(cols);
}

std::vector<double> score_table(const ood::OodScorer& scorer, const tabular::Table& table) {
  return scorer.score(encoder_view(table, scorer.encoder()));
}

std::string scores_csv(std::span<const double> scores) {
  std::string out = "row,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out += std::to_string(i) + "," + format_number(scores[i]) + "\n";
  return out;
}

std::vector<double> read_scores_csv(const fs::path& path) {
  const auto table = load_table(path);
  return table.values().column(table.column_index("score"));
}

nlohmann::json scores_meta(ood::Method method, std::size_t rows) {
  return {{"format", "odrop.scores"},
          {"version", 1},
          {"method", std::string(ood::to_string(method))},
          {"orientation", "higher_is_more_ood"},
          {"orientation_flip", ood::orientation_flip(method)},
          {"rows", rows}};
}

std::string predictions_csv(std::span<const double> probability, std::span<const int> labels) {
  std::string out = "row,probability,label\n";
  for (std::size_t i = 0; i < probability.size(); ++i) {
    out += std::to_string(i) + "," + format_number(probability[i]) + "," + std::to_string(labels[i]) + "\n";
  }
  return out;
}

std::string curve_name(ood::Method method, rejection::MetricKind kind) {
  return "curve_" + std::string(ood::to_string(method)) + "_" + std::string(rejection::to_string(kind)) + ".csv";
}

std::vector<rejection::MethodReport> write_curves(ArtifactWriter& out, std::span<const ood::Method> methods,
                                                  const std::vector<std::vector<double>>& scores,
                                                  std::span<const double> probability, std::span<const int> labels,
                                                  std::span<const double> rate_grid,
                                                  const std::vector<bool>& ood_mask,
                                                  const nlohmann::json& extra_report) {
  using rejection::MetricKind;
  std::vector<rejection::MethodReport> reports;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    rejection::MethodReport r;
    r.method = ood::to_string(methods[i]);
    r.auroc = rejection::rejection_curve(scores[i], probability, labels, MetricKind::auroc, rate_grid);
    r.prauc = rejection::rejection_curve(scores[i], probability, labels, MetricKind::prauc, rate_grid);
    out.write_text(curve_name(methods[i], MetricKind::auroc), r.auroc.to_csv());
    out.write_text(curve_name(methods[i], MetricKind::prauc), r.prauc.to_csv());
    reports.push_back(std::move(r));
  }

  nlohmann::json report = rejection::report_json(reports);
  report["n_test"] = labels.size();
  report["no_rejection"] = {{"auroc", rejection::auroc(probability, labels)},
                            {"prauc", rejection::prauc(probability, labels)}};
  for (const auto& item : extra_report.items()) report[item.key()] = item.value();
  if (!ood_mask.empty()) {
    const auto grid = rate_grid.empty() ? rejection::default_rate_grid()
                                        : std::vector<double>(rate_grid.begin(), rate_grid.end());
    for (std::size_t i = 0; i < methods.size(); ++i) {
      auto& list = report["methods"][i]["rejected_ood_fraction"] = nlohmann::json::array();
      for (double rate : grid) {
        const double t = rejection::threshold_for_rate(scores[i], rate);
        std::size_t rejected = 0, hits = 0;
        for (std::size_t r = 0; r < scores[i].size(); ++r) {
          if (scores[i][r] > t) {
            ++rejected;
            hits += ood_mask[r] ? 1 : 0;
          }
        }
        list.push_back({{"rate", rate},
                        {"rejected", rejected},
                        {"fraction", rejected ? nlohmann::json(static_cast<double>(hits) / rejected) : nlohmann::json()}});
      }
    }
  }
  out.write_json("report.json", report);

  for (auto kind : {MetricKind::auroc, MetricKind::prauc}) {
    std::vector<svg::Series> series;
    for (const auto& r : reports) {
      const auto& curve = kind == MetricKind::auroc ? r.auroc : r.prauc;
      svg::Series s{r.method, {}, {}};
      for (const auto& p : curve.points) {
        s.x.push_back(100.0 * p.rate);
        s.y.push_back(p.metric);
      }
      series.push_back(std::move(s));
    }
    svg::PlotOptions opts;
    const std::string name(rejection::to_string(kind));
    opts.title = "Rejection curves (" + name + ")";
    opts.x_label = "rejection rate (%)";
    opts.y_label = name;
    if (!reports.empty()) {
      opts.reference_y = kind == MetricKind::auroc ? reports.front().auroc.baseline : reports.front().prauc.baseline;
    }
    out.write_text("rejection_" + name + ".svg", svg::line_plot(series, opts));
  }
  return reports;
}

void write_explain(ArtifactWriter& out, const Predictor& predictor, const tabular::Table& test,
                   std::span<const int> labels, std::span<const double> scores, double rate,
                   const ExplainSettings& settings, std::uint64_t seed, unsigned jobs) {
  const double threshold = rejection::threshold_for_rate(scores, rate);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    if (!settings.positive_only || labels[r] == 1) rows.push_back(r);
  }
  if (rows.size() > settings.max_rows) {
    Rng rng(derive_seed(seed, 0xe8));
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(settings.max_rows);
    std::sort(rows.begin(), rows.end());
  }
  if (rows.size() < 2) throw InvalidArgument("explain needs at least two rows to cluster");

  const Matrix x = predictor.features(test).select_rows(rows);
  std::vector<double> row_scores;
  std::vector<std::string> ids;
  for (auto r : rows) {
    row_scores.push_back(scores[r]);
    ids.push_back(std::to_string(r));
  }
  const auto shap = explain::shap_matrix(predictor.forest, x, row_scores, threshold, ids, jobs);
  const auto row_tree = explain::ward_cluster(shap.values);
  explain::Dendrogram col_tree;
  if (shap.values.cols() >= 2) {
    col_tree = explain::ward_cluster(explain::column_profiles(shap, settings.absolute_columns));
  } else {
    col_tree.n_leaves = shap.values.cols();
    col_tree.leaf_order = {0};
  }

  // Attribution matrix in the original row and column order.
  std::ostringstream csv;
  csv << "row_id,ood";
  for (const auto& name : shap.feature_names) csv << ',' << name;
  csv << '\n';
  for (std::size_t r = 0; r < shap.values.rows(); ++r) {
    csv << shap.row_ids[r] << ',' << static_cast<int>(shap.ood_flags[r]);
    for (double v : shap.values.row(r)) csv << ',' << format_number(v);
    csv << '\n';
  }
  out.write_text("shap_values.csv", csv.str());
  out.write_json("shap_dendrogram_rows.json", row_tree.to_json());
  out.write_json("shap_dendrogram_cols.json", col_tree.to_json());
  out.write_text("shap_heatmap.svg", explain::heatmap_svg(shap, row_tree, col_tree));
  out.write_text("shap_heatmap.csv", explain::heatmap_csv(shap, row_tree, col_tree));
  const auto flagged = std::count(shap.ood_flags.begin(), shap.ood_flags.end(), std::uint8_t{1});
  out.write_json("explain.json", {{"format", "odrop.explain"},
                                  {"version", 1},
                                  {"method", std::string(ood::to_string(settings.method))},
                                  {"rate", rate},
                                  {"threshold", threshold},
                                  {"rows", rows.size()},
                                  {"ood_rows", flagged},
                                  {"base_value", shap.base_value},
                                  {"positive_only", settings.positive_only},
                                  {"absolute_columns", settings.absolute_columns}});
}

}  // namespace odrop::cli

namespace odrop::cli {

tabular::Table with_label(const tabular::Table& features, std::span<const int> labels, const std::string& name) {
  if (features.find_column(name)) throw SchemaError("table already has a column named '" + name + "'");
  auto columns = features.columns();
  columns.push_back({name, tabular::ColumnKind::boolean, {}});
  const std::size_t w = features.cols();
  Matrix values(features.rows(), w + 1);
  std::vector<std::uint8_t> missing(features.rows() * (w + 1), 0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      values(r, c) = features.value(r, c);
      missing[r * (w + 1) + c] = features.is_missing(r, c) ? 1 : 0;
    }
    values(r, w) = labels[r];
  }
  return tabular::Table(std::move(columns), std::move(values), std::move(missing));
}

Dataset dataset_from_scenario(const synth::ShiftScenario& scenario) {
  auto s = synth::generate(scenario);
  Dataset d;
  d.train = std::move(s.train);
  d.train_labels = std::move(s.train_labels);
  d.test = std::move(s.test);
  d.test_labels = std::move(s.test_labels);
  d.ood_mask = std::move(s.ood_mask);
  d.oracle_probability = std::move(s.test_oracle_probability);
  return d;
}

Dataset dataset_from_files(const fs::path& train, const fs::path& test, const std::string& label_column) {
  auto tr = tabular::split_label(load_table(train), label_column);
  auto te = tabular::split_label(load_table(test), label_column);
  Dataset d;
  d.train = std::move(tr.features);
  d.train_labels = std::move(tr.labels);
  d.test = std::move(te.features);
  d.test_labels = std::move(te.labels);
  return d;
}

void write_dataset(ArtifactWriter& out, const Dataset& data, const std::string& label_column) {
  out.write_table("train.csv", with_label(data.train, data.train_labels, label_column));
  out.write_table("test.csv", with_label(data.test, data.test_labels, label_column));
  if (!data.ood_mask.empty()) {
    std::string truth = "row,ood,oracle_probability\n";
    for (std::size_t i = 0; i < data.ood_mask.size(); ++i) {
      truth += std::to_string(i) + "," + (data.ood_mask[i] ? "1" : "0") + "," +
               format_number(data.oracle_probability[i]) + "\n";
    }
    out.write_text("test_truth.csv", truth);
  }
}

}  // namespace odrop::cli
