#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "odrop/cli.hpp"
#include "odrop/rejection.hpp"

namespace odrop::cli {

namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const nlohmann::json& doc, std::initializer_list<const char*> known, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : doc.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; })) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

PredictorSettings predictor_from_json(const nlohmann::json& doc) {
  reject_unknown_keys(doc, {"search", "grid", "config", "folds", "rfe_k", "rfe_step"}, "predictor");
  PredictorSettings p;
  p.search = doc.value("search", p.search);
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    reject_unknown_keys(g, {"n_estimators", "max_depth", "min_child_weight"}, "predictor.grid");
    p.grid.n_estimators = g.value("n_estimators", p.grid.n_estimators);
    p.grid.max_depth = g.value("max_depth", p.grid.max_depth);
    p.grid.min_child_weight = g.value("min_child_weight", p.grid.min_child_weight);
  }
  if (doc.contains("config")) p.config = gbt::BoostConfig::from_json(doc["config"]);
  p.folds = doc.value("folds", p.folds);
  if (doc.contains("rfe_k") && !doc["rfe_k"].is_null()) p.rfe_k = doc["rfe_k"].get<std::size_t>();
  if (doc.contains("rfe_step") && !doc["rfe_step"].is_null()) p.rfe_step = doc["rfe_step"].get<std::size_t>();
  return p;
}

ExplainSettings explain_from_json(const nlohmann::json& doc) {
  reject_unknown_keys(doc, {"enabled", "method", "rate", "max_rows", "positive_only", "absolute_columns"}, "explain");
  ExplainSettings e;
  e.enabled = doc.value("enabled", e.enabled);
  if (doc.contains("method")) e.method = ood::method_from_string(doc["method"].get<std::string>());
  if (doc.contains("rate") && !doc["rate"].is_null()) e.rate = doc["rate"].get<double>();
  e.max_rows = doc.value("max_rows", e.max_rows);
  e.positive_only = doc.value("positive_only", e.positive_only);
  e.absolute_columns = doc.value("absolute_columns", e.absolute_columns);
  return e;
}

}  // namespace

std::vector<ood::Method> parse_methods(const std::vector<std::string>& tokens) {
  std::vector<ood::Method> out;
  for (const auto& t : tokens) {
    ood::Method m;
    try {
      m = ood::method_from_string(t);
    } catch (const InvalidArgument&) {
      throw ConfigError("unknown OOD method '" + t + "'");
    }
    if (std::find(out.begin(), out.end(), m) != out.end()) throw ConfigError("OOD method '" + t + "' listed twice");
    out.push_back(m);
  }
  if (out.empty()) throw ConfigError("no OOD methods selected");
  return out;
}

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "odrop_out";
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  reject_unknown_keys(doc,
                      {"train_csv", "test_csv", "scenario", "label_column", "methods", "rate_grid", "seed", "jobs",
                       "predictor", "ood", "explain", "output_dir"},
                      "config");
  RunConfig c;
  try {
    if (doc.contains("train_csv")) c.train_csv = doc["train_csv"].get<std::string>();
    if (doc.contains("test_csv")) c.test_csv = doc["test_csv"].get<std::string>();
    if (doc.contains("scenario")) {
      const auto& s = doc["scenario"];
      c.scenario = synth::ShiftScenario::from_json(s.is_string() ? read_json_file(s.get<std::string>()) : s);
    }
    c.label_column = doc.value("label_column", c.label_column);
    if (doc.contains("methods")) c.methods = parse_methods(doc["methods"].get<std::vector<std::string>>());
    c.rate_grid = doc.value("rate_grid", c.rate_grid);
    c.seed = doc.value("seed", c.seed);
    c.jobs = doc.value("jobs", c.jobs);
    if (doc.contains("predictor")) c.predictor = predictor_from_json(doc["predictor"]);
    if (!doc.contains("predictor") || !doc["predictor"].contains("config") ||
        !doc["predictor"]["config"].contains("seed")) {
      c.predictor.config.seed = c.seed;
    }
    const nlohmann::json ood_doc = doc.value("ood", nlohmann::json::object());
    c.ood = ood::OodTrainConfig::from_json(ood_doc);
    if (!ood_doc.contains("classifier") || !ood_doc["classifier"].contains("seed")) c.ood.classifier.seed = c.seed;
    if (!ood_doc.contains("vae") || !ood_doc["vae"].contains("seed")) c.ood.vae.seed = c.seed;
    if (doc.contains("explain")) c.explain = explain_from_json(doc["explain"]);
    c.output_dir = doc.contains("output_dir") ? fs::path(doc["output_dir"].get<std::string>()) : default_output_dir();
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json doc;
  if (train_csv) doc["train_csv"] = train_csv->string();
  if (test_csv) doc["test_csv"] = test_csv->string();
  if (scenario) doc["scenario"] = scenario->to_json();
  doc["label_column"] = label_column;
  auto& m = doc["methods"] = nlohmann::json::array();
  for (auto method : methods) m.push_back(std::string(ood::to_string(method)));
  doc["rate_grid"] = rate_grid.empty() ? rejection::default_rate_grid() : rate_grid;
  doc["seed"] = seed;
  doc["jobs"] = jobs;
  doc["predictor"] = {{"search", predictor.search},
                      {"grid",
                       {{"n_estimators", predictor.grid.n_estimators},
                        {"max_depth", predictor.grid.max_depth},
                        {"min_child_weight", predictor.grid.min_child_weight}}},
                      {"config", predictor.config.to_json()},
                      {"folds", predictor.folds},
                      {"rfe_k", predictor.rfe_k ? nlohmann::json(*predictor.rfe_k) : nlohmann::json()},
                      {"rfe_step", predictor.rfe_step ? nlohmann::json(*predictor.rfe_step) : nlohmann::json()}};
  doc["ood"] = ood.to_json();
  doc["explain"] = {{"enabled", explain.enabled},
                    {"method", std::string(ood::to_string(explain.method))},
                    {"rate", explain.rate ? nlohmann::json(*explain.rate) : nlohmann::json()},
                    {"max_rows", explain.max_rows},
                    {"positive_only", explain.positive_only},
                    {"absolute_columns", explain.absolute_columns}};
  return doc;
}

void RunConfig::validate() const {
  const bool files = train_csv || test_csv;
  if (files && scenario) throw ConfigError("set either train_csv/test_csv or scenario, not both");
  if (!files && !scenario) throw ConfigError("no data source: set train_csv and test_csv, or scenario");
  if (files && !(train_csv && test_csv)) throw ConfigError("train_csv and test_csv must be given together");
  for (const auto* p : {&train_csv, &test_csv}) {
    if (*p && !fs::exists(**p)) throw ConfigError("file not found: " + (*p)->string());
  }
  if (methods.empty()) throw ConfigError("no OOD methods selected");
  if (!rate_grid.empty()) {
    if (rate_grid.front() != 0.0) throw ConfigError("rate_grid must start at 0");
    for (std::size_t i = 0; i < rate_grid.size(); ++i) {
      if (!(rate_grid[i] >= 0.0 && rate_grid[i] <= 0.4)) throw ConfigError("rate_grid values must lie in [0, 0.4]");
      if (i > 0 && !(rate_grid[i] > rate_grid[i - 1])) throw ConfigError("rate_grid must be strictly increasing");
    }
  }
  if (predictor.folds < 2) throw ConfigError("predictor.folds must be at least 2");
  if (predictor.rfe_k && *predictor.rfe_k == 0) throw ConfigError("predictor.rfe_k must be positive");
  if (predictor.rfe_step && *predictor.rfe_step == 0) throw ConfigError("predictor.rfe_step must be positive");
  try {
    predictor.grid.validate();
    predictor.config.validate();
    ood.validate();
    if (scenario) scenario->validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (explain.enabled) {
    if (std::find(methods.begin(), methods.end(), explain.method) == methods.end()) {
      throw ConfigError("explain.method '" + std::string(ood::to_string(explain.method)) + "' is not among methods");
    }
    if (explain.rate && !(*explain.rate >= 0.0 && *explain.rate <= 0.4)) {
      throw ConfigError("explain.rate must lie in [0, 0.4]");
    }
    if (explain.max_rows < 2) throw ConfigError("explain.max_rows must be at least 2");
  }
}

nlohmann::json RunConfig::seeds_json() const {
  nlohmann::json doc = {{"master", seed},
                        {"folds", predictor.config.seed},
                        {"classifier", ood.classifier.seed},
                        {"ensemble", nlohmann::json::array()},
                        {"vae", ood.vae.seed}};
  for (std::size_t i = 0; i < ood.ensemble_size; ++i) doc["ensemble"].push_back(ood.classifier.seed + i);
  if (scenario) doc["scenario"] = scenario->seed;
  return doc;
}

}  // namespace odrop::cli
