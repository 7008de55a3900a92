#include <CLI11.hpp>

#include <cctype>
#include <iostream>
#include <map>
#include <set>

#include "common.hpp"
#include "odrop/stats.hpp"
#include "odrop/svg.hpp"
#include "odrop/text.hpp"

namespace odrop::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

fs::path resolve_output(const std::string& flag, const std::optional<fs::path>& from_config) {
  if (!flag.empty()) return flag;
  if (from_config) return *from_config;
  return default_output_dir();
}

tabular::DiagnosticCriteria criteria_from_json(const nlohmann::json& doc, tabular::DiagnosticCriteria c) {
  try {
    if (doc.contains("diabetes")) {
      const auto& d = doc["diabetes"];
      c.diabetes.hba1c_column = d.value("hba1c_column", c.diabetes.hba1c_column);
      c.diabetes.glucose_column = d.value("glucose_column", c.diabetes.glucose_column);
      c.diabetes.medication_column = d.value("medication_column", c.diabetes.medication_column);
      c.diabetes.hba1c_min = d.value("hba1c_min", c.diabetes.hba1c_min);
      c.diabetes.glucose_min = d.value("glucose_min", c.diabetes.glucose_min);
    }
    if (doc.contains("dyslipidemia")) {
      const auto& d = doc["dyslipidemia"];
      c.dyslipidemia.ldl_column = d.value("ldl_column", c.dyslipidemia.ldl_column);
      c.dyslipidemia.hdl_column = d.value("hdl_column", c.dyslipidemia.hdl_column);
      c.dyslipidemia.tg_column = d.value("tg_column", c.dyslipidemia.tg_column);
      c.dyslipidemia.medication_column = d.value("medication_column", c.dyslipidemia.medication_column);
      c.dyslipidemia.ldl_min = d.value("ldl_min", c.dyslipidemia.ldl_min);
      c.dyslipidemia.hdl_max_exclusive = d.value("hdl_max_exclusive", c.dyslipidemia.hdl_max_exclusive);
      c.dyslipidemia.tg_min = d.value("tg_min", c.dyslipidemia.tg_min);
    }
    if (doc.contains("hypertension")) {
      const auto& d = doc["hypertension"];
      c.hypertension.sbp_column = d.value("sbp_column", c.hypertension.sbp_column);
      c.hypertension.dbp_column = d.value("dbp_column", c.hypertension.dbp_column);
      c.hypertension.medication_column = d.value("medication_column", c.hypertension.medication_column);
      c.hypertension.sbp_min = d.value("sbp_min", c.hypertension.sbp_min);
      c.hypertension.dbp_min = d.value("dbp_min", c.hypertension.dbp_min);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("criteria: ") + e.what());
  }
  return c;
}

nlohmann::json criteria_json(const tabular::DiagnosticCriteria& c) {
  return {{"diabetes",
           {{"hba1c_column", c.diabetes.hba1c_column},
            {"glucose_column", c.diabetes.glucose_column},
            {"medication_column", c.diabetes.medication_column},
            {"hba1c_min", c.diabetes.hba1c_min},
            {"glucose_min", c.diabetes.glucose_min}}},
          {"dyslipidemia",
           {{"ldl_column", c.dyslipidemia.ldl_column},
            {"hdl_column", c.dyslipidemia.hdl_column},
            {"tg_column", c.dyslipidemia.tg_column},
            {"medication_column", c.dyslipidemia.medication_column},
            {"ldl_min", c.dyslipidemia.ldl_min},
            {"hdl_max_exclusive", c.dyslipidemia.hdl_max_exclusive},
            {"tg_min", c.dyslipidemia.tg_min}}},
          {"hypertension",
           {{"sbp_column", c.hypertension.sbp_column},
            {"dbp_column", c.hypertension.dbp_column},
            {"medication_column", c.hypertension.medication_column},
            {"sbp_min", c.hypertension.sbp_min},
            {"dbp_min", c.hypertension.dbp_min}}}};
}

// Loads --config when given; otherwise defaults with the output directory
// left for the caller.
RunConfig base_config(const std::string& config_path) {
  if (config_path.empty()) {
    RunConfig c = RunConfig::from_json(nlohmann::json::object());
    return c;
  }
  nlohmann::json doc;
  try {
    doc = read_json(config_path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return RunConfig::from_json(doc);
}

// Applies --seed after the config file, keeping explicit per-trainer seeds
// from the file out of it.
void override_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.predictor.config.seed = seed;
  c.ood.classifier.seed = seed;
  c.ood.vae.seed = seed;
}

struct Flags {
  std::string output;
  unsigned jobs = 1;
  std::string config;
};

// ---- shift-test ----------------------------------------------------------

void shift_test(ArtifactWriter& out, const tabular::Table& a, const tabular::Table& b,
                const std::set<std::string>& exclude, std::size_t kde_points) {
  nlohmann::json rows = nlohmann::json::array();
  std::string csv = "column,kind,test,statistic,dof,p_value,flag\n";
  for (std::size_t ca = 0; ca < a.cols(); ++ca) {
    const auto& col = a.column(ca);
    if (exclude.count(col.name)) continue;
    const auto cb_opt = b.find_column(col.name);
    if (!cb_opt) continue;
    const std::size_t cb = *cb_opt;
    nlohmann::json row = {{"column", col.name}, {"kind", std::string(tabular::to_string(col.kind))}};
    std::string flag;
    std::optional<stats::TestResult> result;
    if (col.kind == tabular::ColumnKind::continuous && b.column(cb).kind == tabular::ColumnKind::continuous) {
      std::vector<double> xa, xb;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        if (!a.is_missing(r, ca)) xa.push_back(a.value(r, ca));
      }
      for (std::size_t r = 0; r < b.rows(); ++r) {
        if (!b.is_missing(r, cb)) xb.push_back(b.value(r, cb));
      }
      try {
        result = stats::welch_t(xa, xb);
        if (result->degenerate) flag = "degenerate";
      } catch (const InvalidArgument& e) {
        flag = "skipped";
      }
      // Density estimates for the two sites.
      try {
        const auto ka = stats::kde(xa, kde_points);
        const auto kb = stats::kde(xb, kde_points);
        std::string kcsv = "site,x,density\n";
        for (std::size_t i = 0; i < ka.grid.size(); ++i) {
          kcsv += "train," + format_number(ka.grid[i]) + "," + format_number(ka.density[i]) + "\n";
        }
        for (std::size_t i = 0; i < kb.grid.size(); ++i) {
          kcsv += "test," + format_number(kb.grid[i]) + "," + format_number(kb.density[i]) + "\n";
        }
        const std::string base = "kde_" + file_safe(col.name);
        out.write_text(base + ".csv", kcsv);
        svg::PlotOptions opts;
        opts.title = col.name;
        opts.x_label = col.name;
        opts.y_label = "density";
        out.write_text(base + ".svg", svg::line_plot({{"train", ka.grid, ka.density}, {"test", kb.grid, kb.density}}, opts));
      } catch (const InvalidArgument&) {
        // constant samples have no density estimate
      }
    } else {
      // Site x category counts keyed by token.
      std::map<std::string, std::array<std::uint64_t, 2>> counts;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        if (!a.is_missing(r, ca)) ++counts[a.cell_text(r, ca)][0];
      }
      for (std::size_t r = 0; r < b.rows(); ++r) {
        if (!b.is_missing(r, cb)) ++counts[b.cell_text(r, cb)][1];
      }
      stats::ContingencyTable table;
      table.cols = counts.size();
      table.counts.resize(2 * counts.size());
      std::size_t k = 0;
      for (const auto& [token, c] : counts) {
        table.counts[k] = c[0];
        table.counts[counts.size() + k] = c[1];
        ++k;
      }
      try {
        result = stats::choose_test(table);
        if (result->fallback) flag = "fisher_fallback_chi_square";
      } catch (const InvalidArgument&) {
        flag = "skipped";
      }
    }
    if (result) {
      row["test"] = std::string(stats::to_string(result->kind));
      row["statistic"] = result->statistic;
      row["dof"] = result->dof;
      row["p_value"] = result->p_value;
      csv += col.name + "," + std::string(tabular::to_string(col.kind)) + "," +
             std::string(stats::to_string(result->kind)) + "," + format_number(result->statistic) + "," +
             format_number(result->dof) + "," + format_number(result->p_value) + "," + flag + "\n";
    } else {
      csv += col.name + "," + std::string(tabular::to_string(col.kind)) + ",,,,," + flag + "\n";
    }
    row["flag"] = flag;
    rows.push_back(row);
  }
  out.write_text("shift_tests.csv", csv);
  out.write_json("shift_tests.json", {{"format", "odrop.shift_tests"}, {"version", 1}, {"columns", rows}});
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Out-of-distribution rejection for tabular prediction"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("-o,--output", flags.output, "Output directory (default: $ODROP_OUTPUT_DIR or ./odrop_out)");
  auto* jobs_opt = app.add_option("-j,--jobs", flags.jobs, "Worker threads for independent sub-tasks");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a training/shifted-site dataset pair");
  std::string scenario_path;
  synth::ShiftScenario sc;
  double shift_norm = 0.0;
  std::string count_mode = "exact";
  std::string synth_label = "label";
  synth_cmd->add_option("--scenario", scenario_path, "Scenario JSON file");
  auto* o_ntrain = synth_cmd->add_option("--n-train", sc.n_train);
  auto* o_ntest = synth_cmd->add_option("--n-test", sc.n_test);
  auto* o_d = synth_cmd->add_option("--d", sc.d, "Feature dimension");
  auto* o_frac = synth_cmd->add_option("--ood-fraction", sc.ood_fraction);
  auto* o_norm = synth_cmd->add_option("--shift-norm", shift_norm, "Norm of an even mean shift");
  auto* o_cov = synth_cmd->add_option("--cov-scale", sc.cov_scale);
  auto* o_noise = synth_cmd->add_option("--label-noise", sc.label_noise_ood);
  auto* o_pos = synth_cmd->add_option("--positive-rate", sc.positive_rate);
  auto* o_sseed = synth_cmd->add_option("--seed", sc.seed);
  auto* o_mode = synth_cmd->add_option("--count-mode", count_mode)->check(CLI::IsMember({"exact", "binomial"}));
  synth_cmd->add_option("--label-column", synth_label);

  // label
  auto* label_cmd = app.add_subcommand("label", "Assign disease-onset labels from two yearly tables");
  std::string year_t, year_t1, disease_name, subject_column, criteria_path, label_name = "label";
  bool bp_2017 = false;
  label_cmd->add_option("--year-t", year_t)->required();
  label_cmd->add_option("--year-t1", year_t1)->required();
  label_cmd->add_option("--disease", disease_name)->required()->check(
      CLI::IsMember({"diabetes", "dyslipidemia", "hypertension"}));
  label_cmd->add_option("--subject-column", subject_column)->required();
  label_cmd->add_option("--criteria", criteria_path, "JSON overrides of thresholds and column names");
  label_cmd->add_flag("--bp-2017", bp_2017, "Use 130/80 mmHg blood-pressure thresholds");
  label_cmd->add_option("--label-column", label_name);

  // shift-test
  auto* shift_cmd = app.add_subcommand("shift-test", "Per-column tests of a shift between two tables");
  std::string shift_a, shift_b;
  std::vector<std::string> shift_exclude;
  std::size_t kde_points = 256;
  shift_cmd->add_option("--train", shift_a)->required();
  shift_cmd->add_option("--test", shift_b)->required();
  shift_cmd->add_option("--exclude", shift_exclude, "Columns to skip (repeatable)");
  shift_cmd->add_option("--kde-points", kde_points);

  // train-predictor
  auto* tp_cmd = app.add_subcommand("train-predictor", "Fit the boosted-tree predictor (RFE + grid search)");
  std::string tp_train, tp_label;
  bool tp_no_search = false;
  std::size_t tp_folds = 5, tp_rfe_k = 0, tp_rfe_step = 0;
  std::uint64_t tp_seed = 0;
  tp_cmd->add_option("--config", flags.config, "Run configuration JSON");
  tp_cmd->add_option("--train", tp_train)->required();
  auto* o_tp_label = tp_cmd->add_option("--label-column", tp_label);
  tp_cmd->add_flag("--no-search", tp_no_search, "Skip the grid search and use the configured parameters");
  auto* o_tp_folds = tp_cmd->add_option("--folds", tp_folds);
  auto* o_tp_rfe_k = tp_cmd->add_option("--rfe-k", tp_rfe_k, "Number of features kept by RFE");
  auto* o_tp_rfe_step = tp_cmd->add_option("--rfe-step", tp_rfe_step);
  auto* o_tp_seed = tp_cmd->add_option("--seed", tp_seed);

  // train-ood
  auto* to_cmd = app.add_subcommand("train-ood", "Train OOD scorers");
  std::string to_train, to_label, to_methods;
  std::uint64_t to_seed = 0;
  int to_cls_epochs = 0, to_vae_epochs = 0;
  std::size_t to_members = 0;
  to_cmd->add_option("--config", flags.config, "Run configuration JSON");
  to_cmd->add_option("--train", to_train)->required();
  auto* o_to_label = to_cmd->add_option("--label-column", to_label);
  auto* o_to_methods = to_cmd->add_option("--methods", to_methods, "Comma-separated method names");
  auto* o_to_seed = to_cmd->add_option("--seed", to_seed);
  auto* o_to_cls = to_cmd->add_option("--classifier-epochs", to_cls_epochs);
  auto* o_to_vae = to_cmd->add_option("--vae-epochs", to_vae_epochs);
  auto* o_to_members = to_cmd->add_option("--ensemble-size", to_members);

  // score
  auto* score_cmd = app.add_subcommand("score", "Score a table with trained OOD scorers");
  std::vector<std::string> score_scorers;
  std::string score_input;
  score_cmd->add_option("--scorer", score_scorers, "Scorer JSON (repeatable)")->required();
  score_cmd->add_option("--input", score_input)->required();

  // reject-curve
  auto* rc_cmd = app.add_subcommand("reject-curve", "Rejection curves, Kendall tau-b and the report");
  std::string rc_test, rc_label = "label", rc_predictor, rc_scores, rc_methods, rc_truth, rc_grid;
  rc_cmd->add_option("--test", rc_test)->required();
  rc_cmd->add_option("--label-column", rc_label);
  rc_cmd->add_option("--predictor", rc_predictor)->required();
  rc_cmd->add_option("--scores-dir", rc_scores, "Directory holding scores_<method>.csv")->required();
  rc_cmd->add_option("--methods", rc_methods, "Comma-separated method names (default: all five)");
  rc_cmd->add_option("--truth", rc_truth, "test_truth.csv of a synthetic dataset");
  rc_cmd->add_option("--rate-grid", rc_grid, "Comma-separated rejection rates starting at 0");

  // explain
  auto* ex_cmd = app.add_subcommand("explain", "SHAP attributions, Ward clustering and heatmap");
  std::string ex_predictor, ex_test, ex_label = "label", ex_scores, ex_method = "vae_reconstruction", ex_report;
  double ex_rate = 0.0;
  std::size_t ex_max_rows = 2000;
  bool ex_all_rows = false, ex_signed = false;
  std::uint64_t ex_seed = 0;
  ex_cmd->add_option("--predictor", ex_predictor)->required();
  ex_cmd->add_option("--test", ex_test)->required();
  ex_cmd->add_option("--label-column", ex_label);
  ex_cmd->add_option("--scores", ex_scores, "scores_<method>.csv")->required();
  ex_cmd->add_option("--method", ex_method);
  auto* o_ex_rate = ex_cmd->add_option("--rate", ex_rate, "Rejection rate defining the OOD flags");
  ex_cmd->add_option("--report", ex_report, "report.json; the method's AUROC peak rate is used");
  ex_cmd->add_option("--max-rows", ex_max_rows);
  ex_cmd->add_flag("--all-rows", ex_all_rows, "Cluster all rows, not only positive-label rows");
  ex_cmd->add_flag("--signed-columns", ex_signed, "Cluster columns on signed instead of absolute SHAP values");
  ex_cmd->add_option("--seed", ex_seed);

  // pipeline
  auto* pl_cmd = app.add_subcommand("pipeline", "End-to-end run: predictor, scorers, curves, report");
  std::string pl_scenario, pl_train, pl_test, pl_label, pl_methods;
  std::uint64_t pl_seed = 0;
  bool pl_explain = false;
  pl_cmd->add_option("--config", flags.config, "Run configuration JSON");
  pl_cmd->add_option("--scenario", pl_scenario, "Scenario JSON (synthetic data)");
  pl_cmd->add_option("--train", pl_train);
  pl_cmd->add_option("--test", pl_test);
  auto* o_pl_label = pl_cmd->add_option("--label-column", pl_label);
  auto* o_pl_methods = pl_cmd->add_option("--methods", pl_methods);
  auto* o_pl_seed = pl_cmd->add_option("--seed", pl_seed);
  pl_cmd->add_flag("--explain", pl_explain, "Also write the SHAP heatmap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  if (*synth_cmd) {
    if (!scenario_path.empty()) {
      const auto file_scenario = synth::ShiftScenario::from_json(read_json(scenario_path));
      // Flags override the file; re-apply only those given.
      synth::ShiftScenario merged = file_scenario;
      if (o_ntrain->count()) merged.n_train = sc.n_train;
      if (o_ntest->count()) merged.n_test = sc.n_test;
      if (o_d->count()) merged.d = sc.d;
      if (o_frac->count()) merged.ood_fraction = sc.ood_fraction;
      if (o_cov->count()) merged.cov_scale = sc.cov_scale;
      if (o_noise->count()) merged.label_noise_ood = sc.label_noise_ood;
      if (o_pos->count()) merged.positive_rate = sc.positive_rate;
      if (o_sseed->count()) merged.seed = sc.seed;
      if (o_mode->count()) merged.count_mode = count_mode == "exact" ? synth::OodCountMode::exact : synth::OodCountMode::binomial;
      if (o_d->count() && !o_norm->count() && merged.mean_shift.size() != merged.d) {
        throw ConfigError("--d changes the dimension of the scenario's mean_shift; pass --shift-norm too");
      }
      if (o_norm->count()) merged.mean_shift = synth::uniform_shift(merged.d, shift_norm);
      sc = merged;
    } else {
      sc.count_mode = count_mode == "exact" ? synth::OodCountMode::exact : synth::OodCountMode::binomial;
      sc.mean_shift = synth::uniform_shift(sc.d, shift_norm);
    }
    try {
      sc.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    out.write_json("scenario.json", sc.to_json());
    write_dataset(out, dataset_from_scenario(sc), synth_label);
    out.commit("synth", {{"scenario", sc.to_json()}, {"label_column", synth_label}}, {{"scenario", sc.seed}});
    return 0;
  }

  if (*label_cmd) {
    auto criteria = bp_2017 ? tabular::DiagnosticCriteria::acc_aha_2017() : tabular::DiagnosticCriteria{};
    if (!criteria_path.empty()) criteria = criteria_from_json(read_json(criteria_path), criteria);
    const auto disease = tabular::disease_from_string(disease_name);
    const auto t0 = load_table(year_t);
    const auto t1 = load_table(year_t1);
    const auto result = tabular::onset_labels(t0, t1, criteria, disease, subject_column);
    std::vector<std::size_t> kept;
    std::vector<int> labels;
    std::size_t positives = 0;
    for (std::size_t r = 0; r < result.labels.size(); ++r) {
      if (result.labels[r] == tabular::OnsetLabel::excluded) continue;
      kept.push_back(r);
      labels.push_back(result.labels[r] == tabular::OnsetLabel::positive ? 1 : 0);
      positives += static_cast<std::size_t>(labels.back());
    }
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    out.write_table("labeled.csv", with_label(t0.select_rows(kept), labels, label_name));
    out.write_json("label_summary.json", {{"format", "odrop.label_summary"},
                                          {"version", 1},
                                          {"disease", disease_name},
                                          {"rows", t0.rows()},
                                          {"labeled", kept.size()},
                                          {"positive", positives},
                                          {"negative", kept.size() - positives},
                                          {"excluded_prevalent", result.prevalent},
                                          {"excluded_unlabelable", result.unlabelable},
                                          {"excluded_lost_to_followup", result.lost_to_followup}});
    out.commit("label",
               {{"year_t", year_t},
                {"year_t1", year_t1},
                {"disease", disease_name},
                {"subject_column", subject_column},
                {"criteria", criteria_json(criteria)},
                {"label_column", label_name}},
               nlohmann::json::object());
    return 0;
  }

  if (*shift_cmd) {
    const auto a = load_table(shift_a);
    const auto b = load_table(shift_b);
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    shift_test(out, a, b, {shift_exclude.begin(), shift_exclude.end()}, kde_points);
    out.commit("shift-test", {{"train", shift_a}, {"test", shift_b}, {"exclude", shift_exclude}, {"kde_points", kde_points}},
               nlohmann::json::object());
    return 0;
  }

  if (*tp_cmd) {
    RunConfig c = base_config(flags.config);
    if (o_tp_seed->count()) override_seed(c, tp_seed);
    if (o_tp_label->count()) c.label_column = tp_label;
    if (tp_no_search) c.predictor.search = false;
    if (o_tp_folds->count()) c.predictor.folds = tp_folds;
    if (o_tp_rfe_k->count()) c.predictor.rfe_k = tp_rfe_k;
    if (o_tp_rfe_step->count()) c.predictor.rfe_step = tp_rfe_step;
    if (jobs_opt->count()) c.jobs = flags.jobs;
    if (c.predictor.folds < 2) throw ConfigError("--folds must be at least 2");
    if (c.predictor.rfe_k && *c.predictor.rfe_k == 0) throw ConfigError("--rfe-k must be positive");
    if (c.predictor.rfe_step && *c.predictor.rfe_step == 0) throw ConfigError("--rfe-step must be positive");
    auto data = tabular::split_label(load_table(tp_train), c.label_column);
    ArtifactWriter out(resolve_output(flags.output, flags.config.empty() ? std::nullopt : std::optional(c.output_dir)));
    const auto trained = train_predictor(data.features, data.labels, c.predictor, c.jobs);
    out.write_json("predictor.json", trained.predictor.to_json());
    out.write_json("grid_search.json", trained.grid_json());
    out.write_json("baseline.json", trained.baseline.to_json());
    auto cfg = c.to_json();
    cfg["train_csv"] = tp_train;
    out.commit("train-predictor", cfg, c.seeds_json());
    return 0;
  }

  if (*to_cmd) {
    RunConfig c = base_config(flags.config);
    if (o_to_seed->count()) override_seed(c, to_seed);
    if (o_to_label->count()) c.label_column = to_label;
    if (o_to_methods->count()) c.methods = parse_methods(split_list(to_methods));
    if (o_to_cls->count()) c.ood.classifier.max_epochs = to_cls_epochs;
    if (o_to_vae->count()) c.ood.vae.max_epochs = to_vae_epochs;
    if (o_to_members->count()) c.ood.ensemble_size = to_members;
    if (jobs_opt->count()) c.jobs = flags.jobs;
    try {
      c.ood.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    auto data = tabular::split_label(load_table(to_train), c.label_column);
    ArtifactWriter out(resolve_output(flags.output, flags.config.empty() ? std::nullopt : std::optional(c.output_dir)));
    const auto scorers = ood::train_scorers(data.features, data.labels, c.methods, c.ood, c.jobs);
    for (const auto& s : scorers) out.write_json("scorer_" + std::string(ood::to_string(s.method())) + ".json", s.to_json());
    auto cfg = c.to_json();
    cfg["train_csv"] = to_train;
    out.commit("train-ood", cfg, c.seeds_json());
    return 0;
  }

  if (*score_cmd) {
    std::vector<ood::OodScorer> scorers;
    for (const auto& p : score_scorers) scorers.push_back(ood::OodScorer::from_json(read_json(p)));
    const auto table = load_table(score_input);
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    for (const auto& s : scorers) {
      const std::string name(ood::to_string(s.method()));
      const auto scores = score_table(s, table);
      out.write_text("scores_" + name + ".csv", scores_csv(scores));
      out.write_json("scores_" + name + ".json", scores_meta(s.method(), scores.size()));
    }
    out.commit("score", {{"scorers", score_scorers}, {"input", score_input}}, nlohmann::json::object());
    return 0;
  }

  if (*rc_cmd) {
    const auto methods = rc_methods.empty() ? ood::all_methods() : parse_methods(split_list(rc_methods));
    std::vector<double> grid;
    if (!rc_grid.empty()) {
      for (const auto& t : split_list(rc_grid)) {
        try {
          grid.push_back(std::stod(t));
        } catch (const std::exception&) {
          throw ConfigError("invalid rate '" + t + "' in --rate-grid");
        }
      }
    }
    const auto predictor = Predictor::from_json(read_json(rc_predictor));
    auto data = tabular::split_label(load_table(rc_test), rc_label);
    std::vector<std::vector<double>> scores;
    for (auto m : methods) {
      scores.push_back(read_scores_csv(fs::path(rc_scores) / ("scores_" + std::string(ood::to_string(m)) + ".csv")));
      if (scores.back().size() != data.labels.size()) {
        throw SchemaError("scores for " + std::string(ood::to_string(m)) + " have " +
                          std::to_string(scores.back().size()) + " rows, the test table has " +
                          std::to_string(data.labels.size()));
      }
    }
    std::vector<bool> truth;
    if (!rc_truth.empty()) {
      const auto t = load_table(rc_truth);
      for (double v : t.values().column(t.column_index("ood"))) truth.push_back(v != 0.0);
      if (truth.size() != data.labels.size()) throw SchemaError("truth file row count differs from the test table");
    }
    const auto probability = predictor.predict_proba(data.features);
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    out.write_text("predictions.csv", predictions_csv(probability, data.labels));
    write_curves(out, methods, scores, probability, data.labels, grid, truth, nlohmann::json::object());
    nlohmann::json names = nlohmann::json::array();
    for (auto m : methods) names.push_back(std::string(ood::to_string(m)));
    out.commit("reject-curve",
               {{"test", rc_test}, {"label_column", rc_label}, {"predictor", rc_predictor}, {"scores_dir", rc_scores},
                {"methods", names}, {"truth", rc_truth}, {"rate_grid", grid.empty() ? rejection::default_rate_grid() : grid}},
               nlohmann::json::object());
    return 0;
  }

  if (*ex_cmd) {
    ExplainSettings settings;
    settings.enabled = true;
    settings.method = parse_methods({ex_method}).front();
    settings.max_rows = ex_max_rows;
    settings.positive_only = !ex_all_rows;
    settings.absolute_columns = !ex_signed;
    double rate = 0.0;
    if (o_ex_rate->count()) {
      rate = ex_rate;
    } else if (!ex_report.empty()) {
      const auto report = read_json(ex_report);
      bool found = false;
      for (const auto& m : report.at("methods")) {
        if (m.at("method") == ex_method) {
          rate = m.at("auroc").at("peak").at("rate").get<double>();
          found = true;
        }
      }
      if (!found) throw ConfigError("report has no method '" + ex_method + "'");
    } else {
      throw ConfigError("explain needs --rate or --report");
    }
    if (!(rate >= 0.0 && rate <= 0.4)) throw ConfigError("--rate must lie in [0, 0.4]");
    if (settings.max_rows < 2) throw ConfigError("--max-rows must be at least 2");
    const auto predictor = Predictor::from_json(read_json(ex_predictor));
    auto data = tabular::split_label(load_table(ex_test), ex_label);
    const auto scores = read_scores_csv(ex_scores);
    if (scores.size() != data.labels.size()) throw SchemaError("score count differs from the test row count");
    ArtifactWriter out(resolve_output(flags.output, std::nullopt));
    write_explain(out, predictor, data.features, data.labels, scores, rate, settings, ex_seed, flags.jobs);
    out.commit("explain",
               {{"predictor", ex_predictor}, {"test", ex_test}, {"scores", ex_scores}, {"method", ex_method},
                {"rate", rate}, {"max_rows", ex_max_rows}, {"all_rows", ex_all_rows}, {"signed_columns", ex_signed}},
               {{"subsample", ex_seed}});
    return 0;
  }

  if (*pl_cmd) {
    RunConfig c = base_config(flags.config);
    if (o_pl_seed->count()) override_seed(c, pl_seed);
    if (!pl_scenario.empty()) {
      try {
        c.scenario = synth::ShiftScenario::from_json(read_json(pl_scenario));
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      c.train_csv.reset();
      c.test_csv.reset();
    }
    if (!pl_train.empty()) c.train_csv = pl_train;
    if (!pl_test.empty()) c.test_csv = pl_test;
    if ((!pl_train.empty() || !pl_test.empty()) && pl_scenario.empty()) c.scenario.reset();
    if (o_pl_label->count()) c.label_column = pl_label;
    if (o_pl_methods->count()) c.methods = parse_methods(split_list(pl_methods));
    if (pl_explain) c.explain.enabled = true;
    if (jobs_opt->count()) c.jobs = flags.jobs;
    c.validate();
    ArtifactWriter out(resolve_output(flags.output, flags.config.empty() ? std::nullopt : std::optional(c.output_dir)));
    run_pipeline(c, out);
    out.commit("pipeline", c.to_json(), c.seeds_json());
    return 0;
  }
  return 2;
}

void report_error(const char* kind, const char* message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
}

}  // namespace

int run(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    report_error("config", e.what());
    return 2;
  } catch (const ParseError& e) {
    report_error("parse", e.what());
  } catch (const SchemaError& e) {
    report_error("schema", e.what());
  } catch (const InvalidArgument& e) {
    report_error("invalid_argument", e.what());
  } catch (const NumericalError& e) {
    report_error("numerical", e.what());
  } catch (const UndefinedMetric& e) {
    report_error("undefined_metric", e.what());
  } catch (const IoError& e) {
    report_error("io", e.what());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
  }
  return 1;
}

}  // namespace odrop::cli
