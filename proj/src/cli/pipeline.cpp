#include "common.hpp"

namespace odrop::cli {

void run_pipeline(const RunConfig& config, ArtifactWriter& out) {
  config.validate();
  Dataset data;
  if (config.scenario) {
    data = dataset_from_scenario(*config.scenario);
    write_dataset(out, data, config.label_column);
  } else {
    data = dataset_from_files(*config.train_csv, *config.test_csv, config.label_column);
  }

  const auto trained = train_predictor(data.train, data.train_labels, config.predictor, config.jobs);
  out.write_json("predictor.json", trained.predictor.to_json());
  out.write_json("grid_search.json", trained.grid_json());
  out.write_json("baseline.json", trained.baseline.to_json());
  const auto probability = trained.predictor.predict_proba(data.test);
  out.write_text("predictions.csv", predictions_csv(probability, data.test_labels));

  const auto scorers = ood::train_scorers(data.train, data.train_labels, config.methods, config.ood, config.jobs);
  std::vector<std::vector<double>> scores;
  for (const auto& scorer : scorers) {
    const std::string name(ood::to_string(scorer.method()));
    out.write_json("scorer_" + name + ".json", scorer.to_json());
    scores.push_back(score_table(scorer, data.test));
    out.write_text("scores_" + name + ".csv", scores_csv(scores.back()));
    out.write_json("scores_" + name + ".json", scores_meta(scorer.method(), scores.back().size()));
  }

  const auto reports = write_curves(out, config.methods, scores, probability, data.test_labels, config.rate_grid,
                                    data.ood_mask, {{"cv_baseline", trained.baseline.to_json()}});

  if (config.explain.enabled) {
    const auto it = std::find(config.methods.begin(), config.methods.end(), config.explain.method);
    const std::size_t i = static_cast<std::size_t>(it - config.methods.begin());
    const double rate = config.explain.rate ? *config.explain.rate : reports[i].auroc.peak_rate;
    write_explain(out, trained.predictor, data.test, data.test_labels, scores[i], rate, config.explain, config.seed,
                  config.jobs);
  }
}

}  // namespace odrop::cli
