#include <algorithm>
#include <optional>

#include "odrop/error.hpp"
#include "odrop/ood.hpp"

namespace odrop::ood {
namespace {

bool model_matches(Method method, const OodScorer::Model& model) {
  switch (method) {
    case Method::vae_reconstruction: return std::holds_alternative<nn::Vae>(model);
    case Method::ensemble_std:
    case Method::ensemble_epistemic: return std::holds_alternative<std::vector<nn::Mlp>>(model);
    case Method::energy: return std::holds_alternative<EnergyModel>(model);
    case Method::gem: return std::holds_alternative<GemModel>(model);
  }
  return false;
}

std::size_t model_input_width(const OodScorer::Model& model) {
  struct Visitor {
    std::size_t operator()(const nn::Vae& v) const { return v.input_width(); }
    std::size_t operator()(const std::vector<nn::Mlp>& e) const { return e.front().input_width(); }
    std::size_t operator()(const EnergyModel& m) const { return m.mlp.input_width(); }
    std::size_t operator()(const GemModel& m) const { return m.mlp.input_width(); }
  };
  return std::visit(Visitor{}, model);
}

}  // namespace

OodScorer::OodScorer(Method method, tabular::NeuralEncoder encoder, Model model)
    : method_(method), encoder_(std::move(encoder)), model_(std::move(model)) {
  if (!model_matches(method_, model_)) {
    throw InvalidArgument("model type does not fit OOD method " + std::string(to_string(method_)));
  }
  if (const auto* e = std::get_if<std::vector<nn::Mlp>>(&model_); e && e->size() < 2) {
    throw InvalidArgument("ensemble scores need at least two members");
  }
  if (const auto* m = std::get_if<GemModel>(&model_); m && m->params.dim() != m->mlp.feature_width()) {
    throw InvalidArgument("GEM parameters do not match the classifier feature width");
  }
  if (model_input_width(model_) != encoder_.output_width()) {
    throw InvalidArgument("model input width does not match the encoder output width");
  }
}

std::vector<double> OodScorer::score(const tabular::Table& table) const {
  return score_encoded(encoder_.transform(table));
}

std::vector<double> OodScorer::score_encoded(const Matrix& x) const {
  switch (method_) {
    case Method::vae_reconstruction: return score_vae_reconstruction(std::get<nn::Vae>(model_), x);
    case Method::ensemble_std: return score_ensemble_std(std::get<std::vector<nn::Mlp>>(model_), x);
    case Method::ensemble_epistemic: return score_ensemble_epistemic(std::get<std::vector<nn::Mlp>>(model_), x);
    case Method::energy: {
      const auto& m = std::get<EnergyModel>(model_);
      return score_energy(m.mlp, x, m.temperature);
    }
    case Method::gem: {
      const auto& m = std::get<GemModel>(model_);
      return score_gem(m.params, m.mlp, x);
    }
  }
  return {};
}

nlohmann::json OodScorer::to_json() const {
  nlohmann::json doc;
  doc["format"] = "odrop.scorer";
  doc["version"] = 1;
  doc["method"] = std::string(to_string(method_));
  doc["orientation_flip"] = orientation_flip();
  doc["encoder"] = encoder_.to_json();
  switch (method_) {
    case Method::vae_reconstruction: doc["vae"] = std::get<nn::Vae>(model_).to_json(); break;
    case Method::ensemble_std:
    case Method::ensemble_epistemic: {
      auto& members = doc["ensemble"] = nlohmann::json::array();
      for (const auto& m : std::get<std::vector<nn::Mlp>>(model_)) members.push_back(m.to_json());
      break;
    }
    case Method::energy: {
      const auto& m = std::get<EnergyModel>(model_);
      doc["mlp"] = m.mlp.to_json();
      doc["temperature"] = m.temperature;
      break;
    }
    case Method::gem: {
      const auto& m = std::get<GemModel>(model_);
      doc["mlp"] = m.mlp.to_json();
      doc["gem"] = m.params.to_json();
      break;
    }
  }
  return doc;
}

OodScorer OodScorer::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("format", std::string()) != "odrop.scorer") {
    throw ParseError("not an odrop.scorer document");
  }
  if (doc.value("version", 0) != 1) throw ParseError("unsupported odrop.scorer version");
  const Method method = method_from_string(doc.at("method").get<std::string>());
  auto encoder = tabular::NeuralEncoder::from_json(doc.at("encoder"));
  switch (method) {
    case Method::vae_reconstruction: return {method, std::move(encoder), nn::Vae::from_json(doc.at("vae"))};
    case Method::ensemble_std:
    case Method::ensemble_epistemic: {
      std::vector<nn::Mlp> members;
      for (const auto& m : doc.at("ensemble")) members.push_back(nn::Mlp::from_json(m));
      return {method, std::move(encoder), std::move(members)};
    }
    case Method::energy:
      return {method, std::move(encoder),
              EnergyModel{nn::Mlp::from_json(doc.at("mlp")), doc.at("temperature").get<double>()}};
    case Method::gem:
      return {method, std::move(encoder),
              GemModel{nn::Mlp::from_json(doc.at("mlp")), GemParams::from_json(doc.at("gem"))}};
  }
  throw ParseError("unhandled OOD method");
}

void OodTrainConfig::validate() const {
  classifier.validate();
  vae.validate();
  if (ensemble_size < 2) throw InvalidArgument("ensemble_size must be at least 2");
  if (hidden.empty()) throw InvalidArgument("the classifier needs at least one hidden layer");
  if (vae_hidden == 0 || vae_latent == 0) throw InvalidArgument("VAE widths must be positive");
  if (!(temperature > 0.0)) throw InvalidArgument("energy temperature must be positive");
}

nlohmann::json OodTrainConfig::to_json() const {
  return {{"classifier", classifier.to_json()}, {"vae", vae.to_json()},       {"ensemble_size", ensemble_size},
          {"hidden", hidden},                   {"vae_hidden", vae_hidden}, {"vae_latent", vae_latent},
          {"temperature", temperature}};
}

OodTrainConfig OodTrainConfig::from_json(const nlohmann::json& doc) {
  OodTrainConfig c;
  if (doc.contains("classifier")) c.classifier = nn::TrainConfig::from_json(doc["classifier"], c.classifier);
  if (doc.contains("vae")) c.vae = nn::TrainConfig::from_json(doc["vae"], c.vae);
  c.ensemble_size = doc.value("ensemble_size", c.ensemble_size);
  c.hidden = doc.value("hidden", c.hidden);
  c.vae_hidden = doc.value("vae_hidden", c.vae_hidden);
  c.vae_latent = doc.value("vae_latent", c.vae_latent);
  c.temperature = doc.value("temperature", c.temperature);
  c.validate();
  return c;
}

std::vector<OodScorer> train_scorers(const tabular::Table& train, std::span<const int> labels,
                                     std::span<const Method> methods, const OodTrainConfig& config,
                                     unsigned jobs) {
  config.validate();
  if (labels.size() != train.rows()) throw InvalidArgument("label count does not match the row count");
  auto wants = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  const bool need_ensemble = wants(Method::ensemble_std) || wants(Method::ensemble_epistemic);
  const bool need_single = wants(Method::energy) || wants(Method::gem);

  const auto encoder = tabular::NeuralEncoder::fit(train);
  const Matrix x = encoder.transform(train);

  std::vector<nn::Mlp> ensemble;
  if (need_ensemble) {
    ensemble = nn::train_ensemble(x, labels, config.classifier, config.ensemble_size, config.hidden, jobs);
  } else if (need_single) {
    // Same seed as ensemble member 0.
    ensemble.push_back(nn::train_classifier(x, labels, config.classifier, config.hidden));
  }
  std::optional<nn::Vae> vae;
  if (wants(Method::vae_reconstruction)) {
    vae = nn::train_vae(x, config.vae, config.vae_hidden, config.vae_latent);
  }
  std::optional<GemParams> gem;
  if (wants(Method::gem)) gem = fit_gem(ensemble.front(), x, labels);

  std::vector<OodScorer> out;
  for (Method m : methods) {
    switch (m) {
      case Method::vae_reconstruction: out.emplace_back(m, encoder, *vae); break;
      case Method::ensemble_std:
      case Method::ensemble_epistemic: out.emplace_back(m, encoder, ensemble); break;
      case Method::energy: out.emplace_back(m, encoder, EnergyModel{ensemble.front(), config.temperature}); break;
      case Method::gem: out.emplace_back(m, encoder, GemModel{ensemble.front(), *gem}); break;
    }
  }
  return out;
}

}  // namespace odrop::ood
