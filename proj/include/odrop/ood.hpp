#pragma once

// The five OOD scores, all oriented so that a higher score means "more out of
// distribution": VAE reconstruction loss, ensemble standard deviation,
// ensemble epistemic uncertainty, energy and the Gaussian-mixture energy
// (GEM) of penultimate-layer features.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "odrop/matrix.hpp"
#include "odrop/nn.hpp"
#include "odrop/tabular.hpp"

namespace odrop::ood {

enum class Method { vae_reconstruction, ensemble_std, ensemble_epistemic, energy, gem };

std::string_view to_string(Method method);
// Throws InvalidArgument naming the token when it is not a method name.
Method method_from_string(std::string_view text);
const std::vector<Method>& all_methods();
// True when the raw formula is higher for in-distribution inputs and the
// score is therefore its negation (only GEM).
bool orientation_flip(Method method);

// Numerically stable log(sum(exp(v))).
double logsumexp(std::span<const double> v);

// sum_l (x_l - x_hat_l)^2
double reconstruction_loss(std::span<const double> x, std::span<const double> x_hat);
// Population standard deviation of the member probabilities (M >= 2).
double ensemble_std(std::span<const double> member_probabilities);
// Binary entropy in bits; 0 at p = 0 and p = 1.
double binary_entropy_bits(double p);
// Entropy of the mean prediction minus the mean member entropy, in bits,
// clamped at 0 against rounding (M >= 2).
double ensemble_epistemic(std::span<const double> member_probabilities);
// -T * logsumexp(f / T), natural log.
double energy(std::span<const double> logits, double temperature = 1.0);

struct GemParams {
  Matrix means;       // k x dim class means
  Matrix covariance;  // pooled, normalized by the total count, before regularization
  double epsilon = 0.0;  // ridge added to the diagonal before inversion
  Matrix precision;   // (covariance + epsilon I)^-1

  std::size_t classes() const { return means.rows(); }
  std::size_t dim() const { return means.cols(); }

  nlohmann::json to_json() const;
  static GemParams from_json(const nlohmann::json& doc);
  friend bool operator==(const GemParams&, const GemParams&) = default;
};

// Rows of `features` are h(x); labels index classes 0..k-1 and every class
// must be present. epsilon starts at 1e-6 * trace / dim and grows by 10x up
// to 1e-2 * trace / dim until the Cholesky factorization succeeds.
GemParams fit_gem_features(const Matrix& features, std::span<const int> labels, std::size_t k);
GemParams fit_gem(const nn::Mlp& mlp, const Matrix& x, std::span<const int> labels);
// log sum_j exp(-1/2 (h - mu_j)^T P (h - mu_j)); higher for in-distribution.
double gem_raw(const GemParams& params, std::span<const double> h);

// Batch scorers on encoded inputs, oriented higher = more OOD.
std::vector<double> score_vae_reconstruction(const nn::Vae& vae, const Matrix& x);
std::vector<double> score_ensemble_std(std::span<const nn::Mlp> ensemble, const Matrix& x);
std::vector<double> score_ensemble_epistemic(std::span<const nn::Mlp> ensemble, const Matrix& x);
std::vector<double> score_energy(const nn::Mlp& mlp, const Matrix& x, double temperature = 1.0);
std::vector<double> score_gem(const GemParams& params, const nn::Mlp& mlp, const Matrix& x);

struct GemModel {
  nn::Mlp mlp;
  GemParams params;
  friend bool operator==(const GemModel&, const GemModel&) = default;
};

struct EnergyModel {
  nn::Mlp mlp;
  double temperature = 1.0;
  friend bool operator==(const EnergyModel&, const EnergyModel&) = default;
};

// A trained scoring function together with the preprocessing it expects.
class OodScorer {
 public:
  using Model = std::variant<nn::Vae, std::vector<nn::Mlp>, EnergyModel, GemModel>;

  OodScorer(Method method, tabular::NeuralEncoder encoder, Model model);

  Method method() const { return method_; }
  bool orientation_flip() const { return ood::orientation_flip(method_); }
  const tabular::NeuralEncoder& encoder() const { return encoder_; }
  const Model& model() const { return model_; }

  std::vector<double> score(const tabular::Table& table) const;
  std::vector<double> score_encoded(const Matrix& x) const;

  nlohmann::json to_json() const;
  static OodScorer from_json(const nlohmann::json& doc);

  friend bool operator==(const OodScorer&, const OodScorer&) = default;

 private:
  Method method_;
  tabular::NeuralEncoder encoder_;
  Model model_;
};

struct OodTrainConfig {
  nn::TrainConfig classifier = nn::TrainConfig::classifier_defaults();
  nn::TrainConfig vae = nn::TrainConfig::vae_defaults();
  std::size_t ensemble_size = 5;
  std::vector<std::size_t> hidden{200, 50};
  std::size_t vae_hidden = 200;
  std::size_t vae_latent = 75;
  double temperature = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static OodTrainConfig from_json(const nlohmann::json& doc);
};

// Trains the models behind the requested methods, sharing them where the
// methods allow: one ensemble serves the two ensemble scores, and its first
// member is the classifier behind energy and GEM. Returns scorers in the
// order of `methods`. Ensemble members train on up to `jobs` threads.
std::vector<OodScorer> train_scorers(const tabular::Table& train, std::span<const int> labels,
                                     std::span<const Method> methods, const OodTrainConfig& config,
                                     unsigned jobs = 1);

}  // namespace odrop::ood
