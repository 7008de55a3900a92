#pragma once

// Feedforward networks with analytic gradients: a ReLU multilayer perceptron
// classifier with two logits and a variational autoencoder with a Gaussian
// latent space, both trained with Adam.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "odrop/matrix.hpp"
#include "odrop/random.hpp"

namespace odrop::nn {

// Fully connected layers, ReLU between them and a linear final layer.
// Parameters live in one flat vector: per layer the weight matrix
// (out x in, row-major) followed by the bias.
class DenseStack {
 public:
  DenseStack() = default;
  explicit DenseStack(std::vector<std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t n_layers() const { return dims_.size() - 1; }
  std::size_t input_width() const { return dims_.front(); }
  std::size_t output_width() const { return dims_.back(); }
  std::size_t n_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  const double* weight(std::size_t layer) const { return params_.data() + offsets_[layer]; }
  const double* bias(std::size_t layer) const { return weight(layer) + dims_[layer + 1] * dims_[layer]; }

  // He-uniform weights U(-s, s), s = scale * sqrt(6 / fan_in); zero biases.
  void init_he_uniform(Rng& rng, double scale = 1.0);

  // activations[0] is the input, activations[l] the output of layer l.
  struct Cache {
    std::vector<Matrix> activations;
  };
  void forward(const Matrix& x, Cache& cache) const;
  Matrix forward(const Matrix& x) const;

  // Accumulates dLoss/dparams into `grad` given dLoss/doutput. When
  // `grad_input` is non-null it receives dLoss/dinput.
  void backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad,
                Matrix* grad_input = nullptr) const;

  nlohmann::json to_json() const;
  static DenseStack from_json(const nlohmann::json& doc);

  friend bool operator==(const DenseStack&, const DenseStack&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  Adam() = default;
  Adam(std::size_t n, double lr, double b1, double b2, double eps);
  void step(std::span<double> params, std::span<const double> grad);

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Multiplies the He-uniform bound; tests use small values.
  double init_scale = 1.0;

  static TrainConfig classifier_defaults() { return {}; }
  static TrainConfig vae_defaults() {
    TrainConfig c;
    c.max_epochs = 400;
    return c;
  }
  void validate() const;
  nlohmann::json to_json() const;
  // Absent keys keep the values of `defaults`.
  static TrainConfig from_json(const nlohmann::json& doc, const TrainConfig& defaults);
  static TrainConfig from_json(const nlohmann::json& doc) { return from_json(doc, TrainConfig{}); }
};

// Mean training loss per epoch, in order.
struct TrainHistory {
  std::vector<double> epoch_loss;
};

class Mlp {
 public:
  static constexpr std::size_t kClasses = 2;

  Mlp() = default;
  // Input width, hidden widths, then kClasses logits.
  Mlp(std::size_t input_width, std::vector<std::size_t> hidden = {200, 50});

  std::size_t input_width() const { return net_.input_width(); }
  std::size_t feature_width() const { return net_.dims()[net_.n_layers() - 1]; }
  DenseStack& net() { return net_; }
  const DenseStack& net() const { return net_; }

  Matrix logits(const Matrix& x) const;
  // Activations of the last hidden layer (post-ReLU).
  Matrix features(const Matrix& x) const;
  // Softmax probability of class 1.
  std::vector<double> positive_probability(const Matrix& x) const;

  // Mean softmax cross-entropy over the rows; gradient (same layout as the
  // parameters) is overwritten.
  double loss_and_gradient(const Matrix& x, std::span<const int> labels, std::span<double> grad) const;
  double loss(const Matrix& x, std::span<const int> labels) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  explicit Mlp(DenseStack net) : net_(std::move(net)) {}
  DenseStack net_;
};

std::array<double, 2> softmax2(double f0, double f1);

Mlp train_classifier(const Matrix& x, std::span<const int> labels, const TrainConfig& config,
                     std::vector<std::size_t> hidden = {200, 50}, TrainHistory* history = nullptr);

// Members use seeds config.seed + i; at most `jobs` train concurrently.
std::vector<Mlp> train_ensemble(const Matrix& x, std::span<const int> labels, const TrainConfig& config,
                                std::size_t members = 5, std::vector<std::size_t> hidden = {200, 50},
                                unsigned jobs = 1);

class Vae {
 public:
  Vae() = default;
  Vae(std::size_t input_width, std::size_t hidden = 200, std::size_t latent = 75);

  std::size_t input_width() const { return encoder_.input_width(); }
  std::size_t latent_width() const { return encoder_.output_width() / 2; }
  DenseStack& encoder() { return encoder_; }
  DenseStack& decoder() { return decoder_; }
  const DenseStack& encoder() const { return encoder_; }
  const DenseStack& decoder() const { return decoder_; }
  std::size_t n_params() const { return encoder_.n_params() + decoder_.n_params(); }

  // Deterministic pass: decode the encoder mean.
  Matrix reconstruct(const Matrix& x) const;
  // Per-row sum of squared reconstruction errors.
  std::vector<double> reconstruction_error(const Matrix& x) const;

  // Mean over rows of 0.5 * ||x - x_hat||^2 + KL(q(z|x) || N(0, I)) with
  // z = mu + exp(logvar / 2) * noise. Gradient layout: encoder parameters
  // then decoder parameters; overwritten.
  double loss_and_gradient(const Matrix& x, const Matrix& noise, std::span<double> grad) const;
  double loss(const Matrix& x, const Matrix& noise) const;

  // Parameters as one vector (encoder then decoder), for optimizers and tests.
  std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> params);

  nlohmann::json to_json() const;
  static Vae from_json(const nlohmann::json& doc);

  friend bool operator==(const Vae&, const Vae&) = default;

 private:
  DenseStack encoder_;
  DenseStack decoder_;
};

// KL(N(mu, exp(logvar)) || N(0, 1)) summed over the coordinates.
double gaussian_kl(std::span<const double> mu, std::span<const double> logvar);

Vae train_vae(const Matrix& x, const TrainConfig& config, std::size_t hidden = 200, std::size_t latent = 75,
              TrainHistory* history = nullptr);

}  // namespace odrop::nn
