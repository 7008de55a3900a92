#include <algorithm>
#include <cmath>

#include "odrop/error.hpp"
#include "odrop/nn.hpp"
#include "odrop/parallel.hpp"
#include "training.hpp"

namespace odrop::nn {
namespace {

std::vector<std::size_t> mlp_dims(std::size_t input_width, const std::vector<std::size_t>& hidden) {
  if (hidden.empty()) throw InvalidArgument("the classifier needs at least one hidden layer");
  std::vector<std::size_t> dims{input_width};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(Mlp::kClasses);
  return dims;
}

void check_labels(const Matrix& x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw InvalidArgument("label count does not match the row count");
  bool seen[2] = {false, false};
  for (int y : labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
    seen[y] = true;
  }
  if (!seen[0] || !seen[1]) throw InvalidArgument("classifier training needs both classes");
}

}  // namespace

std::array<double, 2> softmax2(double f0, double f1) {
  const double m = std::max(f0, f1);
  const double e0 = std::exp(f0 - m), e1 = std::exp(f1 - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

Mlp::Mlp(std::size_t input_width, std::vector<std::size_t> hidden) : net_(mlp_dims(input_width, hidden)) {}

Matrix Mlp::logits(const Matrix& x) const { return net_.forward(x); }

Matrix Mlp::features(const Matrix& x) const {
  DenseStack::Cache cache;
  net_.forward(x, cache);
  return std::move(cache.activations[net_.n_layers() - 1]);
}

std::vector<double> Mlp::positive_probability(const Matrix& x) const {
  const Matrix f = logits(x);
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p[r] = softmax2(f(r, 0), f(r, 1))[1];
  return p;
}

double Mlp::loss_and_gradient(const Matrix& x, std::span<const int> labels, std::span<double> grad) const {
  if (labels.size() != x.rows()) throw InvalidArgument("label count does not match the row count");
  std::fill(grad.begin(), grad.end(), 0.0);
  DenseStack::Cache cache;
  net_.forward(x, cache);
  const Matrix& f = cache.activations.back();
  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix dlogits(n, kClasses);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double m = std::max(f(r, 0), f(r, 1));
    const double lse = m + std::log(std::exp(f(r, 0) - m) + std::exp(f(r, 1) - m));
    loss += lse - f(r, static_cast<std::size_t>(labels[r]));
    for (std::size_t j = 0; j < kClasses; ++j) {
      const double p = std::exp(f(r, j) - lse);
      dlogits(r, j) = (p - (static_cast<std::size_t>(labels[r]) == j ? 1.0 : 0.0)) * inv_n;
    }
  }
  net_.backward(cache, dlogits, grad);
  return loss * inv_n;
}

double Mlp::loss(const Matrix& x, std::span<const int> labels) const {
  std::vector<double> grad(net_.n_params());
  return loss_and_gradient(x, labels, grad);
}

Mlp train_classifier(const Matrix& x, std::span<const int> labels, const TrainConfig& config,
                     std::vector<std::size_t> hidden, TrainHistory* history) {
  config.validate();
  check_labels(x, labels);
  Mlp model(x.cols(), std::move(hidden));
  Rng init_rng(derive_seed(config.seed, 1));
  model.net().init_he_uniform(init_rng, config.init_scale);
  std::vector<int> batch_labels;
  detail::run_adam(
      x.rows(), config, model.net().params(),
      [&](const std::vector<std::size_t>& rows, std::span<double> grad) {
        batch_labels.clear();
        for (auto r : rows) batch_labels.push_back(labels[r]);
        return model.loss_and_gradient(x.select_rows(rows), batch_labels, grad);
      },
      history, "classifier");
  return model;
}

std::vector<Mlp> train_ensemble(const Matrix& x, std::span<const int> labels, const TrainConfig& config,
                                std::size_t members, std::vector<std::size_t> hidden, unsigned jobs) {
  if (members == 0) throw InvalidArgument("an ensemble needs at least one member");
  std::vector<Mlp> out(members);
  parallel_for(members, jobs, [&](std::size_t i) {
    TrainConfig c = config;
    c.seed = config.seed + i;
    out[i] = train_classifier(x, labels, c, hidden);
  });
  return out;
}

}  // namespace odrop::nn
