#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "odrop/error.hpp"
#include "odrop/nn.hpp"

namespace odrop::nn::detail {

// Shuffled minibatch Adam loop shared by the classifier and the VAE.
// batch_step(rows, grad) returns the mean loss of the batch and overwrites
// grad.
template <class BatchStep>
void run_adam(std::size_t n_rows, const TrainConfig& config, std::span<double> params, BatchStep&& batch_step,
              TrainHistory* history, const char* what) {
  Adam adam(params.size(), config.learning_rate, config.beta1, config.beta2, config.epsilon);
  Rng shuffle_rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.size());
  std::vector<std::size_t> rows;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < n_rows; start += config.batch_size) {
      const std::size_t end = std::min(n_rows, start + config.batch_size);
      rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
      const double loss = batch_step(rows, std::span<double>(grad));
      if (!std::isfinite(loss)) {
        throw NumericalError(std::string(what) + " loss became non-finite at epoch " + std::to_string(epoch + 1) +
                             ", rows " + std::to_string(start) + "-" + std::to_string(end - 1) +
                             " of the shuffled order");
      }
      total += loss * static_cast<double>(end - start);
      adam.step(params, grad);
    }
    if (history) history->epoch_loss.push_back(total / static_cast<double>(n_rows));
  }
}

}  // namespace odrop::nn::detail
