#pragma once

// Paired training-site / shifted-site tabular data with a known
// out-of-distribution subpopulation.

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "odrop/tabular.hpp"

namespace odrop::synth {

enum class OodCountMode { exact, binomial };

struct ShiftScenario {
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  std::size_t d = 10;
  double ood_fraction = 0.3;
  std::vector<double> mean_shift;  // length d; empty means no shift
  double cov_scale = 1.0;
  double label_noise_ood = 0.5;
  double positive_rate = 0.3;
  std::uint64_t seed = 0;
  OodCountMode count_mode = OodCountMode::exact;

  // Throws InvalidArgument when a bound is violated.
  void validate() const;

  nlohmann::json to_json() const;
  // Accepts either "mean_shift": [..] or "mean_shift_norm": r, the latter
  // spreading a shift of norm r evenly over all d coordinates.
  static ShiftScenario from_json(const nlohmann::json& doc);
};

// A shift of the given Euclidean norm spread evenly over d coordinates.
std::vector<double> uniform_shift(std::size_t d, double norm);

struct SynthData {
  tabular::Table train;
  std::vector<int> train_labels;
  tabular::Table test;
  std::vector<int> test_labels;
  std::vector<bool> ood_mask;
  // Probability of the positive class under the base labeling rule for each
  // test row (before any OOD label flipping).
  std::vector<double> test_oracle_probability;
};

// Base distribution: a two-component Gaussian mixture with a shared,
// randomly rotated covariance. Labels follow a logistic rule whose bias is
// tuned by bisection to the requested positive rate. Shifted rows add
// mean_shift, scale the covariance by cov_scale and flip their label with
// probability label_noise_ood. The training sample depends only on
// (n_train, d, positive_rate, seed), so scenarios differing only in their
// test composition share it.
SynthData generate(const ShiftScenario& scenario);

}  // namespace odrop::synth
