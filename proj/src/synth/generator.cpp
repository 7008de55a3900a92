#include <cmath>

#include "odrop/error.hpp"
#include "odrop/random.hpp"
#include "odrop/synth.hpp"

namespace odrop::synth {
namespace {

constexpr double kMixtureOffset = 1.5;
// Nearly deterministic labels; softer rules let uncertainty scores lift AUROC
// on unshifted data just by dropping boundary rows.
constexpr double kLabelSharpness = 15.0;
// Strongly correlated features (spectrum spans 300x), so a mean shift leaves
// the data manifold instead of sliding along it.
constexpr double kEigenMax = 3.0;
constexpr double kEigenMin = 0.01;
constexpr std::size_t kCalibrationSamples = 20000;

enum Stream : std::uint64_t { kStructure = 1, kCalibration = 2, kTrain = 3, kTest = 4, kComposition = 5 };

struct BaseModel {
  std::size_t d;
  std::vector<double> mixture_direction;
  Matrix loading;  // d x d, rotation scaled by sqrt eigenvalues
  std::vector<double> weights;
  double bias = 0.0;

  double logit(std::span<const double> x) const {
    double s = bias;
    for (std::size_t i = 0; i < d; ++i) s += kLabelSharpness * weights[i] * x[i];
    return s;
  }

  // x = component mean + shift + sqrt(scale) * loading * z
  void draw(Rng& rng, std::span<double> x, std::span<const double> shift, double scale) const {
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    std::vector<double> z(d);
    for (auto& v : z) v = rng.normal();
    const double root = std::sqrt(scale);
    for (std::size_t i = 0; i < d; ++i) {
      double v = sign * kMixtureOffset * mixture_direction[i];
      if (!shift.empty()) v += shift[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += loading(i, j) * z[j];
      x[i] = v + root * acc;
    }
  }
};

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<double> unit_vector(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

BaseModel build_model(std::size_t d, double positive_rate, std::uint64_t seed) {
  BaseModel m;
  m.d = d;
  Rng rng(derive_seed(seed, kStructure));
  m.mixture_direction = unit_vector(rng, d);
  m.weights = unit_vector(rng, d);
  // Random orthogonal basis by Gram-Schmidt on Gaussian vectors.
  Matrix basis(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> v;
    double norm = 0.0;
    do {
      v = unit_vector(rng, d);
      for (std::size_t k = 0; k < i; ++k) {
        double proj = 0.0;
        for (std::size_t j = 0; j < d; ++j) proj += v[j] * basis(k, j);
        for (std::size_t j = 0; j < d; ++j) v[j] -= proj * basis(k, j);
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (std::size_t j = 0; j < d; ++j) basis(i, j) = v[j] / norm;
  }
  // Eigenvalues spaced geometrically between kEigenMax and kEigenMin.
  m.loading = Matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const double t = d == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(d - 1);
    const double root = std::sqrt(kEigenMax * std::pow(kEigenMin / kEigenMax, t));
    for (std::size_t i = 0; i < d; ++i) m.loading(i, k) = basis(k, i) * root;
  }
  // Bias bisection on a fixed calibration sample.
  Rng cal(derive_seed(seed, kCalibration));
  std::vector<double> margins(kCalibrationSamples);
  std::vector<double> x(d);
  for (auto& s : margins) {
    m.draw(cal, x, {}, 1.0);
    m.bias = 0.0;
    s = m.logit(x);
  }
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double s : margins) mean += sigmoid(s + mid);
    mean /= static_cast<double>(margins.size());
    (mean < positive_rate ? lo : hi) = mid;
  }
  m.bias = 0.5 * (lo + hi);
  return m;
}

tabular::Table make_table(Matrix values) {
  std::vector<tabular::Column> cols(values.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j].name = "x" + std::to_string(j);
  return tabular::Table::from_matrix(std::move(cols), std::move(values));
}

}  // namespace

void ShiftScenario::validate() const {
  if (d == 0) throw InvalidArgument("scenario dimension d must be positive");
  if (n_train == 0) throw InvalidArgument("scenario n_train must be positive");
  if (!(ood_fraction >= 0.0 && ood_fraction <= 1.0)) throw InvalidArgument("ood_fraction must lie in [0, 1]");
  if (!mean_shift.empty() && mean_shift.size() != d) {
    throw InvalidArgument("mean_shift has length " + std::to_string(mean_shift.size()) + ", expected d=" +
                          std::to_string(d));
  }
  for (double v : mean_shift) {
    if (!std::isfinite(v)) throw InvalidArgument("mean_shift must be finite");
  }
  if (!(cov_scale > 0.0) || !std::isfinite(cov_scale)) throw InvalidArgument("cov_scale must be positive");
  if (!(label_noise_ood >= 0.0 && label_noise_ood <= 1.0)) {
    throw InvalidArgument("label_noise_ood must lie in [0, 1]");
  }
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw InvalidArgument("positive_rate must lie in (0, 1)");
}

std::vector<double> uniform_shift(std::size_t d, double norm) {
  return std::vector<double>(d, d == 0 ? 0.0 : norm / std::sqrt(static_cast<double>(d)));
}

nlohmann::json ShiftScenario::to_json() const {
  return {{"n_train", n_train},
          {"n_test", n_test},
          {"d", d},
          {"ood_fraction", ood_fraction},
          {"mean_shift", mean_shift.empty() ? std::vector<double>(d, 0.0) : mean_shift},
          {"cov_scale", cov_scale},
          {"label_noise_ood", label_noise_ood},
          {"positive_rate", positive_rate},
          {"seed", seed},
          {"count_mode", count_mode == OodCountMode::exact ? "exact" : "binomial"}};
}

ShiftScenario ShiftScenario::from_json(const nlohmann::json& doc) {
  ShiftScenario s;
  try {
    s.n_train = doc.value("n_train", s.n_train);
    s.n_test = doc.value("n_test", s.n_test);
    s.d = doc.value("d", s.d);
    s.ood_fraction = doc.value("ood_fraction", s.ood_fraction);
    s.cov_scale = doc.value("cov_scale", s.cov_scale);
    s.label_noise_ood = doc.value("label_noise_ood", s.label_noise_ood);
    s.positive_rate = doc.value("positive_rate", s.positive_rate);
    s.seed = doc.value("seed", s.seed);
    const std::string mode = doc.value("count_mode", std::string("exact"));
    if (mode == "exact") {
      s.count_mode = OodCountMode::exact;
    } else if (mode == "binomial") {
      s.count_mode = OodCountMode::binomial;
    } else {
      throw InvalidArgument("count_mode must be 'exact' or 'binomial'");
    }
    if (doc.contains("mean_shift")) {
      s.mean_shift = doc.at("mean_shift").get<std::vector<double>>();
    } else if (doc.contains("mean_shift_norm")) {
      s.mean_shift = uniform_shift(s.d, doc.at("mean_shift_norm").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario document: ") + e.what());
  }
  s.validate();
  return s;
}

SynthData generate(const ShiftScenario& scenario) {
  scenario.validate();
  const std::size_t d = scenario.d;
  const BaseModel model = build_model(d, scenario.positive_rate, scenario.seed);
  SynthData out;

  Matrix train(scenario.n_train, d);
  out.train_labels.resize(scenario.n_train);
  Rng train_rng(derive_seed(scenario.seed, kTrain));
  for (std::size_t r = 0; r < scenario.n_train; ++r) {
    model.draw(train_rng, train.row(r), {}, 1.0);
    out.train_labels[r] = train_rng.bernoulli(sigmoid(model.logit(train.row(r)))) ? 1 : 0;
  }

  out.ood_mask.assign(scenario.n_test, false);
  Rng comp_rng(derive_seed(scenario.seed, kComposition));
  if (scenario.count_mode == OodCountMode::exact) {
    const auto n_ood = static_cast<std::size_t>(std::llround(scenario.ood_fraction * static_cast<double>(scenario.n_test)));
    std::vector<std::size_t> idx(scenario.n_test);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    comp_rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i = 0; i < n_ood; ++i) out.ood_mask[idx[i]] = true;
  } else {
    for (std::size_t i = 0; i < scenario.n_test; ++i) out.ood_mask[i] = comp_rng.bernoulli(scenario.ood_fraction);
  }

  Matrix test(scenario.n_test, d);
  out.test_labels.resize(scenario.n_test);
  out.test_oracle_probability.resize(scenario.n_test);
  Rng test_rng(derive_seed(scenario.seed, kTest));
  for (std::size_t r = 0; r < scenario.n_test; ++r) {
    const bool ood = out.ood_mask[r];
    model.draw(test_rng, test.row(r), ood ? std::span<const double>(scenario.mean_shift) : std::span<const double>{},
               ood ? scenario.cov_scale : 1.0);
    const double p = sigmoid(model.logit(test.row(r)));
    out.test_oracle_probability[r] = p;
    int y = test_rng.bernoulli(p) ? 1 : 0;
    // Draw the flip coin for every row so ID rows consume the same stream
    // whatever the noise rate.
    const bool flip = test_rng.bernoulli(scenario.label_noise_ood);
    if (ood && flip) y = 1 - y;
    out.test_labels[r] = y;
  }
  out.train = make_table(std::move(train));
  out.test = make_table(std::move(test));
  return out;
}

}  // namespace odrop::synth
