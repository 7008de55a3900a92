#include <cmath>
#include <limits>

#include "odrop/error.hpp"
#include "odrop/nn.hpp"

namespace odrop::nn {
namespace {

// Moments of parameters whose gradient stays zero (dead ReLU units) decay
// geometrically into subnormals, which are very slow on x86. Their share
// of an update is below 1e-300 either way.
double flush(double v) { return std::abs(v) < std::numeric_limits<double>::min() ? 0.0 : v; }

}  // namespace

Adam::Adam(std::size_t n, double lr, double b1, double b2, double eps)
    : learning_rate(lr), beta1(b1), beta2(b2), epsilon(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidArgument("Adam state does not match the parameter count");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = flush(beta1 * m_[i] + (1.0 - beta1) * grad[i]);
    v_[i] = flush(beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i]);
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) throw InvalidArgument("init_scale must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"max_epochs", max_epochs},
          {"seed", seed},                   {"beta1", beta1},           {"beta2", beta2},
          {"epsilon", epsilon},             {"init_scale", init_scale}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc, const TrainConfig& defaults) {
  TrainConfig c = defaults;
  c.learning_rate = doc.value("learning_rate", c.learning_rate);
  c.batch_size = doc.value("batch_size", c.batch_size);
  c.max_epochs = doc.value("max_epochs", c.max_epochs);
  c.seed = doc.value("seed", c.seed);
  c.beta1 = doc.value("beta1", c.beta1);
  c.beta2 = doc.value("beta2", c.beta2);
  c.epsilon = doc.value("epsilon", c.epsilon);
  c.init_scale = doc.value("init_scale", c.init_scale);
  c.validate();
  return c;
}

}  // namespace odrop::nn
