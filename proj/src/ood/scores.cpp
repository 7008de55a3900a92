#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "odrop/error.hpp"
#include "odrop/ood.hpp"

namespace odrop::ood {
namespace {

void check_members(std::size_t m) {
  if (m < 2) throw InvalidArgument("ensemble scores need at least two members, got " + std::to_string(m));
}

// Member-major probability matrix: out[i][r] for member i, row r.
std::vector<std::vector<double>> member_probabilities(std::span<const nn::Mlp> ensemble, const Matrix& x) {
  std::vector<std::vector<double>> out;
  out.reserve(ensemble.size());
  for (const auto& m : ensemble) out.push_back(m.positive_probability(x));
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::vae_reconstruction: return "vae_reconstruction";
    case Method::ensemble_std: return "ensemble_std";
    case Method::ensemble_epistemic: return "ensemble_epistemic";
    case Method::energy: return "energy";
    case Method::gem: return "gem";
  }
  return "unknown";
}

Method method_from_string(std::string_view text) {
  for (Method m : all_methods()) {
    if (to_string(m) == text) return m;
  }
  throw InvalidArgument("unknown OOD method '" + std::string(text) + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::vae_reconstruction, Method::ensemble_std,
                                           Method::ensemble_epistemic, Method::energy, Method::gem};
  return methods;
}

bool orientation_flip(Method method) { return method == Method::gem; }

double logsumexp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double reconstruction_loss(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw InvalidArgument("input and reconstruction differ in width");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  return s;
}

double ensemble_std(std::span<const double> p) {
  check_members(p.size());
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double ss = 0.0;
  for (double v : p) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(p.size()));
}

double binary_entropy_bits(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double ensemble_epistemic(std::span<const double> p) {
  check_members(p.size());
  double mean = 0.0, aleatoric = 0.0;
  for (double v : p) {
    mean += v;
    aleatoric += binary_entropy_bits(v);
  }
  const double m = static_cast<double>(p.size());
  mean /= m;
  aleatoric /= m;
  return std::max(0.0, binary_entropy_bits(mean) - aleatoric);
}

double energy(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("energy temperature must be positive");
  std::vector<double> scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericalError("energy received a non-finite logit");
    scaled[i] = logits[i] / temperature;
  }
  return -temperature * logsumexp(scaled);
}

std::vector<double> score_vae_reconstruction(const nn::Vae& vae, const Matrix& x) {
  return vae.reconstruction_error(x);
}

std::vector<double> score_ensemble_std(std::span<const nn::Mlp> ensemble, const Matrix& x) {
  check_members(ensemble.size());
  const auto probs = member_probabilities(ensemble, x);
  std::vector<double> out(x.rows()), column(ensemble.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < ensemble.size(); ++i) column[i] = probs[i][r];
    out[r] = ensemble_std(column);
  }
  return out;
}

std::vector<double> score_ensemble_epistemic(std::span<const nn::Mlp> ensemble, const Matrix& x) {
  check_members(ensemble.size());
  const auto probs = member_probabilities(ensemble, x);
  std::vector<double> out(x.rows()), column(ensemble.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < ensemble.size(); ++i) column[i] = probs[i][r];
    out[r] = ensemble_epistemic(column);
  }
  return out;
}

std::vector<double> score_energy(const nn::Mlp& mlp, const Matrix& x, double temperature) {
  const Matrix f = mlp.logits(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = energy(f.row(r), temperature);
  return out;
}

std::vector<double> score_gem(const GemParams& params, const nn::Mlp& mlp, const Matrix& x) {
  const Matrix h = mlp.features(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = -gem_raw(params, h.row(r));
  return out;
}

}  // namespace odrop::ood
