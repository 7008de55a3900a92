#include <algorithm>
#include <cmath>

#include "odrop/error.hpp"
#include "odrop/nn.hpp"
#include "odrop/simd/kernels.hpp"

namespace odrop::nn {

DenseStack::DenseStack(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw InvalidArgument("a dense stack needs at least one layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] == 0 || dims_[l + 1] == 0) throw InvalidArgument("layer widths must be positive");
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

void DenseStack::init_he_uniform(Rng& rng, double scale) {
  for (std::size_t l = 0; l < n_layers(); ++l) {
    const std::size_t in = dims_[l], out = dims_[l + 1];
    const double bound = scale * std::sqrt(6.0 / static_cast<double>(in));
    double* w = params_.data() + offsets_[l];
    for (std::size_t i = 0; i < out * in; ++i) w[i] = rng.uniform(-bound, bound);
    std::fill(w + out * in, w + out * in + out, 0.0);
  }
}

void DenseStack::forward(const Matrix& x, Cache& cache) const {
  if (x.cols() != input_width()) {
    throw SchemaError("network expects " + std::to_string(input_width()) + " inputs, got " +
                      std::to_string(x.cols()));
  }
  const auto& k = simd::active();
  const std::size_t batch = x.rows();
  cache.activations.resize(dims_.size());
  cache.activations[0] = x;
  for (std::size_t l = 0; l < n_layers(); ++l) {
    const std::size_t in = dims_[l], out = dims_[l + 1];
    Matrix& a = cache.activations[l + 1];
    if (a.rows() != batch || a.cols() != out) a = Matrix(batch, out);
    k.gemm_nt(cache.activations[l].data(), weight(l), a.data(), batch, out, in);
    const double* b = bias(l);
    const bool relu = l + 1 < n_layers();
    for (std::size_t r = 0; r < batch; ++r) {
      double* row = a.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) {
        const double v = row[j] + b[j];
        row[j] = relu && v < 0.0 ? 0.0 : v;
      }
    }
  }
}

Matrix DenseStack::forward(const Matrix& x) const {
  Cache cache;
  forward(x, cache);
  return std::move(cache.activations.back());
}

void DenseStack::backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad,
                          Matrix* grad_input) const {
  if (grad.size() != params_.size()) throw InvalidArgument("gradient buffer has the wrong size");
  const auto& k = simd::active();
  const std::size_t batch = grad_output.rows();
  Matrix delta = grad_output;
  Matrix prev_delta;
  for (std::size_t l = n_layers(); l-- > 0;) {
    const std::size_t in = dims_[l], out = dims_[l + 1];
    const Matrix& input = cache.activations[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + out * in;
    k.gemm_tn_acc(delta.data(), input.data(), gw, batch, out, in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* row = delta.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) gb[j] += row[j];
    }
    if (l == 0 && grad_input == nullptr) break;
    prev_delta = Matrix(batch, in);
    k.gemm_nn(delta.data(), weight(l), prev_delta.data(), batch, out, in);
    if (l == 0) {
      *grad_input = std::move(prev_delta);
      break;
    }
    // The input of layer l is a ReLU output.
    const double* act = input.data();
    double* d = prev_delta.data();
    for (std::size_t i = 0; i < batch * in; ++i) {
      if (act[i] <= 0.0) d[i] = 0.0;
    }
    delta = std::move(prev_delta);
  }
}

nlohmann::json DenseStack::to_json() const { return {{"dims", dims_}, {"params", params_}}; }

DenseStack DenseStack::from_json(const nlohmann::json& doc) {
  DenseStack net(doc.at("dims").get<std::vector<std::size_t>>());
  auto params = doc.at("params").get<std::vector<double>>();
  if (params.size() != net.n_params()) {
    throw ParseError("network has " + std::to_string(params.size()) + " parameters, dims need " +
                     std::to_string(net.n_params()));
  }
  for (double p : params) {
    if (!std::isfinite(p)) throw ParseError("network parameter is not finite");
  }
  net.params_ = std::move(params);
  return net;
}

}  // namespace odrop::nn
