#include <algorithm>
#include <cmath>

#include "odrop/error.hpp"
#include "odrop/nn.hpp"
#include "training.hpp"

namespace odrop::nn {

double gaussian_kl(std::span<const double> mu, std::span<const double> logvar) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    kl += -0.5 * (1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]));
  }
  return kl;
}

Vae::Vae(std::size_t input_width, std::size_t hidden, std::size_t latent)
    : encoder_({input_width, hidden, 2 * latent}), decoder_({latent, hidden, input_width}) {}

Matrix Vae::reconstruct(const Matrix& x) const {
  const Matrix enc = encoder_.forward(x);
  const std::size_t latent = latent_width();
  Matrix mu(x.rows(), latent);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::copy_n(enc.row(r).data(), latent, mu.row(r).data());
  }
  return decoder_.forward(mu);
}

std::vector<double> Vae::reconstruction_error(const Matrix& x) const {
  const Matrix x_hat = reconstruct(x);
  std::vector<double> err(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - x_hat(r, c);
      s += d * d;
    }
    err[r] = s;
  }
  return err;
}

double Vae::loss_and_gradient(const Matrix& x, const Matrix& noise, std::span<double> grad) const {
  const std::size_t n = x.rows();
  const std::size_t latent = latent_width();
  if (noise.rows() != n || noise.cols() != latent) throw InvalidArgument("noise must be rows x latent width");
  if (grad.size() != n_params()) throw InvalidArgument("gradient buffer has the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  DenseStack::Cache enc_cache, dec_cache;
  encoder_.forward(x, enc_cache);
  const Matrix& enc = enc_cache.activations.back();
  Matrix z(n, latent);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < latent; ++j) {
      z(r, j) = enc(r, j) + std::exp(0.5 * enc(r, latent + j)) * noise(r, j);
    }
  }
  decoder_.forward(z, dec_cache);
  const Matrix& x_hat = dec_cache.activations.back();

  double loss = 0.0;
  Matrix d_out(n, x.cols());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x_hat(r, c) - x(r, c);
      loss += 0.5 * d * d;
      d_out(r, c) = d * inv_n;
    }
    loss += gaussian_kl(enc.row(r).subspan(0, latent), enc.row(r).subspan(latent, latent));
  }

  Matrix d_z;
  const std::size_t n_enc = encoder_.n_params();
  decoder_.backward(dec_cache, d_out, grad.subspan(n_enc), &d_z);
  Matrix d_enc(n, 2 * latent);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < latent; ++j) {
      const double mu = enc(r, j);
      const double lv = enc(r, latent + j);
      const double sd = std::exp(0.5 * lv);
      d_enc(r, j) = d_z(r, j) + mu * inv_n;
      d_enc(r, latent + j) = d_z(r, j) * noise(r, j) * 0.5 * sd + 0.5 * (std::exp(lv) - 1.0) * inv_n;
    }
  }
  encoder_.backward(enc_cache, d_enc, grad.subspan(0, n_enc));
  return loss * inv_n;
}

double Vae::loss(const Matrix& x, const Matrix& noise) const {
  std::vector<double> grad(n_params());
  return loss_and_gradient(x, noise, grad);
}

std::vector<double> Vae::flat_params() const {
  std::vector<double> out(encoder_.params().begin(), encoder_.params().end());
  out.insert(out.end(), decoder_.params().begin(), decoder_.params().end());
  return out;
}

void Vae::set_flat_params(std::span<const double> params) {
  if (params.size() != n_params()) throw InvalidArgument("parameter vector has the wrong size");
  const std::size_t n_enc = encoder_.n_params();
  std::copy_n(params.begin(), n_enc, encoder_.params().begin());
  std::copy(params.begin() + static_cast<std::ptrdiff_t>(n_enc), params.end(), decoder_.params().begin());
}

Vae train_vae(const Matrix& x, const TrainConfig& config, std::size_t hidden, std::size_t latent,
              TrainHistory* history) {
  config.validate();
  if (x.rows() == 0) throw InvalidArgument("train_vae needs at least one row");
  Vae model(x.cols(), hidden, latent);
  Rng init_rng(derive_seed(config.seed, 1));
  model.encoder().init_he_uniform(init_rng, config.init_scale);
  model.decoder().init_he_uniform(init_rng, config.init_scale);
  Rng noise_rng(derive_seed(config.seed, 3));

  // Adam sees encoder and decoder parameters as one vector.
  std::vector<double> params = model.flat_params();
  Matrix noise;
  detail::run_adam(
      x.rows(), config, params,
      [&](const std::vector<std::size_t>& rows, std::span<double> grad) {
        model.set_flat_params(params);
        noise = Matrix(rows.size(), latent);
        for (double& v : noise.storage()) v = noise_rng.normal();
        return model.loss_and_gradient(x.select_rows(rows), noise, grad);
      },
      history, "VAE");
  model.set_flat_params(params);
  return model;
}

}  // namespace odrop::nn
