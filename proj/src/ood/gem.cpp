#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "odrop/error.hpp"
#include "odrop/ood.hpp"
#include "odrop/simd/kernels.hpp"

namespace odrop::ood {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix to_matrix(const RowMatrix& m) {
  return Matrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                std::vector<double>(m.data(), m.data() + m.size()));
}

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& doc) {
  return Matrix(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>(),
                doc.at("data").get<std::vector<double>>());
}

}  // namespace

GemParams fit_gem_features(const Matrix& features, std::span<const int> labels, std::size_t k) {
  const std::size_t n = features.rows(), dim = features.cols();
  if (labels.size() != n) throw InvalidArgument("label count does not match the row count");
  if (k == 0 || dim == 0) throw InvalidArgument("GEM needs at least one class and one feature");
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw InvalidArgument("GEM label out of range");
    }
  }
  // Sums run in a canonical row order (label, then feature values) so the
  // result does not depend on the order of the training rows.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    const auto ra = features.row(a), rb = features.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  std::vector<std::size_t> counts(k, 0);
  Matrix means(k, dim);
  for (std::size_t r : order) {
    const auto j = static_cast<std::size_t>(labels[r]);
    ++counts[j];
    for (std::size_t c = 0; c < dim; ++c) means(j, c) += features(r, c);
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) throw InvalidArgument("GEM needs every class present, class " + std::to_string(j) + " is empty");
    for (std::size_t c = 0; c < dim; ++c) means(j, c) /= static_cast<double>(counts[j]);
  }

  RowMatrix cov = RowMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
  for (std::size_t r : order) {
    const auto j = static_cast<std::size_t>(labels[r]);
    for (std::size_t c = 0; c < dim; ++c) d[static_cast<Eigen::Index>(c)] = features(r, c) - means(j, c);
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  const double trace = cov.trace();
  if (!std::isfinite(trace)) throw NumericalError("GEM covariance is not finite");
  const double scale = trace > 0.0 ? trace / static_cast<double>(dim) : 1.0;
  const auto identity = RowMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (double eps = 1e-6 * scale; eps <= 1e-2 * scale * (1.0 + 1e-9); eps *= 10.0) {
    Eigen::LLT<RowMatrix> llt(cov + eps * identity);
    if (llt.info() != Eigen::Success) continue;
    RowMatrix precision = llt.solve(RowMatrix(identity));
    if (!precision.allFinite()) continue;
    // Symmetrize against solver rounding.
    precision = 0.5 * (precision + precision.transpose()).eval();
    GemParams out;
    out.means = std::move(means);
    out.covariance = to_matrix(cov);
    out.epsilon = eps;
    out.precision = to_matrix(precision);
    return out;
  }
  throw NumericalError("GEM covariance stays singular after regularization up to 1e-2 * trace / dim");
}

GemParams fit_gem(const nn::Mlp& mlp, const Matrix& x, std::span<const int> labels) {
  return fit_gem_features(mlp.features(x), labels, nn::Mlp::kClasses);
}

double gem_raw(const GemParams& params, std::span<const double> h) {
  const std::size_t dim = params.dim();
  if (h.size() != dim) {
    throw SchemaError("GEM expects " + std::to_string(dim) + " features, got " + std::to_string(h.size()));
  }
  const auto& k = simd::active();
  std::vector<double> diff(dim), terms(params.classes());
  for (std::size_t j = 0; j < params.classes(); ++j) {
    for (std::size_t c = 0; c < dim; ++c) diff[c] = h[c] - params.means(j, c);
    double q = 0.0;
    for (std::size_t a = 0; a < dim; ++a) q += diff[a] * k.dot(params.precision.row(a).data(), diff.data(), dim);
    terms[j] = -0.5 * q;
  }
  return logsumexp(terms);
}

nlohmann::json GemParams::to_json() const {
  return {{"means", matrix_json(means)},
          {"covariance", matrix_json(covariance)},
          {"epsilon", epsilon},
          {"precision", matrix_json(precision)}};
}

GemParams GemParams::from_json(const nlohmann::json& doc) {
  GemParams p;
  p.means = matrix_from_json(doc.at("means"));
  p.covariance = matrix_from_json(doc.at("covariance"));
  p.epsilon = doc.at("epsilon").get<double>();
  p.precision = matrix_from_json(doc.at("precision"));
  if (p.precision.rows() != p.dim() || p.precision.cols() != p.dim() || p.covariance.rows() != p.dim()) {
    throw ParseError("GEM parameter shapes disagree");
  }
  return p;
}

}  // namespace odrop::ood
