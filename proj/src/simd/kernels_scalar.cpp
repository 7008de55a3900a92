#include "odrop/simd/kernels.hpp"

#include <algorithm>

namespace odrop::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void gemm_nt_scalar(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = dot_scalar(a + i * k, b + j * k, k);
    }
  }
}

void gemm_tn_acc_scalar(const double* a, const double* b, double* c, std::size_t m,
                        std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      axpy_scalar(a[i * n + j], b + i * k, c + j * k, k);
    }
  }
}

void gemm_nn_scalar(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  std::fill(c, c + m * k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      axpy_scalar(a[i * n + j], b + j * k, c + i * k, k);
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar,        dot_scalar,         axpy_scalar,
                                 squared_distance_scalar, gemm_nt_scalar, gemm_tn_acc_scalar,
                                 gemm_nn_scalar};
  return table;
}

}  // namespace odrop::simd
