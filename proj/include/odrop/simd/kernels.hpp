#pragma once

// Dense arithmetic kernels behind the neural models, the OOD distance
// computations and Ward clustering. Every kernel has a scalar reference
// implementation; an AVX2/FMA variant is selected at runtime when the CPU
// supports it. Setting ODROP_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace odrop::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // c[m x n] = a[m x k] * b[n x k]^T, all row-major
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k);
  // c[n x k] += a[m x n]^T * b[m x k]
  void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t n, std::size_t k);
  // c[m x k] = a[m x n] * b[n x k]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k);
};

const KernelTable& scalar_kernels();
// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

// The table every library routine goes through.
const KernelTable& active();
Isa active_isa();
// Switches the process-wide table; throws InvalidArgument for an ISA the
// CPU does not support. Not thread-safe with concurrent kernel calls.
void set_active(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  return active().squared_distance(x.data(), y.data(), x.size());
}

}  // namespace odrop::simd
