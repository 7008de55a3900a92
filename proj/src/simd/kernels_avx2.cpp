// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "odrop/simd/kernels.hpp"

namespace odrop::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    total += d * d;
  }
  return total;
}

// Dot products of rows a_i0, a_i1 with rows b_j..b_j+3: eight accumulators
// share the loads.
void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd(), s02 = _mm256_setzero_pd(),
              s03 = _mm256_setzero_pd();
      __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd(), s12 = _mm256_setzero_pd(),
              s13 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d x0 = _mm256_loadu_pd(a0 + p);
        const __m256d x1 = _mm256_loadu_pd(a1 + p);
        __m256d y = _mm256_loadu_pd(b0 + p);
        s00 = _mm256_fmadd_pd(x0, y, s00);
        s10 = _mm256_fmadd_pd(x1, y, s10);
        y = _mm256_loadu_pd(b1 + p);
        s01 = _mm256_fmadd_pd(x0, y, s01);
        s11 = _mm256_fmadd_pd(x1, y, s11);
        y = _mm256_loadu_pd(b2 + p);
        s02 = _mm256_fmadd_pd(x0, y, s02);
        s12 = _mm256_fmadd_pd(x1, y, s12);
        y = _mm256_loadu_pd(b3 + p);
        s03 = _mm256_fmadd_pd(x0, y, s03);
        s13 = _mm256_fmadd_pd(x1, y, s13);
      }
      double r[8] = {hsum(s00), hsum(s01), hsum(s02), hsum(s03), hsum(s10), hsum(s11), hsum(s12), hsum(s13)};
      for (; p < k; ++p) {
        r[0] += a0[p] * b0[p];
        r[1] += a0[p] * b1[p];
        r[2] += a0[p] * b2[p];
        r[3] += a0[p] * b3[p];
        r[4] += a1[p] * b0[p];
        r[5] += a1[p] * b1[p];
        r[6] += a1[p] * b2[p];
        r[7] += a1[p] * b3[p];
      }
      for (int q = 0; q < 4; ++q) {
        c0[j + q] = r[q];
        c1[j + q] = r[4 + q];
      }
    }
    for (; j < n; ++j) {
      c0[j] = dot_avx2(a0, b + j * k, k);
      c1[j] = dot_avx2(a1, b + j * k, k);
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot_avx2(a + i * k, b + j * k, k);
  }
}

// out[r][p] += sum_s coef[r * rs + s * ss] * rows[s * k + p] for r < n_out,
// s < n_sum. Blocks of four output rows by eight columns stay in registers
// while s runs.
void combine_rows(const double* coef, std::size_t rs, std::size_t ss, const double* rows, double* out,
                  std::size_t n_out, std::size_t n_sum, std::size_t k) {
  std::size_t r = 0;
  for (; r + 4 <= n_out; r += 4) {
    double* o0 = out + r * k;
    double* o1 = o0 + k;
    double* o2 = o1 + k;
    double* o3 = o2 + k;
    std::size_t p = 0;
    for (; p + 8 <= k; p += 8) {
      __m256d u0 = _mm256_loadu_pd(o0 + p), v0 = _mm256_loadu_pd(o0 + p + 4);
      __m256d u1 = _mm256_loadu_pd(o1 + p), v1 = _mm256_loadu_pd(o1 + p + 4);
      __m256d u2 = _mm256_loadu_pd(o2 + p), v2 = _mm256_loadu_pd(o2 + p + 4);
      __m256d u3 = _mm256_loadu_pd(o3 + p), v3 = _mm256_loadu_pd(o3 + p + 4);
      for (std::size_t s = 0; s < n_sum; ++s) {
        const double* row = rows + s * k + p;
        const __m256d y0 = _mm256_loadu_pd(row), y1 = _mm256_loadu_pd(row + 4);
        const double* cf = coef + r * rs + s * ss;
        __m256d w = _mm256_broadcast_sd(cf);
        u0 = _mm256_fmadd_pd(w, y0, u0);
        v0 = _mm256_fmadd_pd(w, y1, v0);
        w = _mm256_broadcast_sd(cf + rs);
        u1 = _mm256_fmadd_pd(w, y0, u1);
        v1 = _mm256_fmadd_pd(w, y1, v1);
        w = _mm256_broadcast_sd(cf + 2 * rs);
        u2 = _mm256_fmadd_pd(w, y0, u2);
        v2 = _mm256_fmadd_pd(w, y1, v2);
        w = _mm256_broadcast_sd(cf + 3 * rs);
        u3 = _mm256_fmadd_pd(w, y0, u3);
        v3 = _mm256_fmadd_pd(w, y1, v3);
      }
      _mm256_storeu_pd(o0 + p, u0);
      _mm256_storeu_pd(o0 + p + 4, v0);
      _mm256_storeu_pd(o1 + p, u1);
      _mm256_storeu_pd(o1 + p + 4, v1);
      _mm256_storeu_pd(o2 + p, u2);
      _mm256_storeu_pd(o2 + p + 4, v2);
      _mm256_storeu_pd(o3 + p, u3);
      _mm256_storeu_pd(o3 + p + 4, v3);
    }
    for (; p < k; ++p) {
      double t0 = o0[p], t1 = o1[p], t2 = o2[p], t3 = o3[p];
      for (std::size_t s = 0; s < n_sum; ++s) {
        const double y = rows[s * k + p];
        const double* cf = coef + r * rs + s * ss;
        t0 = std::fma(cf[0], y, t0);
        t1 = std::fma(cf[rs], y, t1);
        t2 = std::fma(cf[2 * rs], y, t2);
        t3 = std::fma(cf[3 * rs], y, t3);
      }
      o0[p] = t0;
      o1[p] = t1;
      o2[p] = t2;
      o3[p] = t3;
    }
  }
  for (; r < n_out; ++r) {
    for (std::size_t s = 0; s < n_sum; ++s) axpy_avx2(coef[r * rs + s * ss], rows + s * k, out + r * k, k);
  }
}

void gemm_tn_acc_avx2(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t n, std::size_t k) {
  combine_rows(a, 1, n, b, c, n, m, k);
}

void gemm_nn_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t n, std::size_t k) {
  std::fill(c, c + m * k, 0.0);
  combine_rows(a, n, 1, b, c, m, n, k);
}

}  // namespace

const KernelTable* avx2_kernel_table() {
  static const KernelTable table{Isa::avx2,           dot_avx2,         axpy_avx2,
                                 squared_distance_avx2, gemm_nt_avx2, gemm_tn_acc_avx2,
                                 gemm_nn_avx2};
  return &table;
}

}  // namespace odrop::simd
