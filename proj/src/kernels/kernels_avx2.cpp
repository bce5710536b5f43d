#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "kernels_impl.hpp"

namespace cmlab::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, vx, _mm256_mul_pd(vb, vy)));
  }
  for (; i < n; ++i) out[i] = std::fma(a, x[i], b * y[i]);
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq_diff(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void project_rows(const double* rows, std::size_t n, std::size_t dim, const double* w, double* out) {
  std::size_t i = 0;
  if (dim == 1) {
    const __m256d vw = _mm256_set1_pd(w[0]);
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(vw, _mm256_loadu_pd(rows + i)));
  } else {
    // Four rows per iteration; column j of those rows is a strided gather.
    const auto stride = static_cast<std::int64_t>(dim);
    const __m256i idx = _mm256_set_epi64x(3 * stride, 2 * stride, stride, 0);
    for (; i + 4 <= n; i += 4) {
      const double* base = rows + i * dim;
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t j = 0; j < dim; ++j) {
        const __m256d col = _mm256_i64gather_pd(base + j, idx, 8);
        acc = _mm256_fmadd_pd(col, _mm256_set1_pd(w[j]), acc);
      }
      _mm256_storeu_pd(out + i, acc);
    }
  }
  for (; i < n; ++i) {
    const double* r = rows + i * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc = std::fma(r[j], w[j], acc);
    out[i] = acc;
  }
}

}  // namespace

const KernelTable table{&axpby, &dot, &sum_sq_diff, &project_rows};

}  // namespace cmlab::kernels::avx2
