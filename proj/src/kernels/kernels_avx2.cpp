#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "alaas/kernels/kernels.hpp"

// Four vector lanes line up with the scalar lane's four accumulators, so
// grouping by vector width reproduces the scalar reduction exactly. max/min
// kernels only ever see non-negative inputs (probabilities, squared
// distances), which keeps +/-0.0 ordering out of play.

namespace alaas::kernels {
namespace {

double row_max_avx2(const double* v, std::size_t n) {
  if (n < 4) return kScalar.row_max(v, n);
  __m256d acc = _mm256_loadu_pd(v);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_max_pd(acc, _mm256_loadu_pd(v + i));
  }
  double t[4];
  _mm256_storeu_pd(t, acc);
  double m = t[0];
  if (t[1] > m) m = t[1];
  if (t[2] > m) m = t[2];
  if (t[3] > m) m = t[3];
  for (; i < n; ++i) {
    if (v[i] > m) m = v[i];
  }
  return m;
}

void row_top2_avx2(const double* v, std::size_t n, double* top1, double* top2) {
  if (n < 8) {
    kScalar.row_top2(v, n, top1, top2);
    return;
  }
  __m256d a = _mm256_loadu_pd(v);
  __m256d b = _mm256_loadu_pd(v + 4);
  __m256d t1 = _mm256_max_pd(a, b);
  __m256d t2 = _mm256_min_pd(a, b);
  std::size_t i = 8;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(v + i);
    __m256d lo = _mm256_min_pd(t1, x);
    t1 = _mm256_max_pd(t1, x);
    t2 = _mm256_max_pd(t2, lo);
  }
  // Per-lane top-2 pairs plus the tail always contain the global top-2.
  double cand[11];
  _mm256_storeu_pd(cand, t1);
  _mm256_storeu_pd(cand + 4, t2);
  std::size_t m = 8;
  for (; i < n; ++i) cand[m++] = v[i];
  kScalar.row_top2(cand, m, top1, top2);
}

double squared_l2_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s[4];
  _mm256_storeu_pd(s, acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s[i & 3] += d * d;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

void min_sqdist_update_avx2(const double* center, const double* points,
                            std::size_t rows, std::size_t dim, double* mind) {
  for (std::size_t r = 0; r < rows; ++r) {
    double d = squared_l2_avx2(center, points + r * dim, dim);
    if (d < mind[r]) mind[r] = d;
  }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) {
    y[i] += a * x[i];
  }
}

}  // namespace

const Kernels kAvx2 = {
    "avx2",          row_max_avx2, row_top2_avx2,
    squared_l2_avx2, min_sqdist_update_avx2, axpy_avx2,
};

}  // namespace alaas::kernels

#endif
