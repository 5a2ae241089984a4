#if defined(__aarch64__)

#include <arm_neon.h>

#include "alaas/kernels/kernels.hpp"

// Two 128-bit accumulators stand in for the scalar lane's four: acc01 holds
// indices 0,1 mod 4 and acc23 holds 2,3 mod 4, combined in the same order.

namespace alaas::kernels {
namespace {

double row_max_neon(const double* v, std::size_t n) {
  if (n < 4) return kScalar.row_max(v, n);
  float64x2_t m01 = vld1q_f64(v);
  float64x2_t m23 = vld1q_f64(v + 2);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    m01 = vmaxq_f64(m01, vld1q_f64(v + i));
    m23 = vmaxq_f64(m23, vld1q_f64(v + i + 2));
  }
  float64x2_t mm = vmaxq_f64(m01, m23);
  double m = vgetq_lane_f64(mm, 0);
  double m1 = vgetq_lane_f64(mm, 1);
  if (m1 > m) m = m1;
  for (; i < n; ++i) {
    if (v[i] > m) m = v[i];
  }
  return m;
}

void row_top2_neon(const double* v, std::size_t n, double* top1, double* top2) {
  if (n < 8) {
    kScalar.row_top2(v, n, top1, top2);
    return;
  }
  float64x2_t a0 = vld1q_f64(v);
  float64x2_t a1 = vld1q_f64(v + 2);
  float64x2_t b0 = vld1q_f64(v + 4);
  float64x2_t b1 = vld1q_f64(v + 6);
  float64x2_t t1a = vmaxq_f64(a0, b0), t2a = vminq_f64(a0, b0);
  float64x2_t t1b = vmaxq_f64(a1, b1), t2b = vminq_f64(a1, b1);
  std::size_t i = 8;
  for (; i + 4 <= n; i += 4) {
    float64x2_t x0 = vld1q_f64(v + i);
    float64x2_t x1 = vld1q_f64(v + i + 2);
    float64x2_t lo0 = vminq_f64(t1a, x0);
    float64x2_t lo1 = vminq_f64(t1b, x1);
    t1a = vmaxq_f64(t1a, x0);
    t1b = vmaxq_f64(t1b, x1);
    t2a = vmaxq_f64(t2a, lo0);
    t2b = vmaxq_f64(t2b, lo1);
  }
  double cand[11];
  vst1q_f64(cand, t1a);
  vst1q_f64(cand + 2, t1b);
  vst1q_f64(cand + 4, t2a);
  vst1q_f64(cand + 6, t2b);
  std::size_t m = 8;
  for (; i < n; ++i) cand[m++] = v[i];
  kScalar.row_top2(cand, m, top1, top2);
}

double squared_l2_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc01 = vaddq_f64(acc01, vmulq_f64(d0, d0));
    acc23 = vaddq_f64(acc23, vmulq_f64(d1, d1));
  }
  double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                 vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s[i & 3] += d * d;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

void min_sqdist_update_neon(const double* center, const double* points,
                            std::size_t rows, std::size_t dim, double* mind) {
  for (std::size_t r = 0; r < rows; ++r) {
    double d = squared_l2_neon(center, points + r * dim, dim);
    if (d < mind[r]) mind[r] = d;
  }
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) {
    y[i] += a * x[i];
  }
}

}  // namespace

const Kernels kNeon = {
    "neon",          row_max_neon, row_top2_neon,
    squared_l2_neon, min_sqdist_update_neon, axpy_neon,
};

}  // namespace alaas::kernels

#endif
