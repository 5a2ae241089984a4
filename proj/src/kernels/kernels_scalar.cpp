#include "alaas/kernels/kernels.hpp"

// Reference lane. The mod-4 accumulator layout here is the contract every
// SIMD lane reproduces lane-for-lane.

namespace alaas::kernels {
namespace {

double row_max_scalar(const double* v, std::size_t n) {
  double m = v[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > m) m = v[i];
  }
  return m;
}

void row_top2_scalar(const double* v, std::size_t n, double* top1, double* top2) {
  double t1 = v[0] > v[1] ? v[0] : v[1];
  double t2 = v[0] > v[1] ? v[1] : v[0];
  for (std::size_t i = 2; i < n; ++i) {
    if (v[i] > t1) {
      t2 = t1;
      t1 = v[i];
    } else if (v[i] > t2) {
      t2 = v[i];
    }
  }
  *top1 = t1;
  *top2 = t2;
}

double squared_l2_scalar(const double* a, const double* b, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    s[i & 3] += d * d;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

void min_sqdist_update_scalar(const double* center, const double* points,
                              std::size_t rows, std::size_t dim, double* mind) {
  for (std::size_t r = 0; r < rows; ++r) {
    double d = squared_l2_scalar(center, points + r * dim, dim);
    if (d < mind[r]) mind[r] = d;
  }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += a * x[i];
  }
}

}  // namespace

const Kernels kScalar = {
    "scalar",          row_max_scalar, row_top2_scalar,
    squared_l2_scalar, min_sqdist_update_scalar, axpy_scalar,
};

}  // namespace alaas::kernels
