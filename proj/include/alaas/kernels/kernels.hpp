#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Data-parallel inner loops for the selection strategies, with one scalar
// reference lane and SIMD lanes picked at runtime. Every lane must produce
// bit-identical doubles: reductions use a fixed 4-accumulator scheme (partial
// sums by index mod 4, combined (s0+s1)+(s2+s3)) and contraction to FMA is
// disabled on these translation units, so vector width never changes results.
namespace alaas::kernels {

struct Kernels {
  const char* name;

  // max over v[0..n)
  double (*row_max)(const double* v, std::size_t n);
  // two largest values of v[0..n) (by multiset, so duplicates count twice);
  // writes top1 >= top2. n >= 2 required.
  void (*row_top2)(const double* v, std::size_t n, double* top1, double* top2);
  // sum_i (a[i]-b[i])^2 under the fixed accumulator scheme
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  // mind[r] = min(mind[r], squared_l2(center, points + r*dim)) for all rows
  void (*min_sqdist_update)(const double* center, const double* points,
                            std::size_t rows, std::size_t dim, double* mind);
  // y[i] += a * x[i], explicit mul then add
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

extern const Kernels kScalar;
#if defined(__x86_64__) || defined(__i386__)
extern const Kernels kAvx2;
#endif
#if defined(__aarch64__)
extern const Kernels kNeon;
#endif

// Lane picked at startup: best supported SIMD lane, or the one named by
// ALAAS_KERNELS (scalar | avx2 | neon | auto). An unsupported request falls
// back to scalar.
const Kernels& active();

// Lanes usable on this machine, scalar first.
std::vector<const Kernels*> available();

std::string lane_name();

}  // namespace alaas::kernels
