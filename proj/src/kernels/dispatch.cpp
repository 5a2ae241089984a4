#include <cstdlib>
#include <string>

#include "alaas/kernels/kernels.hpp"

namespace alaas::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Kernels* pick() {
  const char* want = std::getenv("ALAAS_KERNELS");
  std::string req = want ? want : "auto";
  if (req == "scalar") return &kScalar;
#if defined(__x86_64__) || defined(__i386__)
  if (req == "avx2") return cpu_has_avx2() ? &kAvx2 : &kScalar;
  if (req == "auto") return cpu_has_avx2() ? &kAvx2 : &kScalar;
#endif
#if defined(__aarch64__)
  if (req == "neon" || req == "auto") return &kNeon;
#endif
  return &kScalar;
}

}  // namespace

const Kernels& active() {
  static const Kernels* chosen = pick();
  return *chosen;
}

std::vector<const Kernels*> available() {
  std::vector<const Kernels*> lanes{&kScalar};
#if defined(__x86_64__) || defined(__i386__)
  if (cpu_has_avx2()) lanes.push_back(&kAvx2);
#endif
#if defined(__aarch64__)
  lanes.push_back(&kNeon);
#endif
  return lanes;
}

std::string lane_name() { return active().name; }

}  // namespace alaas::kernels
