#include "alaas/core/rng.hpp"

namespace alaas::rng {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Block philox4x64(const Block& counter, std::uint64_t key0, std::uint64_t key1) {
  Block x = counter;
  std::uint64_t k0 = key0, k1 = key1;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x[0], hi0, lo0);
    mulhilo(kMul1, x[2], hi1, lo1);
    x = Block{{hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0}};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return x;
}

void Philox::refill() {
  buf_ = philox4x64(counter_, key0_, key1_);
  // 256-bit little-endian increment.
  for (int i = 0; i < 4; ++i) {
    if (++counter_[i] != 0) break;
  }
  pos_ = 0;
}

std::uint64_t Philox::next_u64() {
  if (pos_ == 4) refill();
  return buf_[pos_++];
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Philox::next_below(std::uint64_t n) {
  // Reject the top partial range so every residue is equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t u;
  do {
    u = next_u64();
  } while (u > limit);
  return u % n;
}

}  // namespace alaas::rng
