#pragma once

// Counter-based PRNG: Philox4x64-10 (Salmon et al., "Parallel Random Numbers:
// As Easy as 1, 2, 3", SC'11). Splittable by construction: every seeded
// operation keys its own stream with (user seed, stream id), so streams never
// interact and no jump-ahead bookkeeping is needed. The determinism contract
// is: same (seed, stream) => same sequence, across runs, on this
// implementation. Cross-language bit-identical randomness is a non-goal.

#include <array>
#include <cstdint>

namespace alaas::rng {

using Block = std::array<std::uint64_t, 4>;

// One Philox4x64-10 block: 256-bit counter + 128-bit key -> 4 output words.
Block philox4x64(const Block& counter, std::uint64_t key0, std::uint64_t key1);

// Stream ids, one per seeded operation. DBAL deliberately shares the KMeans
// stream: with uniform weights its clustering phase must reproduce
// select_kmeans exactly.
inline constexpr std::uint64_t kStreamRandomSelect = 0x52414e44;  // "RAND"
inline constexpr std::uint64_t kStreamKMeans = 0x4b4d4e53;        // "KMNS"
inline constexpr std::uint64_t kStreamMockModel = 0x4d4f434b;     // "MOCK"
inline constexpr std::uint64_t kStreamBench = 0x42454e43;         // "BENC"
inline constexpr std::uint64_t kStreamTest = 0x54455354;          // "TEST"

class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream) : key0_(seed), key1_(stream) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53 mantissa bits.
  double next_double();

  // Uniform in [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

 private:
  void refill();

  std::uint64_t key0_;
  std::uint64_t key1_;
  Block counter_{{0, 0, 0, 0}};
  Block buf_{};
  int pos_ = 4;  // 4 == buffer exhausted
};

}  // namespace alaas::rng
