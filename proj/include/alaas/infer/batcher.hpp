#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "alaas/infer/engine.hpp"

namespace alaas::infer {

struct BatchPolicy {
  std::size_t max_batch = 16;
  int max_wait_ms = 10;  // counted from the first row of the pending batch
};

// Size-or-timeout dynamic batcher: producers push, consumers drain. A batch
// is emitted when it holds max_batch rows or when max_wait_ms has passed
// since its first row arrived; close() flushes the final partial batch.
// Batches are never empty and preserve arrival order. push blocks while
// `capacity` rows are pending, giving the pipeline backpressure.
class Batcher {
 public:
  explicit Batcher(BatchPolicy policy, std::size_t capacity = SIZE_MAX);

  void push(FeatureVector fv);
  void close();

  // Blocks for the next batch; nullopt once closed and drained.
  std::optional<std::vector<FeatureVector>> next();

 private:
  using Clock = std::chrono::steady_clock;

  BatchPolicy policy_;
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<FeatureVector> buf_;
  Clock::time_point first_arrival_{};
  bool closed_ = false;
};

}  // namespace alaas::infer
