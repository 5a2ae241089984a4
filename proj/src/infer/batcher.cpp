#include "alaas/infer/batcher.hpp"

namespace alaas::infer {

Batcher::Batcher(BatchPolicy policy, std::size_t capacity)
    : policy_(policy), capacity_(capacity ? capacity : 1) {
  if (policy_.max_batch < 1) policy_.max_batch = 1;
  if (policy_.max_wait_ms < 0) policy_.max_wait_ms = 0;
}

void Batcher::push(FeatureVector fv) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return buf_.size() < capacity_ || closed_; });
    if (closed_) return;  // cancelled runs drop late rows
    if (buf_.empty()) first_arrival_ = Clock::now();
    buf_.push_back(std::move(fv));
  }
  cv_.notify_all();
}

void Batcher::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<std::vector<FeatureVector>> Batcher::next() {
  std::unique_lock lock(mu_);
  for (;;) {
    if (buf_.size() >= policy_.max_batch) break;
    if (closed_) {
      if (buf_.empty()) return std::nullopt;
      break;  // final partial flush
    }
    if (buf_.empty()) {
      cv_.wait(lock);
      continue;
    }
    auto deadline = first_arrival_ + std::chrono::milliseconds(policy_.max_wait_ms);
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout &&
        !buf_.empty() && buf_.size() < policy_.max_batch && !closed_) {
      // Timed flush of a partial batch. A sibling consumer may have drained
      // the buffer while this one slept, hence the emptiness re-check.
      break;
    }
  }
  std::size_t take = std::min(buf_.size(), policy_.max_batch);
  std::vector<FeatureVector> batch;
  batch.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    batch.push_back(std::move(buf_.front()));
    buf_.pop_front();
  }
  if (!buf_.empty()) first_arrival_ = Clock::now();
  cv_.notify_all();  // wake producers blocked on capacity
  return batch;
}

}  // namespace alaas::infer
