#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "alaas/core/types.hpp"
#include "alaas/data/manager.hpp"
#include "alaas/infer/batcher.hpp"
#include "alaas/infer/engine.hpp"

namespace alaas::pipeline {

enum class PipelineMode { pipelined, sequential_whole, sequential_rounds };

const char* pipeline_mode_name(PipelineMode m);
std::optional<PipelineMode> pipeline_mode_from_name(const std::string& name);

enum class FailurePolicy { abort, skip };

// Stage layout is fixed: fetch (fetch_workers), preprocess (1 worker), infer
// (infer_workers), select (1, runs after all rows are scored). The inject_*
// fields add synthetic latency inside the stages; benchmarks and the speedup
// tests are built on them because real network variance is not controllable
// at desk scale.
struct PipelineSpec {
  PipelineMode mode = PipelineMode::pipelined;
  std::size_t queue_capacity = 0;  // 0 = auto, 4x the effective batch size
  int fetch_workers = 4;
  int infer_workers = 2;
  infer::BatchPolicy batch;
  FailurePolicy on_fetch_failure = FailurePolicy::abort;
  std::string preprocess_transform = "byte_histogram";
  bool use_inference_cache = true;
  double inject_fetch_ms = 0.0;
  double inject_preprocess_ms = 0.0;
  double inject_infer_ms_per_item = 0.0;
};

struct StageEvent {
  std::string stage;  // fetch | preprocess | infer | select
  core::SampleId id;
  double start = 0.0;  // seconds since run start, monotonic clock
  double end = 0.0;
};

class CancelToken {
 public:
  void cancel() { flag_.store(true); }
  bool cancelled() const { return flag_.load(); }

 private:
  std::atomic<bool> flag_{false};
};

// Blocking MPMC queue with a hard capacity; push blocks while full. close()
// lets consumers drain what is left; cancel() discards it.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    cv_push_.wait(lock, [&] { return buf_.size() < capacity_ || closed_; });
    if (closed_) return false;
    buf_.push_back(std::move(item));
    cv_pop_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    cv_pop_.wait(lock, [&] { return !buf_.empty() || closed_; });
    if (buf_.empty()) return std::nullopt;
    T item = std::move(buf_.front());
    buf_.pop_front();
    cv_push_.notify_one();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_push_.notify_all();
    cv_pop_.notify_all();
  }

  void cancel() {
    {
      std::lock_guard lock(mu_);
      buf_.clear();
      closed_ = true;
    }
    cv_push_.notify_all();
    cv_pop_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_push_;
  std::condition_variable cv_pop_;
  std::deque<T> buf_;
  bool closed_ = false;
};

// Byte payload -> feature vector. The default "byte_histogram" transform is a
// 256-bin byte histogram normalized to unit sum; custom transforms register
// under a name. Throws EmptyPayload on empty input.
using TransformFn = std::function<std::vector<double>(const std::string&)>;
std::vector<double> byte_histogram(const std::string& bytes);
void register_transform(const std::string& name, TransformFn fn);
TransformFn find_transform(const std::string& name);  // UnknownKey if absent

struct RunResult {
  core::ALReport report;
  std::vector<StageEvent> events;
};

// One AL round over the dataset named by the query: fetch, preprocess, infer
// and select, scheduled per spec.mode. Selection results are independent of
// scheduling: rows are re-sequenced by SampleId before the strategy runs.
// Cancellation is cooperative and observed at batch boundaries.
RunResult run_round(data::DataManager& dm, const core::ALQuery& query,
                    const PipelineSpec& spec, const infer::Engine& engine,
                    CancelToken* cancel = nullptr);

// The conventional dataflows used as benchmark baselines; mode must not be
// pipelined. sequential_whole downloads everything, then processes, then
// infers; sequential_rounds additionally re-downloads (no_cache) every round.
RunResult run_baseline_dataflow(PipelineMode mode, data::DataManager& dm,
                                const core::ALQuery& query, PipelineSpec spec,
                                const infer::Engine& engine,
                                CancelToken* cancel = nullptr);

// busy_time = sum of event durations / workers for that stage; idle_time =
// wall_clock - busy_time floored at 0; throughput = items / wall_clock where
// items is the largest per-stage event count.
core::StageMetrics compute_metrics(const std::vector<StageEvent>& events,
                                   double wall_clock,
                                   const std::map<std::string, int>& stage_workers,
                                   std::vector<core::SampleId> skipped_ids = {});

// One StageEvent object per line ({"stage","id","start","end"}).
void export_trace(const std::vector<StageEvent>& events, const std::string& path);

}  // namespace alaas::pipeline
