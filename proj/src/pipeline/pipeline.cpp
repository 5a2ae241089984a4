#include "alaas/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "alaas/core/error.hpp"
#include "alaas/core/timeutil.hpp"
#include "alaas/strategy/strategies.hpp"

namespace alaas::pipeline {

using core::Error;
using core::ErrorCode;
using core::SampleId;

const char* pipeline_mode_name(PipelineMode m) {
  switch (m) {
    case PipelineMode::pipelined: return "pipelined";
    case PipelineMode::sequential_whole: return "sequential_whole";
    case PipelineMode::sequential_rounds: return "sequential_rounds";
  }
  return "?";
}

std::optional<PipelineMode> pipeline_mode_from_name(const std::string& name) {
  if (name == "pipelined") return PipelineMode::pipelined;
  if (name == "sequential_whole") return PipelineMode::sequential_whole;
  if (name == "sequential_rounds") return PipelineMode::sequential_rounds;
  return std::nullopt;
}

std::vector<double> byte_histogram(const std::string& bytes) {
  if (bytes.empty()) throw Error(ErrorCode::EmptyPayload, "empty payload");
  std::vector<double> hist(256, 0.0);
  for (unsigned char b : bytes) hist[b] += 1.0;
  const double inv = 1.0 / static_cast<double>(bytes.size());
  for (double& v : hist) v *= inv;
  return hist;
}

namespace {

std::mutex& transform_mu() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, TransformFn>& transform_map() {
  static std::map<std::string, TransformFn> m{{"byte_histogram", byte_histogram}};
  return m;
}

}  // namespace

void register_transform(const std::string& name, TransformFn fn) {
  std::lock_guard lock(transform_mu());
  transform_map()[name] = std::move(fn);
}

TransformFn find_transform(const std::string& name) {
  std::lock_guard lock(transform_mu());
  auto& m = transform_map();
  auto it = m.find(name);
  if (it == m.end()) {
    throw Error(ErrorCode::UnknownKey, "unknown preprocess transform: " + name);
  }
  return it->second;
}

namespace {

void sleep_ms(double ms) {
  if (ms > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
  }
}

// Seconds since construction, shared by every stage of one run.
class RunClock {
 public:
  RunClock() : t0_(std::chrono::steady_clock::now()) {}
  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

class EventLog {
 public:
  void add(const char* stage, SampleId id, double start, double end) {
    std::lock_guard lock(mu_);
    events_.push_back({stage, id, start, end});
  }

  // A batch-granular interval split evenly over its items, so per-stage busy
  // time stays the true occupied span and `items` stays the item count.
  void add_sliced(const char* stage, const std::vector<SampleId>& ids, double start,
                  double end) {
    if (ids.empty()) return;
    std::lock_guard lock(mu_);
    const double step = (end - start) / static_cast<double>(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const double s = start + step * static_cast<double>(k);
      const double e = (k + 1 == ids.size()) ? end : s + step;
      events_.push_back({stage, ids[k], s, e});
    }
  }

  std::vector<StageEvent> take() {
    std::lock_guard lock(mu_);
    return std::move(events_);
  }

 private:
  std::mutex mu_;
  std::vector<StageEvent> events_;
};

// Scored rows keyed by sample id; order of arrival is scheduling noise, so
// consumers must sort before use.
class RowSink {
 public:
  void add(SampleId id, data::InferenceRow row) {
    std::lock_guard lock(mu_);
    rows_.emplace_back(id, std::move(row));
  }

  void skip(SampleId id) {
    std::lock_guard lock(mu_);
    skipped_.push_back(id);
  }

  std::vector<std::pair<SampleId, data::InferenceRow>> take_rows() {
    std::lock_guard lock(mu_);
    return std::move(rows_);
  }

  std::vector<SampleId> take_skipped() {
    std::lock_guard lock(mu_);
    std::sort(skipped_.begin(), skipped_.end());
    return std::move(skipped_);
  }

 private:
  std::mutex mu_;
  std::vector<std::pair<SampleId, data::InferenceRow>> rows_;
  std::vector<SampleId> skipped_;
};

// First failure wins; everything after it is shutdown noise.
class ErrorSlot {
 public:
  void set(std::exception_ptr e) {
    std::lock_guard lock(mu_);
    if (!err_) err_ = std::move(e);
  }

  bool failed() const {
    std::lock_guard lock(mu_);
    return err_ != nullptr;
  }

  void rethrow_if_set() const {
    std::lock_guard lock(mu_);
    if (err_) std::rethrow_exception(err_);
  }

 private:
  mutable std::mutex mu_;
  std::exception_ptr err_;
};

// id -> content hash, written by fetch, read by infer for cache fills.
class HashMap {
 public:
  void put(SampleId id, std::string hash) {
    std::lock_guard lock(mu_);
    map_[id] = std::move(hash);
  }

  std::string get(SampleId id) const {
    std::lock_guard lock(mu_);
    auto it = map_.find(id);
    return it == map_.end() ? std::string() : it->second;
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<SampleId, std::string> map_;
};

struct Item {
  SampleId id = 0;
  std::string bytes;
};

struct RoundContext {
  std::vector<SampleId> process_ids;  // candidates first, then labeled if needed
  infer::BatchPolicy batch;
  std::size_t queue_capacity = 0;
  data::FetchPolicy fetch_policy = data::FetchPolicy::cache;
  bool use_inference_cache = true;
};

// Fetch one id, honoring the failure policy. Returns false when the item was
// skipped or the run is aborting.
bool fetch_item(data::DataManager& dm, const core::ALQuery& query,
                const PipelineSpec& spec, const RoundContext& ctx, SampleId id,
                const RunClock& clk, EventLog& log, RowSink& sink, ErrorSlot& errs,
                std::string& bytes, std::string& hash) {
  const double t0 = clk.now();
  try {
    auto fr = dm.fetch(query.dataset_id, id, ctx.fetch_policy);
    bytes = std::move(fr.bytes);
    hash = std::move(fr.content_hash);
  } catch (const Error& e) {
    if (spec.on_fetch_failure == FailurePolicy::skip &&
        e.code() == ErrorCode::FetchFailed) {
      sink.skip(id);
      return false;
    }
    errs.set(std::current_exception());
    return false;
  } catch (...) {
    errs.set(std::current_exception());
    return false;
  }
  sleep_ms(spec.inject_fetch_ms);
  log.add("fetch", id, t0, clk.now());
  return true;
}

void infer_one_batch(data::DataManager& dm, const infer::Engine& engine,
                     const PipelineSpec& spec, const RoundContext& ctx,
                     const std::vector<infer::FeatureVector>& batch,
                     const HashMap& hashes, const RunClock& clk, EventLog& log,
                     RowSink& sink) {
  const double t0 = clk.now();
  sleep_ms(spec.inject_infer_ms_per_item * static_cast<double>(batch.size()));
  auto [probs, embeds] = engine.infer_batch(batch);
  std::vector<SampleId> ids(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) ids[r] = batch[r].id;
  log.add_sliced("infer", ids, t0, clk.now());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const double* prow = probs.row(r);
    const double* erow = embeds.row(r);
    data::InferenceRow row{std::vector<double>(prow, prow + probs.classes),
                           std::vector<double>(erow, erow + embeds.dim)};
    if (ctx.use_inference_cache) {
      dm.put_cached_inference(hashes.get(ids[r]), engine.spec().model_version, row);
    }
    sink.add(ids[r], std::move(row));
  }
}

void run_pipelined(data::DataManager& dm, const core::ALQuery& query,
                   const PipelineSpec& spec, const infer::Engine& engine,
                   const RoundContext& ctx, CancelToken& ct, const RunClock& clk,
                   EventLog& log, RowSink& sink, ErrorSlot& errs) {
  TransformFn transform = find_transform(spec.preprocess_transform);
  BoundedQueue<Item> fetched(ctx.queue_capacity);
  infer::Batcher batcher(ctx.batch, ctx.queue_capacity);
  HashMap hashes;

  std::atomic<std::size_t> next{0};
  std::atomic<int> fetchers_alive{spec.fetch_workers};

  // Idempotent teardown: wakes every blocked producer and consumer. Batches
  // still buffered are dropped, which is fine because abort and cancel both
  // discard the round's result.
  auto abort_all = [&] {
    fetched.cancel();
    batcher.close();
  };

  auto fetch_worker = [&] {
    while (!ct.cancelled() && !errs.failed()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ctx.process_ids.size()) break;
      const SampleId id = ctx.process_ids[i];
      std::string bytes, hash;
      if (!fetch_item(dm, query, spec, ctx, id, clk, log, sink, errs, bytes, hash)) {
        if (errs.failed()) {
          abort_all();
          break;
        }
        continue;  // skipped
      }
      if (ctx.use_inference_cache) {
        if (auto row = dm.get_cached_inference(hash, engine.spec().model_version)) {
          sink.add(id, std::move(*row));  // bypass preprocess + infer
          continue;
        }
      }
      hashes.put(id, std::move(hash));
      if (!fetched.push(Item{id, std::move(bytes)})) break;
    }
    if (fetchers_alive.fetch_sub(1) == 1) fetched.close();
  };

  auto preprocess_worker = [&] {
    while (auto item = fetched.pop()) {
      if (ct.cancelled() || errs.failed()) {
        abort_all();
        break;
      }
      const double t0 = clk.now();
      infer::FeatureVector fv;
      fv.id = item->id;
      try {
        fv.values = transform(item->bytes);
      } catch (...) {
        errs.set(std::current_exception());
        abort_all();
        break;
      }
      sleep_ms(spec.inject_preprocess_ms);
      log.add("preprocess", item->id, t0, clk.now());
      batcher.push(std::move(fv));
    }
    batcher.close();
  };

  auto infer_worker = [&] {
    for (;;) {
      if (ct.cancelled() || errs.failed()) {
        abort_all();  // producers may be blocked on capacity
        break;
      }
      auto batch = batcher.next();
      if (!batch) break;
      try {
        infer_one_batch(dm, engine, spec, ctx, *batch, hashes, clk, log, sink);
      } catch (...) {
        errs.set(std::current_exception());
        abort_all();
        break;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(spec.fetch_workers + spec.infer_workers) + 1);
  for (int i = 0; i < spec.fetch_workers; ++i) threads.emplace_back(fetch_worker);
  threads.emplace_back(preprocess_worker);
  for (int i = 0; i < spec.infer_workers; ++i) threads.emplace_back(infer_worker);
  for (auto& t : threads) t.join();
}

// Same worker counts as the pipelined path, but with a hard barrier between
// stages, so a comparison measures overlap and nothing else.
void run_sequential(data::DataManager& dm, const core::ALQuery& query,
                    const PipelineSpec& spec, const infer::Engine& engine,
                    const RoundContext& ctx, CancelToken& ct, const RunClock& clk,
                    EventLog& log, RowSink& sink, ErrorSlot& errs) {
  TransformFn transform = find_transform(spec.preprocess_transform);
  HashMap hashes;

  // Phase 1: fetch everything.
  std::mutex items_mu;
  std::vector<Item> items;
  items.reserve(ctx.process_ids.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (!ct.cancelled() && !errs.failed()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= ctx.process_ids.size()) break;
        const SampleId id = ctx.process_ids[i];
        std::string bytes, hash;
        if (!fetch_item(dm, query, spec, ctx, id, clk, log, sink, errs, bytes, hash))
          continue;
        if (ctx.use_inference_cache) {
          if (auto row = dm.get_cached_inference(hash, engine.spec().model_version)) {
            sink.add(id, std::move(*row));
            continue;
          }
        }
        hashes.put(id, std::move(hash));
        std::lock_guard lock(items_mu);
        items.push_back(Item{id, std::move(bytes)});
      }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < spec.fetch_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  errs.rethrow_if_set();
  if (ct.cancelled()) return;
  // Worker interleaving is not a semantic input; restore id order.
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.id < b.id; });

  // Phase 2: preprocess everything, one worker.
  std::vector<infer::FeatureVector> feats;
  feats.reserve(items.size());
  for (Item& item : items) {
    if (ct.cancelled()) return;
    const double t0 = clk.now();
    infer::FeatureVector fv;
    fv.id = item.id;
    fv.values = transform(item.bytes);  // throws straight to the caller
    sleep_ms(spec.inject_preprocess_ms);
    log.add("preprocess", item.id, t0, clk.now());
    feats.push_back(std::move(fv));
    item.bytes.clear();
  }

  // Phase 3: infer in fixed batches, infer_workers wide.
  {
    std::atomic<std::size_t> next_batch{0};
    const std::size_t bs = ctx.batch.max_batch;
    const std::size_t batches = feats.empty() ? 0 : (feats.size() + bs - 1) / bs;
    auto worker = [&] {
      while (!ct.cancelled() && !errs.failed()) {
        const std::size_t b = next_batch.fetch_add(1);
        if (b >= batches) break;
        const std::size_t lo = b * bs;
        const std::size_t hi = std::min(feats.size(), lo + bs);
        std::vector<infer::FeatureVector> batch(feats.begin() + lo,
                                                feats.begin() + hi);
        try {
          infer_one_batch(dm, engine, spec, ctx, batch, hashes, clk, log, sink);
        } catch (...) {
          errs.set(std::current_exception());
          break;
        }
      }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < spec.infer_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
}

}  // namespace

RunResult run_round(data::DataManager& dm, const core::ALQuery& query,
                    const PipelineSpec& spec, const infer::Engine& engine,
                    CancelToken* cancel) {
  auto manifest = dm.get_dataset(query.dataset_id);
  if (!manifest) {
    throw Error(ErrorCode::UnknownDataset, "unknown dataset: " + query.dataset_id);
  }
  if (query.budget == 0) {
    throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  }
  if (query.batch_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive");
  }
  if (query.batch_size > engine.spec().batch_limit) {
    throw Error(ErrorCode::BatchTooLarge,
                "batch_size exceeds backend batch limit");
  }
  const std::size_t n = manifest->samples.size();
  std::unordered_set<SampleId> labeled_set;
  for (SampleId id : query.labeled_ids) {
    if (id >= n) {
      throw Error(ErrorCode::InvalidArgument,
                  "labeled id out of range: " + std::to_string(id));
    }
    if (!labeled_set.insert(id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate labeled id: " + std::to_string(id));
    }
  }
  const std::size_t pool = n - labeled_set.size();
  if (query.budget > pool) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(query.budget) + " exceeds pool of " +
                    std::to_string(pool));
  }

  RoundContext ctx;
  ctx.batch = spec.batch;
  ctx.batch.max_batch = query.batch_size;
  ctx.queue_capacity =
      spec.queue_capacity ? spec.queue_capacity : 4 * ctx.batch.max_batch;
  ctx.fetch_policy = spec.mode == PipelineMode::sequential_rounds
                         ? data::FetchPolicy::no_cache
                         : data::FetchPolicy::cache;
  ctx.use_inference_cache = spec.use_inference_cache;

  // Labeled rows only travel the pipeline when the strategy measures
  // distances against them.
  const bool needs_labeled = query.strategy.name == core::Strategy::KCG ||
                             query.strategy.name == core::Strategy::CoreSet;
  ctx.process_ids.reserve(needs_labeled ? n : pool);
  for (SampleId id = 0; id < n; ++id) {
    if (!labeled_set.count(id)) ctx.process_ids.push_back(id);
  }
  if (needs_labeled) {
    for (SampleId id : query.labeled_ids) ctx.process_ids.push_back(id);
  }

  CancelToken local_token;
  CancelToken& ct = cancel ? *cancel : local_token;
  RunClock clk;
  EventLog log;
  RowSink sink;
  ErrorSlot errs;

  if (spec.mode == PipelineMode::pipelined) {
    run_pipelined(dm, query, spec, engine, ctx, ct, clk, log, sink, errs);
  } else {
    run_sequential(dm, query, spec, engine, ctx, ct, clk, log, sink, errs);
  }
  errs.rethrow_if_set();
  if (ct.cancelled()) {
    throw Error(ErrorCode::Cancelled, "query cancelled");
  }

  auto rows = sink.take_rows();
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t classes = engine.spec().classes;
  const std::size_t dim = engine.spec().embed_dim;
  core::ProbabilityMatrix probs;
  probs.classes = classes;
  core::EmbeddingMatrix embeds;
  embeds.dim = dim;
  core::EmbeddingMatrix labeled_embeds;
  labeled_embeds.dim = dim;
  for (auto& [id, row] : rows) {
    if (labeled_set.count(id)) {
      labeled_embeds.rows += 1;
      labeled_embeds.row_ids.push_back(id);
      labeled_embeds.data.insert(labeled_embeds.data.end(), row.embed.begin(),
                                 row.embed.end());
      continue;
    }
    probs.rows += 1;
    probs.row_ids.push_back(id);
    probs.data.insert(probs.data.end(), row.prob.begin(), row.prob.end());
    embeds.rows += 1;
    embeds.row_ids.push_back(id);
    embeds.data.insert(embeds.data.end(), row.embed.begin(), row.embed.end());
  }

  strategy::StrategyInput input;
  input.probs = &probs;
  input.embeds = &embeds;
  input.labeled_embeds = labeled_embeds.rows ? &labeled_embeds : nullptr;
  input.budget = query.budget;
  input.seed = query.seed;

  const double sel_start = clk.now();
  strategy::Selection sel = strategy::run_strategy(query.strategy, input);
  log.add_sliced("select", sel.ids, sel_start, clk.now());

  const double wall = clk.now();
  RunResult result;
  result.events = log.take();
  std::map<std::string, int> workers{{"fetch", spec.fetch_workers},
                                     {"preprocess", 1},
                                     {"infer", spec.infer_workers},
                                     {"select", 1}};
  core::ALReport& report = result.report;
  report.dataset_id = query.dataset_id;
  report.strategy = query.strategy;
  report.budget = query.budget;
  report.selected.reserve(sel.ids.size());
  for (std::size_t k = 0; k < sel.ids.size(); ++k) {
    const SampleId id = sel.ids[k];
    report.selected.push_back({id, manifest->samples[id].uri, sel.scores[k]});
  }
  report.timing = compute_metrics(result.events, wall, workers, sink.take_skipped());
  report.completed_at = core::now_unix_seconds();
  return result;
}

RunResult run_baseline_dataflow(PipelineMode mode, data::DataManager& dm,
                                const core::ALQuery& query, PipelineSpec spec,
                                const infer::Engine& engine, CancelToken* cancel) {
  if (mode == PipelineMode::pipelined) {
    throw Error(ErrorCode::InvalidArgument,
                "baseline dataflow must be a sequential mode");
  }
  spec.mode = mode;
  return run_round(dm, query, spec, engine, cancel);
}

core::StageMetrics compute_metrics(const std::vector<StageEvent>& events,
                                   double wall_clock,
                                   const std::map<std::string, int>& stage_workers,
                                   std::vector<SampleId> skipped_ids) {
  core::StageMetrics m;
  m.wall_clock = wall_clock;
  m.skipped_ids = std::move(skipped_ids);
  for (const char* stage : {"fetch", "preprocess", "infer", "select"}) {
    m.stages.emplace(stage, core::StageStat{});
  }
  for (const StageEvent& e : events) {
    core::StageStat& st = m.stages[e.stage];
    st.items += 1;
    st.busy_time += e.end - e.start;
  }
  std::uint64_t total_items = 0;
  for (auto& [stage, st] : m.stages) {
    auto it = stage_workers.find(stage);
    const int workers = it == stage_workers.end() ? 1 : std::max(1, it->second);
    st.busy_time /= static_cast<double>(workers);
    st.idle_time = std::max(0.0, wall_clock - st.busy_time);
    total_items = std::max(total_items, st.items);
  }
  m.throughput =
      wall_clock > 0.0 ? static_cast<double>(total_items) / wall_clock : 0.0;
  return m;
}

void export_trace(const std::vector<StageEvent>& events, const std::string& path) {
  std::vector<StageEvent> ordered = events;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const StageEvent& a, const StageEvent& b) {
                     return a.start < b.start;
                   });
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::CacheWriteFailed, "cannot open trace file: " + path);
  }
  for (const StageEvent& e : ordered) {
    core::json line{
        {"stage", e.stage}, {"id", e.id}, {"start", e.start}, {"end", e.end}};
    out << line.dump() << '\n';
  }
}

}  // namespace alaas::pipeline
