#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "alaas/core/types.hpp"

namespace alaas::data {

struct DataConfig {
  std::string data_dir = "alaas-data";
  std::string cache_dir = "alaas-cache";
  std::uint64_t cache_max_bytes = 0;  // 0 = unbounded
  int fetch_concurrency = 8;
  int fetch_timeout_ms = 30000;
  std::optional<std::string> s3_gateway_template;  // {bucket}/{key} placeholders
};

struct FetchResult {
  core::SampleId id = 0;
  std::string bytes;
  std::string content_hash;  // of bytes, always set
  bool from_cache = false;
  double fetch_time = 0.0;  // seconds; disk read only on a hit
};

enum class FetchPolicy { cache, no_cache };

struct InferenceRow {
  std::vector<double> prob;
  std::vector<double> embed;
};

// Dataset lifecycle plus the two caches: content-addressed payloads on disk
// and (content_hash, model_version)-keyed inference rows. Metadata lives in
// memory and is flushed in batches (every 256 mutations, on flush(), and on
// destruction); every file write is temp+rename, so a crash can lose recent
// entries but never corrupts what is on disk.
class DataManager {
 public:
  explicit DataManager(DataConfig cfg);
  ~DataManager();

  DataManager(const DataManager&) = delete;
  DataManager& operator=(const DataManager&) = delete;

  core::DatasetManifest ingest(const std::vector<std::string>& uris,
                               const std::string& name, const std::string& owner);
  std::optional<core::DatasetManifest> get_dataset(const std::string& dataset_id) const;
  std::vector<std::string> dataset_ids() const;

  // Concurrent fetches of one URI coalesce into a single origin read; at most
  // fetch_concurrency origin reads run at once. A corrupted cache file is
  // evicted and refetched once. no_cache always reads from the origin and
  // leaves the payload cache untouched.
  FetchResult fetch(const std::string& dataset_id, core::SampleId id,
                    FetchPolicy policy = FetchPolicy::cache);

  std::optional<InferenceRow> get_cached_inference(const std::string& content_hash,
                                                   const std::string& model_version);
  void put_cached_inference(const std::string& content_hash,
                            const std::string& model_version, InferenceRow row);

  // Drops least-recently-used payloads (by last_access, then access_seq)
  // until the cache fits max_bytes; returns the bytes freed. Inference rows
  // survive payload eviction.
  std::uint64_t evict(std::uint64_t max_bytes);

  void flush();

  // Successful origin reads (any scheme); cache hits do not count.
  std::uint64_t remote_access_count() const { return remote_accesses_.load(); }
  void reset_remote_access_count() { remote_accesses_.store(0); }

  std::uint64_t payload_cache_bytes() const;

  const DataConfig& config() const { return cfg_; }

 private:
  struct PayloadEntry {
    std::uint64_t size = 0;
    std::int64_t last_access = 0;
    std::uint64_t access_seq = 0;
  };

  std::filesystem::path payload_path(const std::string& hash) const;
  std::filesystem::path manifest_path(const std::string& dataset_id) const;
  std::filesystem::path inference_path(const std::string& model_version) const;

  void load_state();
  void flush_locked();
  void note_mutation_locked();
  void touch_locked(const std::string& hash);
  std::string resolve_fetch_url(const std::string& uri) const;
  std::string origin_read(const std::string& uri);
  std::string coalesced_origin_read(const std::string& uri);
  std::uint64_t evict_locked(std::uint64_t max_bytes);

  DataConfig cfg_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, core::DatasetManifest> datasets_;
  std::unordered_map<std::string, PayloadEntry> payload_index_;
  std::uint64_t payload_bytes_ = 0;
  std::uint64_t access_counter_ = 0;
  std::unordered_map<std::string, std::unordered_map<std::string, InferenceRow>>
      infer_cache_;  // model_version -> hash -> row
  bool index_dirty_ = false;
  std::unordered_set<std::string> dirty_manifests_;
  std::unordered_set<std::string> dirty_models_;
  int mutations_since_flush_ = 0;

  std::mutex flight_mu_;
  std::unordered_map<std::string, std::shared_future<std::string>> inflight_;
  std::counting_semaphore<> fetch_slots_;
  std::atomic<std::uint64_t> remote_accesses_{0};
};

}  // namespace alaas::data
