#include "alaas/data/manager.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/timeutil.hpp"
#include "alaas/core/uri.hpp"
#include "alaas/data/fetcher.hpp"
#include "alaas/data/sha256.hpp"

namespace alaas::data {

using core::Error;
using core::ErrorCode;

namespace {

constexpr int kFlushEvery = 256;

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out.empty() ? "_" : out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

DataManager::DataManager(DataConfig cfg)
    : cfg_(std::move(cfg)),
      fetch_slots_(std::max(1, cfg_.fetch_concurrency)) {
  std::filesystem::create_directories(
      std::filesystem::path(cfg_.data_dir) / "datasets");
  std::filesystem::create_directories(
      std::filesystem::path(cfg_.cache_dir) / "payloads");
  std::filesystem::create_directories(
      std::filesystem::path(cfg_.cache_dir) / "inference");
  load_state();
}

DataManager::~DataManager() {
  try {
    flush();
  } catch (...) {
    // Destruction must not throw; unsaved metadata is re-derivable.
  }
}

std::filesystem::path DataManager::payload_path(const std::string& hash) const {
  return std::filesystem::path(cfg_.cache_dir) / "payloads" / hash;
}

std::filesystem::path DataManager::manifest_path(const std::string& dataset_id) const {
  return std::filesystem::path(cfg_.data_dir) / "datasets" / (dataset_id + ".json");
}

std::filesystem::path DataManager::inference_path(
    const std::string& model_version) const {
  return std::filesystem::path(cfg_.cache_dir) / "inference" /
         (sanitize_filename(model_version) + ".json");
}

void DataManager::load_state() {
  namespace fs = std::filesystem;

  for (const auto& entry :
       fs::directory_iterator(fs::path(cfg_.data_dir) / "datasets")) {
    if (entry.path().extension() != ".json") continue;
    auto text = core::read_file(entry.path());
    if (!text) continue;
    try {
      auto manifest = core::json::parse(*text).get<core::DatasetManifest>();
      datasets_.emplace(manifest.dataset_id, std::move(manifest));
    } catch (const std::exception&) {
      // Unreadable manifests are skipped, never deleted.
    }
  }

  // The index is advisory: entries without a payload file are dropped,
  // payload files without an entry are adopted. Either direction can happen
  // after a crash between a payload rename and an index flush.
  if (auto text = core::read_file(fs::path(cfg_.cache_dir) / "index.json")) {
    try {
      core::json j = core::json::parse(*text);
      for (auto& [hash, e] : j.at("entries").items()) {
        if (!fs::exists(payload_path(hash))) continue;
        PayloadEntry pe;
        pe.size = e.value("size", std::uint64_t{0});
        pe.last_access = e.value("last_access", std::int64_t{0});
        pe.access_seq = e.value("access_seq", std::uint64_t{0});
        access_counter_ = std::max(access_counter_, pe.access_seq);
        payload_bytes_ += pe.size;
        payload_index_.emplace(hash, pe);
      }
    } catch (const std::exception&) {
      payload_index_.clear();
      payload_bytes_ = 0;
    }
  }
  for (const auto& entry :
       fs::directory_iterator(fs::path(cfg_.cache_dir) / "payloads")) {
    std::string hash = entry.path().filename().string();
    if (payload_index_.count(hash) || !entry.is_regular_file()) continue;
    PayloadEntry pe;
    pe.size = entry.file_size();
    pe.last_access = core::now_unix_seconds();
    pe.access_seq = ++access_counter_;
    payload_bytes_ += pe.size;
    payload_index_.emplace(hash, pe);
    index_dirty_ = true;
  }

  for (const auto& entry :
       fs::directory_iterator(fs::path(cfg_.cache_dir) / "inference")) {
    if (entry.path().extension() != ".json") continue;
    auto text = core::read_file(entry.path());
    if (!text) continue;
    try {
      core::json j = core::json::parse(*text);
      std::string version = j.at("model_version").get<std::string>();
      auto& rows = infer_cache_[version];
      for (auto& [hash, r] : j.at("rows").items()) {
        InferenceRow row;
        r.at("prob").get_to(row.prob);
        r.at("embed").get_to(row.embed);
        rows.emplace(hash, std::move(row));
      }
    } catch (const std::exception&) {
      // Skip unreadable cache shards; they will be rebuilt.
    }
  }
}

void DataManager::note_mutation_locked() {
  if (++mutations_since_flush_ >= kFlushEvery) {
    flush_locked();
  }
}

void DataManager::touch_locked(const std::string& hash) {
  auto it = payload_index_.find(hash);
  if (it == payload_index_.end()) return;
  it->second.last_access = core::now_unix_seconds();
  it->second.access_seq = ++access_counter_;
  index_dirty_ = true;
}

void DataManager::flush_locked() {
  mutations_since_flush_ = 0;
  if (index_dirty_) {
    core::json entries = core::json::object();
    for (const auto& [hash, e] : payload_index_) {
      entries[hash] = {{"size", e.size},
                       {"last_access", e.last_access},
                       {"access_seq", e.access_seq}};
    }
    core::write_file_atomic(std::filesystem::path(cfg_.cache_dir) / "index.json",
                            core::json{{"entries", entries}}.dump(2));
    index_dirty_ = false;
  }
  for (const auto& id : dirty_manifests_) {
    auto it = datasets_.find(id);
    if (it == datasets_.end()) continue;
    core::write_file_atomic(manifest_path(id), core::json(it->second).dump(2));
  }
  dirty_manifests_.clear();
  for (const auto& version : dirty_models_) {
    auto it = infer_cache_.find(version);
    if (it == infer_cache_.end()) continue;
    core::json rows = core::json::object();
    for (const auto& [hash, row] : it->second) {
      rows[hash] = {{"prob", row.prob}, {"embed", row.embed}};
    }
    core::write_file_atomic(
        inference_path(version),
        core::json{{"model_version", version}, {"rows", rows}}.dump());
  }
  dirty_models_.clear();
}

void DataManager::flush() {
  std::lock_guard lock(mu_);
  flush_locked();
}

core::DatasetManifest DataManager::ingest(const std::vector<std::string>& uris,
                                          const std::string& name,
                                          const std::string& owner) {
  if (uris.empty()) {
    throw Error(ErrorCode::EmptyDataset, "a dataset needs at least one uri");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < uris.size(); ++i) {
    core::parse_uri(uris[i]);  // UnsupportedScheme / InvalidArgument
    if (!seen.insert(uris[i]).second) {
      throw Error(ErrorCode::DuplicateUri,
                  "duplicate uri at position " + std::to_string(i) + ": " + uris[i]);
    }
  }
  core::DatasetManifest manifest;
  manifest.dataset_id = core::random_hex_id();
  manifest.name = name;
  manifest.owner = owner;
  manifest.created_at = core::now_unix_seconds();
  manifest.samples.reserve(uris.size());
  for (std::size_t i = 0; i < uris.size(); ++i) {
    manifest.samples.push_back({i, uris[i], std::nullopt});
  }
  // Persist before publishing; a failed write leaves no trace of the dataset.
  core::write_file_atomic(manifest_path(manifest.dataset_id),
                          core::json(manifest).dump(2));
  std::lock_guard lock(mu_);
  datasets_.emplace(manifest.dataset_id, manifest);
  return manifest;
}

std::optional<core::DatasetManifest> DataManager::get_dataset(
    const std::string& dataset_id) const {
  std::lock_guard lock(mu_);
  auto it = datasets_.find(dataset_id);
  if (it == datasets_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DataManager::dataset_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  out.reserve(datasets_.size());
  for (const auto& [id, m] : datasets_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::string DataManager::resolve_fetch_url(const std::string& uri) const {
  core::Uri parsed = core::parse_uri(uri);
  if (parsed.scheme != "s3") return uri;
  if (!cfg_.s3_gateway_template) {
    throw Error(ErrorCode::FetchFailed,
                uri + ": s3 requires a configured gateway template");
  }
  std::string bucket, key;
  core::s3_parts(parsed, bucket, key);
  std::string url = *cfg_.s3_gateway_template;
  auto replace_all = [&url](const std::string& what, const std::string& with) {
    for (std::size_t pos = url.find(what); pos != std::string::npos;
         pos = url.find(what, pos + with.size())) {
      url.replace(pos, what.size(), with);
    }
  };
  replace_all("{bucket}", bucket);
  replace_all("{key}", key);
  return url;
}

std::string DataManager::origin_read(const std::string& uri) {
  fetch_slots_.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{fetch_slots_};

  std::string url = resolve_fetch_url(uri);
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      std::string bytes = fetch_once(url, cfg_.fetch_timeout_ms);
      remote_accesses_.fetch_add(1);
      return bytes;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::FetchFailed, last_error);
}

std::string DataManager::coalesced_origin_read(const std::string& uri) {
  std::promise<std::string> promise;
  std::shared_future<std::string> fut;
  bool leader = false;
  {
    std::lock_guard lock(flight_mu_);
    auto it = inflight_.find(uri);
    if (it != inflight_.end()) {
      fut = it->second;
    } else {
      fut = promise.get_future().share();
      inflight_.emplace(uri, fut);
      leader = true;
    }
  }
  if (!leader) return fut.get();  // rethrows the leader's failure
  try {
    std::string bytes = origin_read(uri);
    promise.set_value(bytes);
    std::lock_guard lock(flight_mu_);
    inflight_.erase(uri);
    return bytes;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(flight_mu_);
    inflight_.erase(uri);
    throw;
  }
}

FetchResult DataManager::fetch(const std::string& dataset_id, core::SampleId id,
                               FetchPolicy policy) {
  std::string uri;
  std::optional<std::string> known_hash;
  {
    std::lock_guard lock(mu_);
    auto it = datasets_.find(dataset_id);
    if (it == datasets_.end()) {
      throw Error(ErrorCode::UnknownDataset, "no dataset " + dataset_id);
    }
    if (id >= it->second.samples.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "sample " + std::to_string(id) + " out of range");
    }
    uri = it->second.samples[id].uri;
    known_hash = it->second.samples[id].content_hash;
  }

  if (policy == FetchPolicy::cache && known_hash) {
    bool present;
    {
      std::lock_guard lock(mu_);
      present = payload_index_.count(*known_hash) > 0;
    }
    if (present) {
      auto t0 = std::chrono::steady_clock::now();
      auto bytes = core::read_file(payload_path(*known_hash));
      if (bytes && sha256_hex(*bytes) == *known_hash) {
        std::lock_guard lock(mu_);
        touch_locked(*known_hash);
        note_mutation_locked();
        return {id, std::move(*bytes), *known_hash, true, seconds_since(t0)};
      }
      // Corrupted or vanished: drop the entry and refetch below.
      {
        std::lock_guard lock(mu_);
        auto it = payload_index_.find(*known_hash);
        if (it != payload_index_.end()) {
          payload_bytes_ -= std::min(payload_bytes_, it->second.size);
          payload_index_.erase(it);
          index_dirty_ = true;
          note_mutation_locked();
        }
      }
      std::error_code ec;
      std::filesystem::remove(payload_path(*known_hash), ec);
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  std::string bytes = coalesced_origin_read(uri);
  double elapsed = seconds_since(t0);
  std::string hash = sha256_hex(bytes);

  if (policy == FetchPolicy::cache) {
    bool need_store;
    {
      std::lock_guard lock(mu_);
      need_store = payload_index_.count(hash) == 0;
    }
    if (need_store) {
      core::write_file_atomic(payload_path(hash), bytes);
    }
    std::lock_guard lock(mu_);
    if (payload_index_.count(hash) == 0) {
      PayloadEntry pe;
      pe.size = bytes.size();
      pe.last_access = core::now_unix_seconds();
      pe.access_seq = ++access_counter_;
      payload_bytes_ += pe.size;
      payload_index_.emplace(hash, pe);
      index_dirty_ = true;
    } else {
      touch_locked(hash);
    }
    auto it = datasets_.find(dataset_id);
    if (it != datasets_.end()) {
      auto& sample = it->second.samples[id];
      if (!sample.content_hash) {  // once set, immutable
        sample.content_hash = hash;
        dirty_manifests_.insert(dataset_id);
      }
    }
    if (cfg_.cache_max_bytes > 0) {
      evict_locked(cfg_.cache_max_bytes);
    }
    note_mutation_locked();
  } else {
    std::lock_guard lock(mu_);
    auto it = datasets_.find(dataset_id);
    if (it != datasets_.end() && !it->second.samples[id].content_hash) {
      it->second.samples[id].content_hash = hash;
      dirty_manifests_.insert(dataset_id);
      note_mutation_locked();
    }
  }
  return {id, std::move(bytes), std::move(hash), false, elapsed};
}

std::optional<InferenceRow> DataManager::get_cached_inference(
    const std::string& content_hash, const std::string& model_version) {
  std::lock_guard lock(mu_);
  auto mit = infer_cache_.find(model_version);
  if (mit == infer_cache_.end()) return std::nullopt;
  auto rit = mit->second.find(content_hash);
  if (rit == mit->second.end()) return std::nullopt;
  return rit->second;
}

void DataManager::put_cached_inference(const std::string& content_hash,
                                       const std::string& model_version,
                                       InferenceRow row) {
  double sum = 0.0;
  for (double p : row.prob) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::MalformedRow, "probability outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::MalformedRow,
                "probability row sums to " + std::to_string(sum));
  }
  std::lock_guard lock(mu_);
  infer_cache_[model_version][content_hash] = std::move(row);
  dirty_models_.insert(model_version);
  note_mutation_locked();
}

std::uint64_t DataManager::evict_locked(std::uint64_t max_bytes) {
  std::uint64_t freed = 0;
  while (payload_bytes_ > max_bytes && !payload_index_.empty()) {
    auto oldest = payload_index_.begin();
    for (auto it = payload_index_.begin(); it != payload_index_.end(); ++it) {
      auto key = std::pair(it->second.last_access, it->second.access_seq);
      auto old = std::pair(oldest->second.last_access, oldest->second.access_seq);
      if (key < old) oldest = it;
    }
    std::error_code ec;
    std::filesystem::remove(payload_path(oldest->first), ec);
    payload_bytes_ -= std::min(payload_bytes_, oldest->second.size);
    freed += oldest->second.size;
    payload_index_.erase(oldest);
    index_dirty_ = true;
  }
  return freed;
}

std::uint64_t DataManager::evict(std::uint64_t max_bytes) {
  std::lock_guard lock(mu_);
  auto entries_before = payload_index_.size();
  std::uint64_t freed = evict_locked(max_bytes);
  if (payload_index_.size() != entries_before) note_mutation_locked();
  return freed;
}

std::uint64_t DataManager::payload_cache_bytes() const {
  std::lock_guard lock(mu_);
  return payload_bytes_;
}

}  // namespace alaas::data
