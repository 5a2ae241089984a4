#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "alaas/core/types.hpp"
#include "alaas/pipeline/pipeline.hpp"

namespace alaas::server {

// Persistent job store. Mutations are serialized and written through to
// <jobs_dir>/<job_id>.json (temp + rename) before they become visible, so a
// crash never loses an acknowledged job. Reads hand out snapshots. On
// construction, records left by a previous process are recovered: running
// means that process died mid-job and becomes failed ("interrupted by
// restart"); queued records are reported via recovered_queue() so the
// service can re-enqueue them.
class JobRegistry {
 public:
  explicit JobRegistry(std::filesystem::path jobs_dir);

  core::JobRecord create(core::ALQuery query);
  std::optional<core::JobRecord> get(const std::string& job_id) const;
  std::vector<std::string> job_ids() const;

  // queued -> running; false when the job was cancelled (or unknown) first.
  bool begin(const std::string& job_id);
  // running -> done; the report's job_id is stamped here.
  void finish(const std::string& job_id, core::ALReport report);
  // running -> failed, with the reason.
  void fail(const std::string& job_id, const std::string& error);
  // running -> cancelled, after the pipeline observed the token.
  void mark_cancelled(const std::string& job_id);

  // queued -> cancelled immediately; running -> fires the cancel token and
  // leaves the state to the worker; terminal states unchanged (idempotent).
  // Returns the state right after the call, nullopt for unknown ids.
  std::optional<core::JobState> request_cancel(const std::string& job_id);

  std::shared_ptr<pipeline::CancelToken> token(const std::string& job_id) const;

  // Queued job ids found on disk at startup, in submitted_at order.
  const std::vector<std::string>& recovered_queue() const { return recovered_; }

 private:
  struct Slot {
    std::shared_ptr<const core::JobRecord> record;
    std::shared_ptr<pipeline::CancelToken> token;
  };

  std::filesystem::path record_path(const std::string& job_id) const;
  void persist(const core::JobRecord& rec) const;
  void load_existing();

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Slot> slots_;
  std::vector<std::string> recovered_;
  std::int64_t last_stamp_ = 0;  // highest submitted_at handed out so far
};

}  // namespace alaas::server
