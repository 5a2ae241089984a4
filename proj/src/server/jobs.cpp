#include "alaas/server/jobs.hpp"

#include <algorithm>
#include <utility>

#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/timeutil.hpp"

namespace alaas::server {

using core::Error;
using core::ErrorCode;
using core::JobRecord;
using core::JobState;

JobRegistry::JobRegistry(std::filesystem::path jobs_dir) : dir_(std::move(jobs_dir)) {
  std::filesystem::create_directories(dir_);
  load_existing();
}

std::filesystem::path JobRegistry::record_path(const std::string& job_id) const {
  return dir_ / (job_id + ".json");
}

void JobRegistry::persist(const JobRecord& rec) const {
  core::json j = rec;
  core::write_file_atomic(record_path(rec.job_id), j.dump(2));
}

void JobRegistry::load_existing() {
  std::vector<std::pair<std::int64_t, std::string>> queued;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    auto text = core::read_file(entry.path());
    if (!text) continue;
    JobRecord rec;
    try {
      rec = core::json::parse(*text).get<JobRecord>();
    } catch (...) {
      continue;  // stray tmp or foreign file; records are temp+rename'd
    }
    if (rec.state == JobState::running) {
      rec.state = JobState::failed;
      rec.error = "interrupted by restart";
      rec.report.reset();
      rec.updated_at = core::now_unix_millis();
      persist(rec);
    } else if (rec.state == JobState::queued) {
      queued.emplace_back(rec.submitted_at, rec.job_id);
    }
    Slot slot;
    slot.record = std::make_shared<const JobRecord>(std::move(rec));
    slot.token = std::make_shared<pipeline::CancelToken>();
    last_stamp_ = std::max(last_stamp_, slot.record->submitted_at);
    slots_.emplace(slot.record->job_id, std::move(slot));
  }
  std::sort(queued.begin(), queued.end());
  recovered_.reserve(queued.size());
  for (auto& [at, id] : queued) recovered_.push_back(std::move(id));
}

JobRecord JobRegistry::create(core::ALQuery query) {
  JobRecord rec;
  rec.job_id = core::random_hex_id();
  rec.state = JobState::queued;
  rec.query = std::move(query);
  std::unique_lock lock(mu_);
  // Strictly increasing, so recovery re-enqueues in exact submission order
  // even for jobs accepted within the same millisecond.
  rec.submitted_at = std::max(core::now_unix_millis(), last_stamp_ + 1);
  last_stamp_ = rec.submitted_at;
  rec.updated_at = rec.submitted_at;
  persist(rec);  // durable before acknowledged
  Slot slot;
  slot.record = std::make_shared<const JobRecord>(rec);
  slot.token = std::make_shared<pipeline::CancelToken>();
  slots_.emplace(rec.job_id, std::move(slot));
  return rec;
}

std::optional<JobRecord> JobRegistry::get(const std::string& job_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return std::nullopt;
  return *it->second.record;
}

std::vector<std::string> JobRegistry::job_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  ids.reserve(slots_.size());
  for (const auto& [id, slot] : slots_) ids.push_back(id);
  return ids;
}

bool JobRegistry::begin(const std::string& job_id) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end() || it->second.record->state != JobState::queued) {
    return false;
  }
  JobRecord next = *it->second.record;
  next.state = JobState::running;
  next.updated_at = core::now_unix_millis();
  persist(next);
  it->second.record = std::make_shared<const JobRecord>(std::move(next));
  return true;
}

void JobRegistry::finish(const std::string& job_id, core::ALReport report) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return;
  JobRecord next = *it->second.record;
  next.state = JobState::done;
  report.job_id = job_id;
  next.report = std::move(report);
  next.error.reset();
  next.updated_at = core::now_unix_millis();
  persist(next);
  it->second.record = std::make_shared<const JobRecord>(std::move(next));
}

void JobRegistry::fail(const std::string& job_id, const std::string& error) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return;
  JobRecord next = *it->second.record;
  next.state = JobState::failed;
  next.error = error;
  next.report.reset();
  next.updated_at = core::now_unix_millis();
  persist(next);
  it->second.record = std::make_shared<const JobRecord>(std::move(next));
}

void JobRegistry::mark_cancelled(const std::string& job_id) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return;
  JobRecord next = *it->second.record;
  next.state = JobState::cancelled;
  next.report.reset();
  next.error.reset();
  next.updated_at = core::now_unix_millis();
  persist(next);
  it->second.record = std::make_shared<const JobRecord>(std::move(next));
}

std::optional<JobState> JobRegistry::request_cancel(const std::string& job_id) {
  std::unique_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return std::nullopt;
  const JobState state = it->second.record->state;
  if (state == JobState::queued) {
    JobRecord next = *it->second.record;
    next.state = JobState::cancelled;
    next.updated_at = core::now_unix_millis();
    persist(next);
    it->second.record = std::make_shared<const JobRecord>(std::move(next));
    it->second.token->cancel();
    return JobState::cancelled;
  }
  if (state == JobState::running) {
    it->second.token->cancel();  // worker owns the transition
    return JobState::running;
  }
  return state;  // terminal; idempotent
}

std::shared_ptr<pipeline::CancelToken> JobRegistry::token(
    const std::string& job_id) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(job_id);
  if (it == slots_.end()) return nullptr;
  return it->second.token;
}

}  // namespace alaas::server
