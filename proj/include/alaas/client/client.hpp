#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alaas/core/types.hpp"

namespace alaas::client {

struct ClientConfig {
  std::string server_url = "http://127.0.0.1:8290";
  int request_timeout_ms = 30000;
  int poll_interval_ms = 200;
  int max_poll_time_ms = 600000;

  // First violated invariant, or nullopt.
  std::optional<std::string> violation() const;
};

// Regular files directly inside `dir`, as file:// URIs sorted
// lexicographically, so the same directory always produces the same sample
// ids. Throws InvalidArgument when dir is not a directory or holds no files.
std::vector<std::string> expand_dir(const std::string& dir);

// Server errors are rethrown under their wire code (DuplicateUri stays
// DuplicateUri); a connection that cannot be established or times out is
// ServerUnreachable.
core::json health(const ClientConfig& cfg);
std::string push_dataset(const ClientConfig& cfg, const std::vector<std::string>& uris,
                         const std::string& name);
core::DatasetManifest get_dataset(const ClientConfig& cfg,
                                  const std::string& dataset_id);
std::string submit_query(const ClientConfig& cfg, const core::ALQuery& query);
core::JobRecord get_job(const ClientConfig& cfg, const std::string& job_id);
core::JobState cancel_job(const ClientConfig& cfg, const std::string& job_id);

// Submit, then poll every poll_interval_ms until the job leaves the queue.
// done -> the report; failed -> JobFailed; cancelled -> Cancelled; still
// unfinished after max_poll_time_ms -> PollTimeout. budget == 0 is rejected
// client-side before any request goes out.
core::ALReport query_and_wait(const ClientConfig& cfg, const core::ALQuery& query);

}  // namespace alaas::client
