#include "alaas/client/client.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <thread>

#include "alaas/core/error.hpp"

namespace alaas::client {

using core::Error;
using core::ErrorCode;
using core::json;

std::optional<std::string> ClientConfig::violation() const {
  if (server_url.empty()) return "server_url must not be empty";
  if (request_timeout_ms <= 0) return "request_timeout_ms must be positive";
  if (poll_interval_ms <= 0) return "poll_interval_ms must be positive";
  if (poll_interval_ms > max_poll_time_ms) {
    return "poll_interval_ms must not exceed max_poll_time_ms";
  }
  return std::nullopt;
}

std::vector<std::string> expand_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::InvalidArgument, "not a directory: " + dir);
  }
  std::vector<std::string> uris;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    uris.push_back("file://" + fs::absolute(entry.path()).string());
  }
  if (uris.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no files in directory: " + dir);
  }
  std::sort(uris.begin(), uris.end());
  return uris;
}

namespace {

void check_config(const ClientConfig& cfg) {
  if (auto v = cfg.violation()) throw Error(ErrorCode::InvalidArgument, *v);
}

httplib::Client make_client(const ClientConfig& cfg) {
  httplib::Client cli(cfg.server_url);
  const auto ms = std::chrono::milliseconds(cfg.request_timeout_ms);
  cli.set_connection_timeout(ms);
  cli.set_read_timeout(ms);
  cli.set_write_timeout(ms);
  return cli;
}

// One HTTP exchange; non-2xx bodies are rethrown under their wire code.
json roundtrip(const ClientConfig& cfg, const std::string& method,
               const std::string& path, const json* body) {
  check_config(cfg);
  auto cli = make_client(cfg);
  httplib::Result res;
  if (method == "GET") {
    res = cli.Get(path);
  } else if (method == "POST") {
    res = cli.Post(path, body ? body->dump() : "{}", "application/json");
  } else if (method == "DELETE") {
    res = cli.Delete(path);
  }
  if (!res) {
    throw Error(ErrorCode::ServerUnreachable,
                cfg.server_url + ": " + httplib::to_string(res.error()));
  }
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedResponse,
                method + " " + path + ": body is not JSON (status " +
                    std::to_string(res->status) + ")");
  }
  if (res->status >= 400) {
    std::string code_name = parsed.value("code", std::string("ServerError"));
    std::string message = parsed.value("message", std::string("server error"));
    ErrorCode code =
        core::error_code_from_name(code_name).value_or(ErrorCode::ServerError);
    throw Error(code, message);
  }
  return parsed;
}

}  // namespace

json health(const ClientConfig& cfg) {
  return roundtrip(cfg, "GET", "/v1/health", nullptr);
}

std::string push_dataset(const ClientConfig& cfg, const std::vector<std::string>& uris,
                         const std::string& name) {
  json body{{"uris", uris}, {"name", name}};
  return roundtrip(cfg, "POST", "/v1/datasets", &body).at("dataset_id");
}

core::DatasetManifest get_dataset(const ClientConfig& cfg,
                                  const std::string& dataset_id) {
  return roundtrip(cfg, "GET", "/v1/datasets/" + dataset_id, nullptr)
      .get<core::DatasetManifest>();
}

std::string submit_query(const ClientConfig& cfg, const core::ALQuery& query) {
  if (query.budget == 0) {
    throw Error(ErrorCode::InvalidArgument, "budget must be positive");
  }
  if (query.dataset_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "dataset_id must not be empty");
  }
  json body{{"dataset_id", query.dataset_id},
            {"strategy", core::strategy_name(query.strategy.name)},
            {"dbal_beta", query.strategy.beta},
            {"budget", query.budget},
            {"batch_size", query.batch_size},
            {"seed", query.seed},
            {"labeled_ids", query.labeled_ids}};
  return roundtrip(cfg, "POST", "/v1/queries", &body).at("job_id");
}

core::JobRecord get_job(const ClientConfig& cfg, const std::string& job_id) {
  return roundtrip(cfg, "GET", "/v1/queries/" + job_id, nullptr)
      .get<core::JobRecord>();
}

core::JobState cancel_job(const ClientConfig& cfg, const std::string& job_id) {
  json reply = roundtrip(cfg, "DELETE", "/v1/queries/" + job_id, nullptr);
  auto state = core::job_state_from_name(reply.at("state").get<std::string>());
  if (!state) {
    throw Error(ErrorCode::MalformedResponse,
                "unknown job state: " + reply.at("state").get<std::string>());
  }
  return *state;
}

core::ALReport query_and_wait(const ClientConfig& cfg, const core::ALQuery& query) {
  check_config(cfg);
  const std::string job_id = submit_query(cfg, query);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(cfg.max_poll_time_ms);
  for (;;) {
    core::JobRecord rec = get_job(cfg, job_id);
    switch (rec.state) {
      case core::JobState::done:
        return *rec.report;
      case core::JobState::failed:
        throw Error(ErrorCode::JobFailed,
                    rec.error.value_or("job failed without a reason"));
      case core::JobState::cancelled:
        throw Error(ErrorCode::Cancelled, "job " + job_id + " was cancelled");
      case core::JobState::queued:
      case core::JobState::running:
        break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error(ErrorCode::PollTimeout,
                  "job " + job_id + " still " + core::job_state_name(rec.state) +
                      " after " + std::to_string(cfg.max_poll_time_ms) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg.poll_interval_ms));
  }
}

}  // namespace alaas::client
