#pragma once

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "alaas/server/config.hpp"
#include "alaas/server/jobs.hpp"

namespace alaas::server {

// The HTTP service: dataset ingestion plus asynchronous query jobs.
//
//   GET    /v1/health
//   POST   /v1/datasets          {"uris": [...], "name": "..."}
//   GET    /v1/datasets/{id}
//   POST   /v1/queries           {"dataset_id", "strategy"?, "budget"?,
//                                 "batch_size"?, "seed"?, "labeled_ids"?}
//   GET    /v1/queries/{job_id}
//   DELETE /v1/queries/{job_id}
//
// Every error body is {"code", "message"}. Queries return 202 with a job id
// and run on a pool of server.workers threads, each with a private pipeline
// round; results are polled via GET. Shutdown is graceful: running jobs are
// cancelled at their next batch boundary and every record is persisted.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds (port 0 picks a free one), starts the listener and the job
  // workers, re-enqueues jobs recovered from a previous process. Throws
  // BindFailed. Returns once the socket accepts connections.
  void start();
  void stop();

  int port() const { return bound_port_; }
  std::string url() const;

  const ServiceConfig& config() const { return cfg_; }
  data::DataManager& data_manager() { return dm_; }
  infer::Engine& engine() { return engine_; }
  JobRegistry& jobs() { return registry_; }

 private:
  struct Http;  // wraps httplib::Server

  void install_routes();
  void worker_loop();
  void run_job(const std::string& job_id);
  core::ALQuery query_from_body(const core::json& body) const;

  ServiceConfig cfg_;
  data::DataManager dm_;
  infer::Engine engine_;
  JobRegistry registry_;
  pipeline::BoundedQueue<std::string> job_queue_;
  std::unique_ptr<Http> http_;
  std::vector<std::thread> workers_;
  std::thread listen_thread_;
  int bound_port_ = 0;
  bool started_ = false;
  bool stopped_ = false;
};

}  // namespace alaas::server
