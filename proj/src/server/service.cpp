#include "alaas/server/service.hpp"

#include <httplib.h>

#include <unordered_set>
#include <utility>

#include "alaas/core/error.hpp"

namespace alaas::server {

using core::Error;
using core::ErrorCode;
using core::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownJob:
      return 404;
    case ErrorCode::DuplicateUri:
      return 409;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ServerError:
    case ErrorCode::CacheWriteFailed:
      return 500;
    default:
      return 400;
  }
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = status_for(code);
  res.set_content(json{{"code", core::error_code_name(code)}, {"message", message}}.dump(),
                  "application/json");
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Uniform exception -> wire error translation for every handler.
template <typename Fn>
auto guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      reply_error(res, ErrorCode::ParseError, e.what());
    } catch (const std::exception& e) {
      reply_error(res, ErrorCode::ServerError, e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
  }
}

}  // namespace

struct Service::Http {
  httplib::Server server;
};

Service::Service(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      dm_(cfg_.data),
      engine_(cfg_.backend_spec()),
      registry_(std::filesystem::path(cfg_.data.data_dir) / "jobs"),
      job_queue_(1 << 20),
      http_(std::make_unique<Http>()) {}

Service::~Service() { stop(); }

std::string Service::url() const {
  return "http://" + cfg_.server.host + ":" + std::to_string(bound_port_);
}

core::ALQuery Service::query_from_body(const json& body) const {
  if (!body.is_object()) {
    throw Error(ErrorCode::InvalidValue, "request body must be a JSON object");
  }
  core::ALQuery q;
  auto it = body.find("dataset_id");
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::InvalidValue, "dataset_id is required");
  }
  q.dataset_id = it->get<std::string>();

  q.strategy = cfg_.strategy_kind();
  if (auto s = body.find("strategy"); s != body.end() && !s->is_null()) {
    if (!s->is_string()) {
      throw Error(ErrorCode::InvalidValue, "strategy must be a string");
    }
    auto kind = core::strategy_from_name(s->get<std::string>());
    if (!kind) {
      std::string names;
      for (const auto& a : core::strategy_aliases()) {
        names += names.empty() ? a : ", " + a;
      }
      throw Error(ErrorCode::InvalidValue,
                  "unknown strategy " + s->get<std::string>() + "; one of: " + names);
    }
    q.strategy.name = *kind;
  }
  if (auto b = body.find("dbal_beta"); b != body.end() && !b->is_null()) {
    q.strategy.beta = b->get<std::uint32_t>();
  }
  q.budget = cfg_.active_learning.budget;
  if (auto b = body.find("budget"); b != body.end() && !b->is_null()) {
    if (!b->is_number_unsigned() || b->get<std::uint64_t>() == 0) {
      throw Error(ErrorCode::InvalidValue, "budget must be a positive integer");
    }
    q.budget = b->get<std::uint64_t>();
  }
  q.batch_size = cfg_.active_learning.batch_size;
  if (auto b = body.find("batch_size"); b != body.end() && !b->is_null()) {
    if (!b->is_number_unsigned() || b->get<std::uint64_t>() == 0) {
      throw Error(ErrorCode::InvalidValue, "batch_size must be a positive integer");
    }
    q.batch_size = b->get<std::uint64_t>();
  }
  if (auto s = body.find("seed"); s != body.end() && !s->is_null()) {
    if (!s->is_number_unsigned()) {
      throw Error(ErrorCode::InvalidValue, "seed must be a non-negative integer");
    }
    q.seed = s->get<std::uint64_t>();
  }
  if (auto l = body.find("labeled_ids"); l != body.end() && !l->is_null()) {
    if (!l->is_array()) {
      throw Error(ErrorCode::InvalidValue, "labeled_ids must be an array");
    }
    q.labeled_ids = l->get<std::vector<core::SampleId>>();
  }
  return q;
}

void Service::install_routes() {
  auto& s = http_->server;

  s.Get("/v1/health", guarded([this](const httplib::Request&, httplib::Response& res) {
          reply_json(res, 200,
                     json{{"status", "ok"},
                          {"name", cfg_.name},
                          {"version", cfg_.version}});
        }));

  s.Post("/v1/datasets", guarded([this](const httplib::Request& req,
                                        httplib::Response& res) {
           json body = parse_body(req);
           if (!body.is_object() || !body.contains("uris") ||
               !body["uris"].is_array()) {
             throw Error(ErrorCode::InvalidValue, "uris must be an array of strings");
           }
           auto uris = body["uris"].get<std::vector<std::string>>();
           std::string name = body.value("name", std::string("dataset"));
           std::string owner = body.value("owner", std::string("client"));
           auto manifest = dm_.ingest(uris, name, owner);
           reply_json(res, 201, json{{"dataset_id", manifest.dataset_id}});
         }));

  s.Get(R"(/v1/datasets/([^/]+))", guarded([this](const httplib::Request& req,
                                                  httplib::Response& res) {
          auto manifest = dm_.get_dataset(req.matches[1]);
          if (!manifest) {
            throw Error(ErrorCode::UnknownDataset,
                        "unknown dataset: " + req.matches[1].str());
          }
          reply_json(res, 200, json(*manifest));
        }));

  s.Post("/v1/queries", guarded([this](const httplib::Request& req,
                                       httplib::Response& res) {
           core::ALQuery q = query_from_body(parse_body(req));
           auto manifest = dm_.get_dataset(q.dataset_id);
           if (!manifest) {
             throw Error(ErrorCode::UnknownDataset,
                         "unknown dataset: " + q.dataset_id);
           }
           // Fail fast, before anything is queued.
           std::unordered_set<core::SampleId> labeled;
           for (auto id : q.labeled_ids) {
             if (id >= manifest->samples.size()) {
               throw Error(ErrorCode::InvalidArgument,
                           "labeled id out of range: " + std::to_string(id));
             }
             if (!labeled.insert(id).second) {
               throw Error(ErrorCode::InvalidArgument,
                           "duplicate labeled id: " + std::to_string(id));
             }
           }
           const std::size_t pool = manifest->samples.size() - labeled.size();
           if (q.budget > pool) {
             throw Error(ErrorCode::BudgetExceedsPool,
                         "budget " + std::to_string(q.budget) +
                             " exceeds pool of " + std::to_string(pool));
           }
           auto rec = registry_.create(std::move(q));
           job_queue_.push(rec.job_id);
           reply_json(res, 202, json{{"job_id", rec.job_id}});
         }));

  s.Get(R"(/v1/queries/([^/]+))", guarded([this](const httplib::Request& req,
                                                 httplib::Response& res) {
          auto rec = registry_.get(req.matches[1]);
          if (!rec) {
            throw Error(ErrorCode::UnknownJob, "unknown job: " + req.matches[1].str());
          }
          reply_json(res, 200, json(*rec));
        }));

  s.Delete(R"(/v1/queries/([^/]+))", guarded([this](const httplib::Request& req,
                                                    httplib::Response& res) {
             auto state = registry_.request_cancel(req.matches[1]);
             if (!state) {
               throw Error(ErrorCode::UnknownJob,
                           "unknown job: " + req.matches[1].str());
             }
             reply_json(res, 200,
                        json{{"job_id", req.matches[1].str()},
                             {"state", core::job_state_name(*state)}});
           }));
}

void Service::run_job(const std::string& job_id) {
  if (!registry_.begin(job_id)) return;  // cancelled while queued
  auto rec = registry_.get(job_id);
  auto token = registry_.token(job_id);
  if (!rec || !token) return;
  try {
    auto result = pipeline::run_round(dm_, rec->query, cfg_.pipeline_spec(),
                                      engine_, token.get());
    registry_.finish(job_id, std::move(result.report));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Cancelled) {
      registry_.mark_cancelled(job_id);
    } else {
      registry_.fail(job_id, std::string(e.code_name()) + ": " + e.what());
    }
  } catch (const std::exception& e) {
    registry_.fail(job_id, e.what());
  }
}

void Service::worker_loop() {
  while (auto job_id = job_queue_.pop()) {
    run_job(*job_id);
  }
}

void Service::start() {
  if (started_) return;
  install_routes();
  auto& s = http_->server;
  if (cfg_.server.port == 0) {
    bound_port_ = s.bind_to_any_port(cfg_.server.host);
    if (bound_port_ <= 0) {
      throw Error(ErrorCode::BindFailed, "cannot bind " + cfg_.server.host);
    }
  } else {
    if (!s.bind_to_port(cfg_.server.host, cfg_.server.port)) {
      throw Error(ErrorCode::BindFailed,
                  "cannot bind " + cfg_.server.host + ":" +
                      std::to_string(cfg_.server.port));
    }
    bound_port_ = cfg_.server.port;
  }
  listen_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
  s.wait_until_ready();

  for (const std::string& job_id : registry_.recovered_queue()) {
    job_queue_.push(job_id);
  }
  workers_.reserve(static_cast<std::size_t>(cfg_.server.workers));
  for (int i = 0; i < cfg_.server.workers; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
  started_ = true;
}

void Service::stop() {
  if (stopped_) return;
  stopped_ = true;
  if (started_) {
    http_->server.stop();
    if (listen_thread_.joinable()) listen_thread_.join();
  }
  // Drop still-queued ids (their records stay queued on disk and are
  // re-enqueued on restart); running jobs stop at their next batch boundary
  // and persist as cancelled.
  job_queue_.cancel();
  for (const std::string& id : registry_.job_ids()) {
    if (auto rec = registry_.get(id); rec && rec->state == core::JobState::running) {
      if (auto token = registry_.token(id)) token->cancel();
    }
  }
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
  dm_.flush();
}

}  // namespace alaas::server
