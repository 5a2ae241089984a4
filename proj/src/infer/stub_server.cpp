#include "alaas/infer/stub_server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "alaas/core/error.hpp"
#include "alaas/core/types.hpp"
#include "alaas/infer/mock_model.hpp"

namespace alaas::infer {

using core::Error;
using core::ErrorCode;

struct StubServer::Impl {
  std::size_t classes;
  std::size_t embed_dim;
  httplib::Server srv;
  std::thread runner;
  int port = 0;
  std::atomic<std::uint64_t> calls{0};
  std::atomic<int> fail_budget{0};
  std::atomic<int> delay_once_ms{0};
  std::atomic<double> per_call_ms{0.0};
  std::atomic<double> per_item_ms{0.0};

  void handle(const httplib::Request& req, httplib::Response& res) {
    calls.fetch_add(1);
    int delay = delay_once_ms.exchange(0);
    if (delay > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    if (fail_budget.fetch_sub(1) > 0) {
      res.status = 500;
      res.set_content(R"({"code":"Injected","message":"injected failure"})",
                      "application/json");
      return;
    }
    fail_budget.store(0);

    core::json body;
    try {
      body = core::json::parse(req.body);
    } catch (const core::json::exception&) {
      res.status = 400;
      res.set_content(R"({"code":"ParseError","message":"bad JSON"})",
                      "application/json");
      return;
    }
    std::string version = body.value("model_version", "");
    auto rows = body.value("rows", std::vector<std::vector<double>>{});

    double sleep_ms =
        per_call_ms.load() + per_item_ms.load() * static_cast<double>(rows.size());
    if (sleep_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(sleep_ms));
    }

    MockModel model(version, classes, embed_dim);
    std::vector<std::vector<double>> probs(rows.size()),
        embeds(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      probs[r].resize(classes);
      embeds[r].resize(embed_dim);
      model.run(rows[r], probs[r].data(), embeds[r].data());
    }
    core::json out{{"probs", probs}, {"embeds", embeds}};
    res.set_content(out.dump(), "application/json");
  }
};

StubServer::StubServer(std::size_t classes, std::size_t embed_dim)
    : impl_(std::make_unique<Impl>()) {
  impl_->classes = classes;
  impl_->embed_dim = embed_dim;
  impl_->srv.Post("/v1/infer",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    impl_->handle(req, res);
                  });
}

StubServer::~StubServer() { stop(); }

void StubServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->srv.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) {
      throw Error(ErrorCode::BindFailed, "stub server could not bind");
    }
  } else {
    if (!impl_->srv.bind_to_port("127.0.0.1", port)) {
      throw Error(ErrorCode::BindFailed,
                  "stub server could not bind port " + std::to_string(port));
    }
    impl_->port = port;
  }
  impl_->runner = std::thread([this] { impl_->srv.listen_after_bind(); });
  impl_->srv.wait_until_ready();
}

void StubServer::stop() {
  if (impl_->runner.joinable()) {
    impl_->srv.stop();
    impl_->runner.join();
  }
}

int StubServer::port() const { return impl_->port; }

std::string StubServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void StubServer::set_latency(double per_call_ms, double per_item_ms) {
  impl_->per_call_ms.store(per_call_ms);
  impl_->per_item_ms.store(per_item_ms);
}

void StubServer::fail_next(int count) { impl_->fail_budget.store(count); }

void StubServer::delay_next(int millis) { impl_->delay_once_ms.store(millis); }

std::uint64_t StubServer::calls() const { return impl_->calls.load(); }

}  // namespace alaas::infer
