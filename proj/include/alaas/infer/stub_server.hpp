#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace alaas::infer {

// In-process serving backend implementing the wire protocol, used by tests
// and the benchmark harness. Computes the same MockModel outputs as the mock
// backend, so remote and mock runs select identically. Latency and failure
// injection are first-class: the batch-size sweep needs a per-call overhead
// and the retry tests need controlled 500s/delays.
class StubServer {
 public:
  StubServer(std::size_t classes, std::size_t embed_dim);
  ~StubServer();

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  // port 0 picks a free port; throws BindFailed when binding fails.
  void start(int port = 0);
  void stop();

  int port() const;
  std::string endpoint() const;  // http://127.0.0.1:<port>

  void set_latency(double per_call_ms, double per_item_ms);
  void fail_next(int count);    // next `count` requests answer 500
  void delay_next(int millis);  // one-shot extra delay on the next request

  std::uint64_t calls() const;  // requests received, including failed ones

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace alaas::infer
