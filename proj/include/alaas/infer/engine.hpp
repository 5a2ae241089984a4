#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alaas/core/types.hpp"
#include "alaas/infer/mock_model.hpp"

namespace alaas::infer {

struct FeatureVector {
  core::SampleId id = 0;
  std::vector<double> values;  // finite, same length within one job
};

enum class BackendKind { mock, remote };

struct BackendSpec {
  BackendKind kind = BackendKind::mock;
  std::string model_version = "m1";
  std::size_t classes = 10;
  std::size_t embed_dim = 8;
  std::optional<std::string> endpoint;  // required for remote
  std::size_t batch_limit = 1024;
  int timeout_ms = 30000;  // remote connect/read budget per wire call

  // First violated invariant, or nullopt.
  std::optional<std::string> violation() const;
};

// One HTTP round-trip against the minimal serving protocol: POST
// {endpoint}/v1/infer {"model_version", "rows"} -> {"probs", "embeds"}.
// Any failure (connect, timeout, non-200) is retried once, then
// BackendUnavailable; a structurally bad body is MalformedResponse.
core::json remote_infer_call(const std::string& endpoint,
                             const std::string& model_version,
                             const std::vector<std::vector<double>>& rows,
                             int timeout_ms);

// Pluggable backend front door. infer_batch is safe to call concurrently
// for distinct batches.
class Engine {
 public:
  explicit Engine(BackendSpec spec);

  // Output rows align with batch order; row_ids copied from the batch.
  std::pair<core::ProbabilityMatrix, core::EmbeddingMatrix> infer_batch(
      const std::vector<FeatureVector>& batch) const;

  // Wire calls for remote, model evaluations batches for mock.
  std::uint64_t backend_calls() const { return calls_.load(); }
  void reset_backend_calls() { calls_.store(0); }

  const BackendSpec& spec() const { return spec_; }

 private:
  BackendSpec spec_;
  std::unique_ptr<MockModel> mock_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

}  // namespace alaas::infer
