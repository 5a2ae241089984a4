#include "alaas/infer/engine.hpp"

#include <httplib.h>

#include "alaas/core/error.hpp"

namespace alaas::infer {

using core::Error;
using core::ErrorCode;

std::optional<std::string> BackendSpec::violation() const {
  if (kind == BackendKind::remote && !endpoint) {
    return "remote backend requires an endpoint";
  }
  if (classes < 2) return "classes must be >= 2";
  if (embed_dim < 1) return "embed_dim must be >= 1";
  if (batch_limit < 1) return "batch_limit must be >= 1";
  if (timeout_ms <= 0) return "timeout_ms must be positive";
  return std::nullopt;
}

core::json remote_infer_call(const std::string& endpoint,
                             const std::string& model_version,
                             const std::vector<std::vector<double>>& rows,
                             int timeout_ms) {
  core::json req{{"model_version", model_version}, {"rows", rows}};
  const std::string body = req.dump();
  time_t sec = timeout_ms / 1000;
  time_t usec = (timeout_ms % 1000) * 1000;
  for (int attempt = 0; attempt < 2; ++attempt) {
    httplib::Client cli(endpoint);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    auto res = cli.Post("/v1/infer", body, "application/json");
    if (!res || res->status != 200) continue;  // one retry covers timeouts and 5xx
    try {
      return core::json::parse(res->body);
    } catch (const core::json::exception&) {
      throw Error(ErrorCode::MalformedResponse, "backend returned invalid JSON");
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              "backend at " + endpoint + " failed after one retry");
}

Engine::Engine(BackendSpec spec) : spec_(std::move(spec)) {
  if (auto v = spec_.violation()) {
    throw Error(ErrorCode::InvalidValue, *v);
  }
  if (spec_.kind == BackendKind::mock) {
    mock_ = std::make_unique<MockModel>(spec_.model_version, spec_.classes,
                                        spec_.embed_dim);
  }
}

std::pair<core::ProbabilityMatrix, core::EmbeddingMatrix> Engine::infer_batch(
    const std::vector<FeatureVector>& batch) const {
  if (batch.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty inference batch");
  }
  if (batch.size() > spec_.batch_limit) {
    throw Error(ErrorCode::BatchTooLarge,
                "batch of " + std::to_string(batch.size()) + " exceeds limit " +
                    std::to_string(spec_.batch_limit));
  }
  calls_.fetch_add(1);

  core::ProbabilityMatrix probs;
  probs.rows = batch.size();
  probs.classes = spec_.classes;
  probs.data.resize(probs.rows * probs.classes);
  core::EmbeddingMatrix embeds;
  embeds.rows = batch.size();
  embeds.dim = spec_.embed_dim;
  embeds.data.resize(embeds.rows * embeds.dim);
  for (const auto& fv : batch) {
    probs.row_ids.push_back(fv.id);
    embeds.row_ids.push_back(fv.id);
  }

  if (spec_.kind == BackendKind::mock) {
    for (std::size_t r = 0; r < batch.size(); ++r) {
      mock_->run(batch[r].values, probs.data.data() + r * probs.classes,
                 embeds.data.data() + r * embeds.dim);
    }
  } else {
    std::vector<std::vector<double>> rows;
    rows.reserve(batch.size());
    for (const auto& fv : batch) rows.push_back(fv.values);
    core::json resp = remote_infer_call(*spec_.endpoint, spec_.model_version,
                                        rows, spec_.timeout_ms);
    if (!resp.is_object() || !resp.contains("probs") || !resp.contains("embeds")) {
      throw Error(ErrorCode::MalformedResponse, "response missing probs/embeds");
    }
    const auto& jp = resp["probs"];
    const auto& je = resp["embeds"];
    if (!jp.is_array() || !je.is_array() || jp.size() != batch.size() ||
        je.size() != batch.size()) {
      throw Error(ErrorCode::MalformedResponse, "response row count mismatch");
    }
    try {
      for (std::size_t r = 0; r < batch.size(); ++r) {
        if (jp[r].size() != spec_.classes || je[r].size() != spec_.embed_dim) {
          throw Error(ErrorCode::MalformedResponse, "response row width mismatch");
        }
        for (std::size_t c = 0; c < spec_.classes; ++c) {
          probs.data[r * spec_.classes + c] = jp[r][c].get<double>();
        }
        for (std::size_t d = 0; d < spec_.embed_dim; ++d) {
          embeds.data[r * spec_.embed_dim + d] = je[r][d].get<double>();
        }
      }
    } catch (const core::json::exception&) {
      throw Error(ErrorCode::MalformedResponse, "non-numeric row entry");
    }
    if (auto v = probs.violation()) {
      throw Error(ErrorCode::MalformedResponse, "backend probabilities: " + *v);
    }
    if (auto v = embeds.violation()) {
      throw Error(ErrorCode::MalformedResponse, "backend embeddings: " + *v);
    }
  }
  return {std::move(probs), std::move(embeds)};
}

}  // namespace alaas::infer
