#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace alaas::core {

using json = nlohmann::json;

// Dense per-dataset sample index: assigned from 0 in ingestion order, never
// reused. Matrix rows align with these ids.
using SampleId = std::uint64_t;

struct SampleRef {
  SampleId id = 0;
  std::string uri;
  // SHA-256 of the payload, 64 lowercase hex chars; set after first fetch and
  // immutable from then on.
  std::optional<std::string> content_hash;

  bool operator==(const SampleRef&) const = default;
};

struct DatasetManifest {
  std::string dataset_id;  // 128-bit random id, 32 hex chars
  std::string name;
  std::string owner;
  std::int64_t created_at = 0;  // unix seconds, serialized as UTC ISO-8601
  std::vector<SampleRef> samples;

  bool operator==(const DatasetManifest&) const = default;
};

struct ProbabilityMatrix {
  std::size_t rows = 0;
  std::size_t classes = 0;
  std::vector<double> data;  // row-major, rows * classes
  std::vector<SampleId> row_ids;

  const double* row(std::size_t r) const { return data.data() + r * classes; }

  // First violated invariant, or nullopt when valid. Rows must be simplex
  // vectors: entries in [0,1], sum within 1e-6 of 1.
  std::optional<std::string> violation() const;

  bool operator==(const ProbabilityMatrix&) const = default;
};

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // row-major, rows * dim
  std::vector<SampleId> row_ids;

  const double* row(std::size_t r) const { return data.data() + r * dim; }

  std::optional<std::string> violation() const;  // finite entries, shape

  bool operator==(const EmbeddingMatrix&) const = default;
};

enum class Strategy { Random, LC, MC, RC, ES, KMeans, KCG, CoreSet, DBAL };

constexpr std::size_t kStrategyCount = 9;

// Canonical names: Random, LC, MC, RC, ES, KMeans, KCG, CoreSet, DBAL.
const char* strategy_name(Strategy s);

// Accepts canonical names and long-form aliases (LeastConfidence,
// MarginConfidence, RatioConfidence, EntropySampling, KMeansSampling,
// KCenterGreedy, Coreset, DiverseMiniBatch, RandomSampling).
std::optional<Strategy> strategy_from_name(const std::string& name);

// All accepted spellings, for diagnostics.
std::vector<std::string> strategy_aliases();

struct StrategyKind {
  Strategy name = Strategy::Random;
  std::uint32_t beta = 10;  // DBAL prefilter factor; ignored by other strategies

  bool operator==(const StrategyKind&) const = default;
};

struct ALQuery {
  std::string dataset_id;
  StrategyKind strategy;
  std::uint64_t budget = 0;
  std::uint64_t batch_size = 1;
  std::uint64_t seed = 0;
  std::vector<SampleId> labeled_ids;  // excluded from selection

  bool operator==(const ALQuery&) const = default;
};

struct StageStat {
  std::uint64_t items = 0;
  double busy_time = 0.0;  // seconds
  double idle_time = 0.0;  // seconds

  bool operator==(const StageStat&) const = default;
};

struct StageMetrics {
  // Always carries the four keys fetch, preprocess, infer, select.
  std::map<std::string, StageStat> stages;
  double wall_clock = 0.0;
  // total items / wall_clock, where total items is the largest per-stage item
  // count (the pool size in a normal round).
  double throughput = 0.0;
  // Populated only under fetch failure policy "skip".
  std::vector<SampleId> skipped_ids;

  bool operator==(const StageMetrics&) const = default;
};

struct SelectedSample {
  SampleId id = 0;
  std::string uri;
  double score = 0.0;

  bool operator==(const SelectedSample&) const = default;
};

struct ALReport {
  std::string job_id;
  std::string dataset_id;
  StrategyKind strategy;
  std::uint64_t budget = 0;
  std::vector<SelectedSample> selected;  // length == budget; URIs only, never payloads
  StageMetrics timing;
  std::int64_t completed_at = 0;

  bool operator==(const ALReport&) const = default;
};

enum class JobState { queued, running, done, failed, cancelled };

const char* job_state_name(JobState s);
std::optional<JobState> job_state_from_name(const std::string& name);

struct JobRecord {
  std::string job_id;  // 128-bit random id, 32 hex chars
  JobState state = JobState::queued;
  ALQuery query;
  std::optional<ALReport> report;  // present iff state == done
  std::optional<std::string> error;  // present iff state == failed
  // Unix milliseconds; submission stamps are strictly increasing within one
  // registry so recovery preserves queue order.
  std::int64_t submitted_at = 0;
  std::int64_t updated_at = 0;

  bool operator==(const JobRecord&) const = default;
};

struct ValidationError {
  std::string code;  // DuplicateUri | IdPositionMismatch | InvalidUri | BadContentHash
  std::string message;
  std::size_t position = 0;  // index of the offending sample, when applicable
};

// Returns every invariant violation; empty == valid. An empty sample list is
// valid (queries against it are not).
std::vector<ValidationError> validate_manifest(const DatasetManifest& manifest);

// Fresh 128-bit random identifier as 32 lowercase hex chars.
std::string random_hex_id();

// JSON serialization; field names are the snake_case wire names.
void to_json(json& j, const SampleRef& v);
void from_json(const json& j, SampleRef& v);
void to_json(json& j, const DatasetManifest& v);
void from_json(const json& j, DatasetManifest& v);
void to_json(json& j, const ProbabilityMatrix& v);
void from_json(const json& j, ProbabilityMatrix& v);
void to_json(json& j, const EmbeddingMatrix& v);
void from_json(const json& j, EmbeddingMatrix& v);
void to_json(json& j, const StrategyKind& v);
void from_json(const json& j, StrategyKind& v);
void to_json(json& j, const ALQuery& v);
void from_json(const json& j, ALQuery& v);
void to_json(json& j, const StageStat& v);
void from_json(const json& j, StageStat& v);
void to_json(json& j, const StageMetrics& v);
void from_json(const json& j, StageMetrics& v);
void to_json(json& j, const SelectedSample& v);
void from_json(const json& j, SelectedSample& v);
void to_json(json& j, const ALReport& v);
void from_json(const json& j, ALReport& v);
void to_json(json& j, const JobRecord& v);
void from_json(const json& j, JobRecord& v);

}  // namespace alaas::core
