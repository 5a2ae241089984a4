#include "alaas/core/types.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "alaas/core/error.hpp"
#include "alaas/core/rng.hpp"
#include "alaas/core/timeutil.hpp"
#include "alaas/core/uri.hpp"

namespace alaas::core {

namespace {

struct StrategyNames {
  Strategy value;
  const char* canonical;
  const char* alias;  // long form, nullptr when none
};

constexpr StrategyNames kStrategyTable[] = {
    {Strategy::Random, "Random", "RandomSampling"},
    {Strategy::LC, "LC", "LeastConfidence"},
    {Strategy::MC, "MC", "MarginConfidence"},
    {Strategy::RC, "RC", "RatioConfidence"},
    {Strategy::ES, "ES", "EntropySampling"},
    {Strategy::KMeans, "KMeans", "KMeansSampling"},
    {Strategy::KCG, "KCG", "KCenterGreedy"},
    {Strategy::CoreSet, "CoreSet", "Coreset"},
    {Strategy::DBAL, "DBAL", "DiverseMiniBatch"},
};

static_assert(std::size(kStrategyTable) == kStrategyCount);

}  // namespace

const char* strategy_name(Strategy s) {
  for (const auto& e : kStrategyTable) {
    if (e.value == s) return e.canonical;
  }
  return "Random";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
  for (const auto& e : kStrategyTable) {
    if (name == e.canonical || (e.alias && name == e.alias)) return e.value;
  }
  return std::nullopt;
}

std::vector<std::string> strategy_aliases() {
  std::vector<std::string> out;
  for (const auto& e : kStrategyTable) {
    out.emplace_back(e.canonical);
    if (e.alias) out.emplace_back(e.alias);
  }
  return out;
}

const char* job_state_name(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    case JobState::cancelled: return "cancelled";
  }
  return "queued";
}

std::optional<JobState> job_state_from_name(const std::string& name) {
  for (JobState s : {JobState::queued, JobState::running, JobState::done,
                     JobState::failed, JobState::cancelled}) {
    if (name == job_state_name(s)) return s;
  }
  return std::nullopt;
}

std::optional<std::string> ProbabilityMatrix::violation() const {
  if (data.size() != rows * classes) return "data size does not match rows * classes";
  if (row_ids.size() != rows) return "row_ids size does not match rows";
  if (rows > 0 && classes < 2) return "rows present but classes < 2";
  for (std::size_t r = 0; r < rows; ++r) {
    const double* p = row(r);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      if (!std::isfinite(p[c]) || p[c] < 0.0 || p[c] > 1.0) {
        return "row " + std::to_string(r) + " entry outside [0, 1]";
      }
      sum += p[c];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      return "row " + std::to_string(r) + " sums to " + std::to_string(sum);
    }
  }
  return std::nullopt;
}

std::optional<std::string> EmbeddingMatrix::violation() const {
  if (data.size() != rows * dim) return "data size does not match rows * dim";
  if (row_ids.size() != rows) return "row_ids size does not match rows";
  if (rows > 0 && dim == 0) return "rows present but dim == 0";
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      return "non-finite entry at index " + std::to_string(i);
    }
  }
  return std::nullopt;
}

namespace {

bool is_hex_hash(const std::string& h) {
  if (h.size() != 64) return false;
  for (char c : h) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

std::vector<ValidationError> validate_manifest(const DatasetManifest& manifest) {
  std::vector<ValidationError> errors;
  std::unordered_map<std::string, std::size_t> seen_uris;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const SampleRef& s = manifest.samples[i];
    if (s.id != i) {
      errors.push_back({"IdPositionMismatch",
                        "sample at position " + std::to_string(i) + " has id " +
                            std::to_string(s.id),
                        i});
    }
    if (!is_valid_uri(s.uri)) {
      errors.push_back({"InvalidUri", "unparsable or unsupported uri: " + s.uri, i});
    }
    auto [it, inserted] = seen_uris.emplace(s.uri, i);
    if (!inserted) {
      errors.push_back({"DuplicateUri",
                        "uri at position " + std::to_string(i) +
                            " repeats position " + std::to_string(it->second),
                        i});
    }
    if (s.content_hash && !is_hex_hash(*s.content_hash)) {
      errors.push_back({"BadContentHash",
                        "content_hash must be 64 lowercase hex chars", i});
    }
  }
  return errors;
}

std::string random_hex_id() {
  static const rng::Block key = [] {
    std::random_device rd;
    auto wide = [&] { return (std::uint64_t(rd()) << 32) | rd(); };
    return rng::Block{wide(), wide(), wide(), wide()};
  }();
  static std::atomic<std::uint64_t> counter{0};
  rng::Block out =
      rng::philox4x64({counter.fetch_add(1), key[2], key[3], 0}, key[0], key[1]);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(out[0]),
                static_cast<unsigned long long>(out[1]));
  return buf;
}

void to_json(json& j, const SampleRef& v) {
  j = json{{"id", v.id}, {"uri", v.uri}};
  if (v.content_hash) {
    j["content_hash"] = *v.content_hash;
  } else {
    j["content_hash"] = nullptr;
  }
}

void from_json(const json& j, SampleRef& v) {
  j.at("id").get_to(v.id);
  j.at("uri").get_to(v.uri);
  v.content_hash.reset();
  if (auto it = j.find("content_hash"); it != j.end() && !it->is_null()) {
    v.content_hash = it->get<std::string>();
  }
}

void to_json(json& j, const DatasetManifest& v) {
  j = json{{"dataset_id", v.dataset_id},
           {"name", v.name},
           {"owner", v.owner},
           {"created_at", format_utc(v.created_at)},
           {"samples", v.samples}};
}

void from_json(const json& j, DatasetManifest& v) {
  j.at("dataset_id").get_to(v.dataset_id);
  j.at("name").get_to(v.name);
  j.at("owner").get_to(v.owner);
  v.created_at = parse_utc(j.at("created_at").get<std::string>());
  j.at("samples").get_to(v.samples);
}

void to_json(json& j, const ProbabilityMatrix& v) {
  j = json{{"rows", v.rows}, {"classes", v.classes}, {"data", v.data},
           {"row_ids", v.row_ids}};
}

void from_json(const json& j, ProbabilityMatrix& v) {
  j.at("rows").get_to(v.rows);
  j.at("classes").get_to(v.classes);
  j.at("data").get_to(v.data);
  j.at("row_ids").get_to(v.row_ids);
}

void to_json(json& j, const EmbeddingMatrix& v) {
  j = json{{"rows", v.rows}, {"dim", v.dim}, {"data", v.data},
           {"row_ids", v.row_ids}};
}

void from_json(const json& j, EmbeddingMatrix& v) {
  j.at("rows").get_to(v.rows);
  j.at("dim").get_to(v.dim);
  j.at("data").get_to(v.data);
  j.at("row_ids").get_to(v.row_ids);
}

void to_json(json& j, const StrategyKind& v) {
  j = json{{"name", strategy_name(v.name)}, {"beta", v.beta}};
}

void from_json(const json& j, StrategyKind& v) {
  auto name = j.at("name").get<std::string>();
  auto s = strategy_from_name(name);
  if (!s) throw Error(ErrorCode::InvalidValue, "unknown strategy: " + name);
  v.name = *s;
  v.beta = 10;
  if (auto it = j.find("beta"); it != j.end() && !it->is_null()) {
    it->get_to(v.beta);
  }
}

void to_json(json& j, const ALQuery& v) {
  j = json{{"dataset_id", v.dataset_id}, {"strategy", v.strategy},
           {"budget", v.budget},         {"batch_size", v.batch_size},
           {"seed", v.seed},             {"labeled_ids", v.labeled_ids}};
}

void from_json(const json& j, ALQuery& v) {
  j.at("dataset_id").get_to(v.dataset_id);
  j.at("strategy").get_to(v.strategy);
  j.at("budget").get_to(v.budget);
  v.batch_size = 1;
  if (auto it = j.find("batch_size"); it != j.end() && !it->is_null()) {
    it->get_to(v.batch_size);
  }
  v.seed = 0;
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    it->get_to(v.seed);
  }
  v.labeled_ids.clear();
  if (auto it = j.find("labeled_ids"); it != j.end() && !it->is_null()) {
    it->get_to(v.labeled_ids);
  }
}

void to_json(json& j, const StageStat& v) {
  j = json{{"items", v.items}, {"busy_time", v.busy_time},
           {"idle_time", v.idle_time}};
}

void from_json(const json& j, StageStat& v) {
  j.at("items").get_to(v.items);
  j.at("busy_time").get_to(v.busy_time);
  j.at("idle_time").get_to(v.idle_time);
}

void to_json(json& j, const StageMetrics& v) {
  j = json{{"stages", v.stages},
           {"wall_clock", v.wall_clock},
           {"throughput", v.throughput},
           {"skipped_ids", v.skipped_ids}};
}

void from_json(const json& j, StageMetrics& v) {
  j.at("stages").get_to(v.stages);
  j.at("wall_clock").get_to(v.wall_clock);
  j.at("throughput").get_to(v.throughput);
  v.skipped_ids.clear();
  if (auto it = j.find("skipped_ids"); it != j.end() && !it->is_null()) {
    it->get_to(v.skipped_ids);
  }
}

void to_json(json& j, const SelectedSample& v) {
  j = json{{"id", v.id}, {"uri", v.uri}, {"score", v.score}};
}

void from_json(const json& j, SelectedSample& v) {
  j.at("id").get_to(v.id);
  j.at("uri").get_to(v.uri);
  j.at("score").get_to(v.score);
}

void to_json(json& j, const ALReport& v) {
  j = json{{"job_id", v.job_id},
           {"dataset_id", v.dataset_id},
           {"strategy", v.strategy},
           {"budget", v.budget},
           {"selected", v.selected},
           {"timing", v.timing},
           {"completed_at", format_utc(v.completed_at)}};
}

void from_json(const json& j, ALReport& v) {
  j.at("job_id").get_to(v.job_id);
  j.at("dataset_id").get_to(v.dataset_id);
  j.at("strategy").get_to(v.strategy);
  j.at("budget").get_to(v.budget);
  j.at("selected").get_to(v.selected);
  j.at("timing").get_to(v.timing);
  v.completed_at = parse_utc(j.at("completed_at").get<std::string>());
}

void to_json(json& j, const JobRecord& v) {
  j = json{{"job_id", v.job_id},
           {"state", job_state_name(v.state)},
           {"query", v.query},
           {"submitted_at", v.submitted_at},
           {"updated_at", v.updated_at}};
  j["report"] = v.report ? json(*v.report) : json(nullptr);
  j["error"] = v.error ? json(*v.error) : json(nullptr);
}

void from_json(const json& j, JobRecord& v) {
  j.at("job_id").get_to(v.job_id);
  auto state = job_state_from_name(j.at("state").get<std::string>());
  if (!state) {
    throw Error(ErrorCode::InvalidValue,
                "unknown job state: " + j.at("state").get<std::string>());
  }
  v.state = *state;
  j.at("query").get_to(v.query);
  j.at("submitted_at").get_to(v.submitted_at);
  j.at("updated_at").get_to(v.updated_at);
  v.report.reset();
  if (auto it = j.find("report"); it != j.end() && !it->is_null()) {
    v.report = it->get<ALReport>();
  }
  v.error.reset();
  if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
    v.error = it->get<std::string>();
  }
}

}  // namespace alaas::core
