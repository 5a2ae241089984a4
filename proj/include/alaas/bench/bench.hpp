#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alaas/core/types.hpp"

namespace alaas::bench {

// One benchmark sweep: every (mode, batch_size) cell is run `repeats` times
// with the given synthetic stage latencies. Injected latency stands in for
// real network/GPU time, so the reproducible claims are ratios and
// monotonicity, not absolute seconds.
struct BenchScenario {
  std::string name = "scenario";
  std::uint64_t pool_size = 1000;
  std::uint64_t budget = 10;
  std::string strategy = "LC";  // any strategy alias
  std::vector<std::string> modes = {"pipelined", "sequential_whole"};
  std::vector<std::uint64_t> batch_sizes = {16};
  double fetch_latency_ms = 0.0;
  double preprocess_latency_ms = 0.0;
  double infer_latency_ms_per_item = 0.0;
  int repeats = 3;
  std::uint64_t seed = 0;       // cell order + query seed
  std::string backend = "mock";  // mock | remote-stub
  double stub_per_call_ms = 0.0;  // remote-stub request overhead
  double stub_per_item_ms = 0.0;
  int fetch_workers = 4;
  int infer_workers = 2;

  // First violated invariant, or nullopt. repeats >= 3 keeps every reported
  // mean +/- std honest.
  std::optional<std::string> violation() const;

  bool operator==(const BenchScenario&) const = default;
};

struct BenchCell {
  std::string mode;
  std::uint64_t batch_size = 0;
  std::vector<double> latencies_s;  // raw runs, in execution order
  double latency_mean_s = 0.0;
  double latency_std_s = 0.0;     // sample std over repeats
  double throughput_mean = 0.0;   // mean over per-run pool_size / latency
  std::vector<core::SampleId> selected_ids;  // identical across repeats
  bool failed = false;
  std::string error;

  bool operator==(const BenchCell&) const = default;
};

struct BenchResult {
  BenchScenario scenario;
  std::vector<BenchCell> cells;  // (mode major, batch_size minor) order

  bool operator==(const BenchResult&) const = default;
};

void to_json(core::json& j, const BenchScenario& v);
void from_json(const core::json& j, BenchScenario& v);
void to_json(core::json& j, const BenchCell& v);
void from_json(const core::json& j, BenchCell& v);
void to_json(core::json& j, const BenchResult& v);
void from_json(const core::json& j, BenchResult& v);

// Runs the sweep. work_dir holds the synthetic pool files plus the data and
// cache directories; it is created on demand and reused when it already
// matches. Cells run one at a time in a seed-randomized order; a failing
// cell is marked failed and the sweep continues. Every run is checked
// against the strategy computed directly on the same features: a benchmark
// cannot pass while selection is broken.
BenchResult run_scenario(const BenchScenario& scenario, const std::string& work_dir);

// Side-by-side markdown table: one row per (mode, batch_size), latency
// mean+/-std and throughput for result and baseline, plus a throughput ratio
// column. Throws ScenarioMismatch unless both results ran the same scenario
// (name, seed and repeats may differ).
std::string compare_report(const BenchResult& result, const BenchResult& baseline);

void write_json(const BenchResult& result, const std::string& path);
// summary: one row per cell. runs: one row per repeat (gnuplot-ready).
void write_summary_csv(const BenchResult& result, const std::string& path);
void write_runs_csv(const BenchResult& result, const std::string& path);

}  // namespace alaas::bench
