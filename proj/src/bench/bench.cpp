#include "alaas/bench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/rng.hpp"
#include "alaas/data/manager.hpp"
#include "alaas/infer/engine.hpp"
#include "alaas/infer/stub_server.hpp"
#include "alaas/pipeline/pipeline.hpp"
#include "alaas/strategy/strategies.hpp"

namespace alaas::bench {

using core::Error;
using core::ErrorCode;
using core::json;

std::optional<std::string> BenchScenario::violation() const {
  if (pool_size == 0) return "pool_size must be positive";
  if (budget == 0) return "budget must be positive";
  if (budget > pool_size) return "budget exceeds pool_size";
  if (!core::strategy_from_name(strategy)) return "unknown strategy: " + strategy;
  if (modes.empty()) return "modes must not be empty";
  for (const auto& m : modes) {
    if (!pipeline::pipeline_mode_from_name(m)) return "unknown mode: " + m;
  }
  if (batch_sizes.empty()) return "batch_sizes must not be empty";
  for (auto bs : batch_sizes) {
    if (bs == 0) return "batch_sizes entries must be positive";
  }
  if (repeats < 3) return "repeats must be at least 3 for mean/std reporting";
  if (backend != "mock" && backend != "remote-stub") {
    return "backend must be mock or remote-stub";
  }
  if (fetch_latency_ms < 0 || preprocess_latency_ms < 0 ||
      infer_latency_ms_per_item < 0 || stub_per_call_ms < 0 || stub_per_item_ms < 0) {
    return "latencies must be non-negative";
  }
  if (fetch_workers < 1 || infer_workers < 1) return "workers must be positive";
  return std::nullopt;
}

void to_json(json& j, const BenchScenario& v) {
  j = json{{"name", v.name},
           {"pool_size", v.pool_size},
           {"budget", v.budget},
           {"strategy", v.strategy},
           {"modes", v.modes},
           {"batch_sizes", v.batch_sizes},
           {"fetch_latency_ms", v.fetch_latency_ms},
           {"preprocess_latency_ms", v.preprocess_latency_ms},
           {"infer_latency_ms_per_item", v.infer_latency_ms_per_item},
           {"repeats", v.repeats},
           {"seed", v.seed},
           {"backend", v.backend},
           {"stub_per_call_ms", v.stub_per_call_ms},
           {"stub_per_item_ms", v.stub_per_item_ms},
           {"fetch_workers", v.fetch_workers},
           {"infer_workers", v.infer_workers}};
}

void from_json(const json& j, BenchScenario& v) {
  v = BenchScenario{};
  v.name = j.value("name", v.name);
  v.pool_size = j.value("pool_size", v.pool_size);
  v.budget = j.value("budget", v.budget);
  v.strategy = j.value("strategy", v.strategy);
  v.modes = j.value("modes", v.modes);
  v.batch_sizes = j.value("batch_sizes", v.batch_sizes);
  v.fetch_latency_ms = j.value("fetch_latency_ms", v.fetch_latency_ms);
  v.preprocess_latency_ms = j.value("preprocess_latency_ms", v.preprocess_latency_ms);
  v.infer_latency_ms_per_item =
      j.value("infer_latency_ms_per_item", v.infer_latency_ms_per_item);
  v.repeats = j.value("repeats", v.repeats);
  v.seed = j.value("seed", v.seed);
  v.backend = j.value("backend", v.backend);
  v.stub_per_call_ms = j.value("stub_per_call_ms", v.stub_per_call_ms);
  v.stub_per_item_ms = j.value("stub_per_item_ms", v.stub_per_item_ms);
  v.fetch_workers = j.value("fetch_workers", v.fetch_workers);
  v.infer_workers = j.value("infer_workers", v.infer_workers);
}

void to_json(json& j, const BenchCell& v) {
  j = json{{"mode", v.mode},
           {"batch_size", v.batch_size},
           {"latencies_s", v.latencies_s},
           {"latency_mean_s", v.latency_mean_s},
           {"latency_std_s", v.latency_std_s},
           {"throughput_mean", v.throughput_mean},
           {"selected_ids", v.selected_ids},
           {"failed", v.failed},
           {"error", v.error}};
}

void from_json(const json& j, BenchCell& v) {
  v = BenchCell{};
  j.at("mode").get_to(v.mode);
  j.at("batch_size").get_to(v.batch_size);
  v.latencies_s = j.value("latencies_s", v.latencies_s);
  v.latency_mean_s = j.value("latency_mean_s", v.latency_mean_s);
  v.latency_std_s = j.value("latency_std_s", v.latency_std_s);
  v.throughput_mean = j.value("throughput_mean", v.throughput_mean);
  v.selected_ids = j.value("selected_ids", v.selected_ids);
  v.failed = j.value("failed", v.failed);
  v.error = j.value("error", v.error);
}

void to_json(json& j, const BenchResult& v) {
  j = json{{"scenario", v.scenario}, {"cells", v.cells}};
}

void from_json(const json& j, BenchResult& v) {
  j.at("scenario").get_to(v.scenario);
  j.at("cells").get_to(v.cells);
}

namespace {

namespace fs = std::filesystem;

// Synthetic pool: pool_size files of 128 deterministic pseudorandom bytes.
// pool.json records (n, seed) so an unchanged pool is reused across sweeps.
std::vector<std::string> make_pool(const fs::path& pool_dir, std::uint64_t n,
                                   std::uint64_t seed) {
  const json stamp{{"n", n}, {"seed", seed}, {"bytes_per_file", 128}};
  const fs::path stamp_path = pool_dir / "pool.json";
  bool reuse = false;
  if (auto text = core::read_file(stamp_path)) {
    try {
      reuse = json::parse(*text) == stamp;
    } catch (...) {
      reuse = false;
    }
  }
  std::vector<std::string> uris;
  uris.reserve(n);
  char name[32];
  for (std::uint64_t i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "sample_%08llu.bin",
                  static_cast<unsigned long long>(i));
    const fs::path file = pool_dir / name;
    if (!reuse) {
      std::string bytes(128, '\0');
      for (std::uint64_t blk = 0; blk < 4; ++blk) {
        // counter[2] = 1 tags the pool-content substream of kStreamBench.
        rng::Block out = rng::philox4x64({i, blk, 1, 0}, seed, rng::kStreamBench);
        std::memcpy(bytes.data() + blk * 32, out.data(), 32);
      }
      core::write_file_atomic(file, bytes);
    }
    uris.push_back("file://" + fs::absolute(file).string());
  }
  if (!reuse) core::write_file_atomic(stamp_path, stamp.dump());
  return uris;
}

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats sample_stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

// The strategy computed directly on the same features the pipeline sees;
// the gold answer every cell is compared against.
strategy::Selection direct_selection(data::DataManager& dm,
                                     const std::string& dataset_id,
                                     const BenchScenario& scn,
                                     const infer::BackendSpec& backend) {
  infer::BackendSpec mock = backend;
  mock.kind = infer::BackendKind::mock;
  mock.endpoint.reset();
  infer::Engine engine(mock);

  const std::uint64_t n = scn.pool_size;
  core::ProbabilityMatrix probs;
  probs.classes = mock.classes;
  core::EmbeddingMatrix embeds;
  embeds.dim = mock.embed_dim;
  std::vector<infer::FeatureVector> chunk;
  chunk.reserve(256);
  auto flush = [&] {
    if (chunk.empty()) return;
    auto [p, e] = engine.infer_batch(chunk);
    probs.rows += p.rows;
    probs.row_ids.insert(probs.row_ids.end(), p.row_ids.begin(), p.row_ids.end());
    probs.data.insert(probs.data.end(), p.data.begin(), p.data.end());
    embeds.rows += e.rows;
    embeds.row_ids.insert(embeds.row_ids.end(), e.row_ids.begin(), e.row_ids.end());
    embeds.data.insert(embeds.data.end(), e.data.begin(), e.data.end());
    chunk.clear();
  };
  for (std::uint64_t id = 0; id < n; ++id) {
    auto fr = dm.fetch(dataset_id, id);
    chunk.push_back({id, pipeline::byte_histogram(fr.bytes)});
    if (chunk.size() == 256) flush();
  }
  flush();

  strategy::StrategyInput input;
  input.probs = &probs;
  input.embeds = &embeds;
  input.budget = scn.budget;
  input.seed = scn.seed;
  return strategy::run_strategy(core::StrategyKind{*core::strategy_from_name(scn.strategy)},
                                input);
}

}  // namespace

BenchResult run_scenario(const BenchScenario& scenario, const std::string& work_dir) {
  if (auto v = scenario.violation()) {
    throw Error(ErrorCode::InvalidValue, "scenario: " + *v);
  }
  const fs::path work(work_dir);
  fs::create_directories(work / "pool");
  // Data and cache are throwaway per sweep so counters and cache state start
  // from zero; the pool is content-stable and reused.
  fs::remove_all(work / "data");
  fs::remove_all(work / "cache");

  auto uris = make_pool(work / "pool", scenario.pool_size, scenario.seed);

  data::DataConfig dcfg;
  dcfg.data_dir = (work / "data").string();
  dcfg.cache_dir = (work / "cache").string();
  data::DataManager dm(dcfg);
  const std::string dataset_id = dm.ingest(uris, scenario.name, "bench").dataset_id;

  infer::BackendSpec backend;  // mock defaults: m1, 10 classes, 8 dims
  std::unique_ptr<infer::StubServer> stub;
  if (scenario.backend == "remote-stub") {
    stub = std::make_unique<infer::StubServer>(backend.classes, backend.embed_dim);
    stub->set_latency(scenario.stub_per_call_ms, scenario.stub_per_item_ms);
    stub->start();
    backend.kind = infer::BackendKind::remote;
    backend.endpoint = stub->endpoint();
  }
  infer::Engine engine(backend);

  // Warm the payload cache so every cell sees identical fetch conditions
  // (sequential_rounds bypasses it by design).
  for (std::uint64_t id = 0; id < scenario.pool_size; ++id) {
    dm.fetch(dataset_id, id);
  }

  const strategy::Selection expected = direct_selection(dm, dataset_id, scenario, backend);

  BenchResult result;
  result.scenario = scenario;
  for (const auto& mode : scenario.modes) {
    for (auto bs : scenario.batch_sizes) {
      BenchCell cell;
      cell.mode = mode;
      cell.batch_size = bs;
      result.cells.push_back(std::move(cell));
    }
  }

  // One entry per (cell, repeat), shuffled so cell order cannot systematically
  // favor a mode (thermal/ordering fairness).
  std::vector<std::size_t> runs;
  runs.reserve(result.cells.size() * static_cast<std::size_t>(scenario.repeats));
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (int r = 0; r < scenario.repeats; ++r) runs.push_back(c);
  }
  rng::Philox order(scenario.seed, rng::kStreamBench);
  for (std::size_t i = runs.size(); i > 1; --i) {
    std::swap(runs[i - 1], runs[order.next_below(i)]);
  }

  for (std::size_t c : runs) {
    BenchCell& cell = result.cells[c];
    if (cell.failed) continue;

    pipeline::PipelineSpec pspec;
    pspec.mode = *pipeline::pipeline_mode_from_name(cell.mode);
    pspec.fetch_workers = scenario.fetch_workers;
    pspec.infer_workers = scenario.infer_workers;
    pspec.batch.max_batch = cell.batch_size;
    pspec.use_inference_cache = false;  // a measured cell must actually infer
    pspec.inject_fetch_ms = scenario.fetch_latency_ms;
    pspec.inject_preprocess_ms = scenario.preprocess_latency_ms;
    pspec.inject_infer_ms_per_item = scenario.infer_latency_ms_per_item;

    core::ALQuery query;
    query.dataset_id = dataset_id;
    query.strategy = core::StrategyKind{*core::strategy_from_name(scenario.strategy)};
    query.budget = scenario.budget;
    query.batch_size = cell.batch_size;
    query.seed = scenario.seed;

    try {
      auto rr = pipeline::run_round(dm, query, pspec, engine);
      std::vector<core::SampleId> ids;
      ids.reserve(rr.report.selected.size());
      for (const auto& s : rr.report.selected) ids.push_back(s.id);
      if (ids != expected.ids) {
        cell.failed = true;
        cell.error = "selection mismatch vs direct strategy result";
        continue;
      }
      if (cell.selected_ids.empty()) {
        cell.selected_ids = ids;
      } else if (cell.selected_ids != ids) {
        cell.failed = true;
        cell.error = "selection differs across repeats";
        continue;
      }
      cell.latencies_s.push_back(rr.report.timing.wall_clock);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  }

  for (BenchCell& cell : result.cells) {
    if (cell.failed || cell.latencies_s.empty()) continue;
    const Stats lat = sample_stats(cell.latencies_s);
    cell.latency_mean_s = lat.mean;
    cell.latency_std_s = lat.stddev;
    std::vector<double> tputs;
    tputs.reserve(cell.latencies_s.size());
    for (double l : cell.latencies_s) {
      tputs.push_back(static_cast<double>(scenario.pool_size) / l);
    }
    cell.throughput_mean = sample_stats(tputs).mean;
  }
  return result;
}

std::string compare_report(const BenchResult& result, const BenchResult& baseline) {
  // Identity of the experiment, not of the run: name, seed and repeats may
  // differ between the two results.
  auto key = [](BenchScenario s) {
    s.name.clear();
    s.seed = 0;
    s.repeats = 0;
    return s;
  };
  if (key(result.scenario) != key(baseline.scenario)) {
    throw Error(ErrorCode::ScenarioMismatch,
                "results come from different scenarios");
  }
  auto find_cell = [](const BenchResult& r, const std::string& mode,
                      std::uint64_t bs) -> const BenchCell* {
    for (const auto& c : r.cells) {
      if (c.mode == mode && c.batch_size == bs) return &c;
    }
    return nullptr;
  };

  std::ostringstream out;
  out << "| mode | batch | latency (s) | baseline latency (s) | throughput /s | "
         "baseline /s | ratio |\n";
  out << "|---|---:|---:|---:|---:|---:|---:|\n";
  char buf[256];
  for (const auto& cell : result.cells) {
    const BenchCell* base = find_cell(baseline, cell.mode, cell.batch_size);
    if (!base) {
      throw Error(ErrorCode::ScenarioMismatch,
                  "baseline lacks cell " + cell.mode + "/" +
                      std::to_string(cell.batch_size));
    }
    if (cell.failed || base->failed) {
      std::snprintf(buf, sizeof(buf), "| %s | %llu | failed | failed | - | - | - |\n",
                    cell.mode.c_str(),
                    static_cast<unsigned long long>(cell.batch_size));
      out << buf;
      continue;
    }
    const double ratio = base->throughput_mean > 0.0
                             ? cell.throughput_mean / base->throughput_mean
                             : 0.0;
    std::snprintf(buf, sizeof(buf),
                  "| %s | %llu | %.3f ± %.3f | %.3f ± %.3f | %.2f | %.2f | %.2f |\n",
                  cell.mode.c_str(),
                  static_cast<unsigned long long>(cell.batch_size),
                  cell.latency_mean_s, cell.latency_std_s, base->latency_mean_s,
                  base->latency_std_s, cell.throughput_mean, base->throughput_mean,
                  ratio);
    out << buf;
  }
  return out.str();
}

void write_json(const BenchResult& result, const std::string& path) {
  core::write_file_atomic(path, json(result).dump(2) + "\n");
}

void write_summary_csv(const BenchResult& result, const std::string& path) {
  std::ostringstream out;
  out << "name,mode,batch_size,repeats,latency_mean_s,latency_std_s,"
         "throughput_mean,failed,error\n";
  for (const auto& c : result.cells) {
    out << result.scenario.name << ',' << c.mode << ',' << c.batch_size << ','
        << c.latencies_s.size() << ',' << c.latency_mean_s << ','
        << c.latency_std_s << ',' << c.throughput_mean << ','
        << (c.failed ? 1 : 0) << ',' << '"' << c.error << '"' << '\n';
  }
  core::write_file_atomic(path, out.str());
}

void write_runs_csv(const BenchResult& result, const std::string& path) {
  std::ostringstream out;
  out << "name,mode,batch_size,repeat,latency_s,throughput\n";
  for (const auto& c : result.cells) {
    for (std::size_t r = 0; r < c.latencies_s.size(); ++r) {
      out << result.scenario.name << ',' << c.mode << ',' << c.batch_size << ','
          << r << ',' << c.latencies_s[r] << ','
          << static_cast<double>(result.scenario.pool_size) / c.latencies_s[r]
          << '\n';
    }
  }
  core::write_file_atomic(path, out.str());
}

}  // namespace alaas::bench
