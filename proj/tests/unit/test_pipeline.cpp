#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/uri.hpp"
#include "alaas/pipeline/pipeline.hpp"
#include "alaas/strategy/strategies.hpp"
#include "../support/temp_dir.hpp"

using namespace alaas;
using namespace alaas::pipeline;
using core::SampleId;
using testsupport::TempDir;

TEST_SUITE_BEGIN("pipeline");

namespace {

// A dataset rig: n origin files with varied byte content, ingested once.
struct Rig {
  explicit Rig(std::size_t n, std::vector<std::size_t> broken = {}) {
    data::DataConfig cfg;
    cfg.data_dir = dir.sub("data").string();
    cfg.cache_dir = dir.sub("cache").string();
    dm = std::make_unique<data::DataManager>(cfg);

    std::set<std::size_t> bad(broken.begin(), broken.end());
    std::vector<std::string> uris;
    for (std::size_t i = 0; i < n; ++i) {
      if (bad.count(i)) {
        uris.push_back("file:///nonexistent/gap-" + std::to_string(i) + ".bin");
        continue;
      }
      std::filesystem::path p = dir.sub("origin") / ("s" + std::to_string(i));
      std::string body(17 + (i * 7) % 64, char('a' + i % 23));
      body += std::to_string(i * i);
      core::write_file_atomic(p.string(), body);
      uris.push_back(core::path_to_file_uri(p.string()));
    }
    manifest = dm->ingest(uris, "rig", "tests");
  }

  core::ALQuery query(const char* strategy, std::uint64_t budget,
                      std::uint64_t batch_size = 4) const {
    core::ALQuery q;
    q.dataset_id = manifest.dataset_id;
    q.strategy = {*core::strategy_from_name(strategy), 10};
    q.budget = budget;
    q.batch_size = batch_size;
    q.seed = 7;
    return q;
  }

  TempDir dir;
  std::unique_ptr<data::DataManager> dm;
  core::DatasetManifest manifest;
};

infer::BackendSpec small_backend() {
  infer::BackendSpec spec;
  spec.classes = 6;
  spec.embed_dim = 4;
  return spec;
}

PipelineSpec fast_spec(PipelineMode mode = PipelineMode::pipelined) {
  PipelineSpec spec;
  spec.mode = mode;
  spec.use_inference_cache = false;
  return spec;
}

std::vector<SampleId> selected_ids(const RunResult& r) {
  std::vector<SampleId> ids;
  for (const auto& s : r.report.selected) ids.push_back(s.id);
  return ids;
}

std::vector<double> selected_scores(const RunResult& r) {
  std::vector<double> scores;
  for (const auto& s : r.report.selected) scores.push_back(s.score);
  return scores;
}

std::size_t count_stage(const RunResult& r, const std::string& stage) {
  std::size_t n = 0;
  for (const auto& e : r.events) n += e.stage == stage;
  return n;
}

}  // namespace

TEST_CASE("selection is independent of the scheduling mode") {
  Rig rig(30);
  infer::Engine engine(small_backend());

  for (const char* strategy : {"LC", "ES", "KCG"}) {
    CAPTURE(strategy);
    auto q = rig.query(strategy, 6);
    if (std::string(strategy) == "KCG") q.labeled_ids = {2, 11};

    auto pipelined = run_round(*rig.dm, q, fast_spec(PipelineMode::pipelined), engine);
    auto whole = run_round(*rig.dm, q, fast_spec(PipelineMode::sequential_whole), engine);
    auto rounds = run_round(*rig.dm, q, fast_spec(PipelineMode::sequential_rounds), engine);

    CHECK(selected_ids(pipelined) == selected_ids(whole));
    CHECK(selected_ids(pipelined) == selected_ids(rounds));
    CHECK(selected_scores(pipelined) == selected_scores(whole));
    CHECK(selected_scores(pipelined) == selected_scores(rounds));
  }
}

TEST_CASE("batch size is invisible in the selection") {
  Rig rig(25);
  infer::Engine engine(small_backend());
  auto base = run_round(*rig.dm, rig.query("MC", 5, 1), fast_spec(), engine);
  for (std::uint64_t bs : {2, 7, 16}) {
    auto r = run_round(*rig.dm, rig.query("MC", 5, bs), fast_spec(), engine);
    CHECK(selected_ids(r) == selected_ids(base));
    CHECK(selected_scores(r) == selected_scores(base));
  }
}

TEST_CASE("selection matches the strategy run directly on the same rows") {
  Rig rig(20);
  infer::Engine engine(small_backend());

  // Direct path: fetch and featurize in id order, one oversized batch.
  std::vector<infer::FeatureVector> batch;
  for (SampleId id = 0; id < 20; ++id) {
    auto fr = rig.dm->fetch(rig.manifest.dataset_id, id);
    batch.push_back({id, byte_histogram(fr.bytes)});
  }
  auto [probs, embeds] = engine.infer_batch(batch);

  SUBCASE("uncertainty strategy") {
    auto direct =
        strategy::select_top_b(strategy::score_lc(probs), probs.row_ids, 4);
    auto r = run_round(*rig.dm, rig.query("LC", 4), fast_spec(), engine);
    CHECK(selected_ids(r) == direct.ids);
    CHECK(selected_scores(r) == direct.scores);
  }
  SUBCASE("geometry strategy with labeled rows") {
    std::vector<SampleId> labeled = {0, 5};
    core::EmbeddingMatrix pool, lab;
    pool.dim = lab.dim = embeds.dim;
    for (std::size_t r = 0; r < embeds.rows; ++r) {
      auto& dst = (r == 0 || r == 5) ? lab : pool;
      dst.rows += 1;
      dst.row_ids.push_back(embeds.row_ids[r]);
      dst.data.insert(dst.data.end(), embeds.row(r), embeds.row(r) + embeds.dim);
    }
    auto direct = strategy::select_kcenter_greedy(pool, lab, 4);
    auto q = rig.query("KCG", 4);
    q.labeled_ids = labeled;
    auto r = run_round(*rig.dm, q, fast_spec(), engine);
    CHECK(selected_ids(r) == direct.ids);
    CHECK(selected_scores(r) == direct.scores);
    for (SampleId id : selected_ids(r)) {
      CHECK(std::find(labeled.begin(), labeled.end(), id) == labeled.end());
    }
  }
}

TEST_CASE("report carries query facts and manifest uris") {
  Rig rig(12);
  infer::Engine engine(small_backend());
  auto q = rig.query("ES", 3);
  auto r = run_round(*rig.dm, q, fast_spec(), engine);

  CHECK(r.report.dataset_id == q.dataset_id);
  CHECK(r.report.strategy == q.strategy);
  CHECK(r.report.budget == 3);
  CHECK(r.report.completed_at > 0);
  REQUIRE(r.report.selected.size() == 3);
  for (const auto& s : r.report.selected) {
    CHECK(s.uri == rig.manifest.samples[s.id].uri);
    CHECK(s.uri.rfind("file://", 0) == 0);  // URIs only, never payload bytes
  }
  // Scores arrive sorted for the top-B family.
  auto scores = selected_scores(r);
  CHECK(std::is_sorted(scores.rbegin(), scores.rend()));

  const auto& st = r.report.timing.stages;
  REQUIRE(st.size() == 4);
  for (const char* stage : {"fetch", "preprocess", "infer", "select"}) {
    REQUIRE(st.count(stage) == 1);
  }
  CHECK(st.at("fetch").items == 12);
  CHECK(st.at("preprocess").items == 12);
  CHECK(st.at("infer").items == 12);
  CHECK(st.at("select").items == 3);
  CHECK(r.report.timing.wall_clock > 0.0);
  CHECK(r.report.timing.throughput > 0.0);
  CHECK(r.report.timing.skipped_ids.empty());
}

TEST_CASE("a capacity-one queue still drains") {
  Rig rig(25);
  infer::Engine engine(small_backend());
  PipelineSpec spec = fast_spec();
  spec.queue_capacity = 1;
  auto r = run_round(*rig.dm, rig.query("LC", 5, 8), spec, engine);
  CHECK(r.report.selected.size() == 5);
  CHECK(count_stage(r, "infer") == 25);
}

TEST_CASE("pipelined stages overlap; sequential phases never do") {
  Rig rig(40);
  infer::Engine engine(small_backend());
  PipelineSpec spec = fast_spec();
  spec.inject_fetch_ms = 2.0;
  spec.inject_preprocess_ms = 0.5;
  spec.inject_infer_ms_per_item = 1.0;

  auto bounds = [](const RunResult& r, const std::string& stage) {
    double lo = 1e18, hi = -1e18;
    for (const auto& e : r.events) {
      if (e.stage != stage) continue;
      lo = std::min(lo, e.start);
      hi = std::max(hi, e.end);
    }
    return std::pair{lo, hi};
  };

  auto piped = run_round(*rig.dm, rig.query("LC", 5), spec, engine);
  auto [pf_lo, pf_hi] = bounds(piped, "fetch");
  auto [pi_lo, pi_hi] = bounds(piped, "infer");
  CHECK(pi_lo < pf_hi);  // inference began while fetches were still running

  spec.mode = PipelineMode::sequential_whole;
  auto seq = run_round(*rig.dm, rig.query("LC", 5), spec, engine);
  auto [sf_lo, sf_hi] = bounds(seq, "fetch");
  auto [sp_lo, sp_hi] = bounds(seq, "preprocess");
  auto [si_lo, si_hi] = bounds(seq, "infer");
  CHECK(sp_lo >= sf_hi);  // hard phase barriers
  CHECK(si_lo >= sp_hi);
}

TEST_CASE("compute_metrics arithmetic") {
  std::vector<StageEvent> events = {
      {"fetch", 0, 0.0, 1.0},
      {"fetch", 1, 0.5, 1.5},
      {"fetch", 2, 1.0, 2.0},
      {"preprocess", 0, 0.25, 0.5},
  };
  auto m = compute_metrics(events, 2.0, {{"fetch", 2}, {"preprocess", 1},
                                         {"infer", 2}, {"select", 1}},
                           {9, 11});
  REQUIRE(m.stages.size() == 4);
  CHECK(m.stages.at("fetch").items == 3);
  CHECK(m.stages.at("fetch").busy_time == doctest::Approx(1.5));
  CHECK(m.stages.at("fetch").idle_time == doctest::Approx(0.5));
  CHECK(m.stages.at("preprocess").busy_time == doctest::Approx(0.25));
  CHECK(m.stages.at("infer").items == 0);
  CHECK(m.stages.at("infer").busy_time == 0.0);
  CHECK(m.stages.at("infer").idle_time == doctest::Approx(2.0));
  CHECK(m.wall_clock == 2.0);
  CHECK(m.throughput == doctest::Approx(1.5));  // 3 items / 2 s
  CHECK(m.skipped_ids == std::vector<SampleId>{9, 11});

  CHECK(compute_metrics({}, 0.0, {}).throughput == 0.0);
}

TEST_CASE("busy time equals injected work divided by workers") {
  Rig rig(16);
  infer::Engine engine(small_backend());
  PipelineSpec spec = fast_spec();
  spec.fetch_workers = 2;
  spec.inject_fetch_ms = 5.0;
  auto r = run_round(*rig.dm, rig.query("LC", 2), spec, engine);
  // 16 fetches of >= 5ms each over 2 workers >= 40ms of busy time.
  CHECK(r.report.timing.stages.at("fetch").busy_time >= 0.040);
  CHECK(r.report.timing.stages.at("fetch").busy_time <=
        r.report.timing.wall_clock + 1e-9);
}

TEST_CASE("cancellation aborts the round") {
  Rig rig(40);
  infer::Engine engine(small_backend());

  SUBCASE("already-cancelled token") {
    for (PipelineMode mode :
         {PipelineMode::pipelined, PipelineMode::sequential_whole}) {
      CancelToken ct;
      ct.cancel();
      try {
        run_round(*rig.dm, rig.query("LC", 5), fast_spec(mode), engine, &ct);
        FAIL("expected Cancelled");
      } catch (const core::Error& e) {
        CHECK(e.code() == core::ErrorCode::Cancelled);
      }
    }
  }
  SUBCASE("cancel mid-flight") {
    PipelineSpec spec = fast_spec();
    spec.inject_fetch_ms = 4.0;
    spec.fetch_workers = 2;
    CancelToken ct;
    std::thread killer([&] {
      std::this_thread::sleep_for(std::chrono::milliseconds(15));
      ct.cancel();
    });
    try {
      run_round(*rig.dm, rig.query("LC", 5), spec, engine, &ct);
      FAIL("expected Cancelled");
    } catch (const core::Error& e) {
      CHECK(e.code() == core::ErrorCode::Cancelled);
    }
    killer.join();
  }
}

TEST_CASE("fetch failure policy: skip records, abort throws") {
  Rig rig(12, {3, 7});
  infer::Engine engine(small_backend());

  SUBCASE("skip") {
    PipelineSpec spec = fast_spec();
    spec.on_fetch_failure = FailurePolicy::skip;
    auto r = run_round(*rig.dm, rig.query("LC", 4), spec, engine);
    CHECK(r.report.timing.skipped_ids == std::vector<SampleId>{3, 7});
    CHECK(count_stage(r, "fetch") == 10);
    CHECK(count_stage(r, "infer") == 10);
    for (SampleId id : selected_ids(r)) {
      CHECK(id != 3);
      CHECK(id != 7);
    }
  }
  SUBCASE("abort, pipelined and sequential") {
    for (PipelineMode mode :
         {PipelineMode::pipelined, PipelineMode::sequential_whole}) {
      try {
        run_round(*rig.dm, rig.query("LC", 4), fast_spec(mode), engine);
        FAIL("expected FetchFailed");
      } catch (const core::Error& e) {
        CHECK(e.code() == core::ErrorCode::FetchFailed);
      }
    }
  }
}

TEST_CASE("labeled rows travel the pipeline only for geometry strategies") {
  Rig rig(18);
  infer::Engine engine(small_backend());

  auto q_lc = rig.query("LC", 3);
  q_lc.labeled_ids = {0, 1, 2};
  auto r_lc = run_round(*rig.dm, q_lc, fast_spec(), engine);
  CHECK(count_stage(r_lc, "fetch") == 15);  // candidates only

  auto q_kcg = rig.query("KCG", 3);
  q_kcg.labeled_ids = {0, 1, 2};
  auto r_kcg = run_round(*rig.dm, q_kcg, fast_spec(), engine);
  CHECK(count_stage(r_kcg, "fetch") == 18);  // labeled rows fetched too
  for (SampleId id : selected_ids(r_kcg)) CHECK(id > 2);
}

TEST_CASE("inference cache short-circuits preprocess and infer") {
  Rig rig(14);
  infer::Engine engine(small_backend());
  PipelineSpec spec;  // cache on
  spec.mode = PipelineMode::pipelined;

  auto first = run_round(*rig.dm, rig.query("LC", 4), spec, engine);
  CHECK(engine.backend_calls() > 0);
  CHECK(count_stage(first, "infer") == 14);

  engine.reset_backend_calls();
  auto second = run_round(*rig.dm, rig.query("LC", 4), spec, engine);
  CHECK(engine.backend_calls() == 0);
  CHECK(count_stage(second, "infer") == 0);
  CHECK(count_stage(second, "fetch") == 14);  // hashes still come from fetch
  CHECK(selected_ids(second) == selected_ids(first));
  CHECK(selected_scores(second) == selected_scores(first));

  // A different model version must not hit the cache.
  auto other_spec = small_backend();
  other_spec.model_version = "m2";
  infer::Engine other(other_spec);
  run_round(*rig.dm, rig.query("LC", 4), spec, other);
  CHECK(other.backend_calls() > 0);
}

TEST_CASE("custom preprocess transforms") {
  Rig rig(10);
  infer::Engine engine(small_backend());

  SUBCASE("unknown name is rejected") {
    PipelineSpec spec = fast_spec();
    spec.preprocess_transform = "no_such_transform";
    try {
      run_round(*rig.dm, rig.query("LC", 2), spec, engine);
      FAIL("expected UnknownKey");
    } catch (const core::Error& e) {
      CHECK(e.code() == core::ErrorCode::UnknownKey);
    }
  }
  SUBCASE("registered transform is used") {
    register_transform("len_and_first", [](const std::string& bytes) {
      return std::vector<double>{double(bytes.size()) / 256.0,
                                 double((unsigned char)bytes[0]) / 256.0};
    });
    PipelineSpec spec = fast_spec();
    spec.preprocess_transform = "len_and_first";
    auto r = run_round(*rig.dm, rig.query("LC", 2), spec, engine);
    CHECK(r.report.selected.size() == 2);
  }
}

TEST_CASE("byte_histogram normalizes and rejects empty payloads") {
  auto h = byte_histogram("aab");
  CHECK(h.size() == 256);
  CHECK(h['a'] == doctest::Approx(2.0 / 3.0));
  CHECK(h['b'] == doctest::Approx(1.0 / 3.0));
  double sum = 0.0;
  for (double v : h) sum += v;
  CHECK(sum == doctest::Approx(1.0));
  try {
    byte_histogram("");
    FAIL("expected EmptyPayload");
  } catch (const core::Error& e) {
    CHECK(e.code() == core::ErrorCode::EmptyPayload);
  }
}

TEST_CASE("query validation happens before any work") {
  Rig rig(6);
  infer::Engine engine(small_backend());
  auto expect = [&](core::ALQuery q, core::ErrorCode code) {
    rig.dm->reset_remote_access_count();
    try {
      run_round(*rig.dm, q, fast_spec(), engine);
      FAIL("expected error ", core::error_code_name(code));
    } catch (const core::Error& e) {
      CHECK(e.code() == code);
    }
    CHECK(rig.dm->remote_access_count() == 0);  // nothing was fetched
  };

  auto q = rig.query("LC", 0);
  expect(q, core::ErrorCode::InvalidArgument);  // zero budget

  q = rig.query("LC", 7);
  expect(q, core::ErrorCode::BudgetExceedsPool);

  q = rig.query("LC", 3);
  q.labeled_ids = {4, 5};
  q.budget = 5;
  expect(q, core::ErrorCode::BudgetExceedsPool);  // pool shrinks to 4

  q = rig.query("LC", 2, 0);
  expect(q, core::ErrorCode::InvalidArgument);  // zero batch size

  q = rig.query("LC", 2, 4096);
  expect(q, core::ErrorCode::BatchTooLarge);  // beyond backend batch_limit

  q = rig.query("LC", 2);
  q.labeled_ids = {99};
  expect(q, core::ErrorCode::InvalidArgument);

  q = rig.query("LC", 2);
  q.labeled_ids = {1, 1};
  expect(q, core::ErrorCode::InvalidArgument);

  q = rig.query("LC", 2);
  q.dataset_id = "feedfeedfeedfeedfeedfeedfeedfeed";
  expect(q, core::ErrorCode::UnknownDataset);
}

TEST_CASE("baseline dataflow runner rejects the pipelined mode") {
  Rig rig(8);
  infer::Engine engine(small_backend());
  try {
    run_baseline_dataflow(PipelineMode::pipelined, *rig.dm, rig.query("LC", 2),
                          fast_spec(), engine);
    FAIL("expected InvalidArgument");
  } catch (const core::Error& e) {
    CHECK(e.code() == core::ErrorCode::InvalidArgument);
  }
  // The mode argument wins over whatever the spec carries.
  auto r = run_baseline_dataflow(PipelineMode::sequential_whole, *rig.dm,
                                 rig.query("LC", 2),
                                 fast_spec(PipelineMode::pipelined), engine);
  CHECK(r.report.selected.size() == 2);
}

TEST_CASE("trace export writes one sorted json object per event") {
  Rig rig(10);
  infer::Engine engine(small_backend());
  auto r = run_round(*rig.dm, rig.query("LC", 3), fast_spec(), engine);

  std::string path = (rig.dir.path() / "trace.jsonl").string();
  export_trace(r.events, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::size_t count = 0;
  double prev_start = -1.0;
  while (std::getline(in, line)) {
    auto j = core::json::parse(line);
    CHECK(j["stage"].is_string());
    CHECK(j["id"].is_number());
    CHECK(j["start"].is_number());
    CHECK(j["end"].is_number());
    CHECK(j["start"].get<double>() <= j["end"].get<double>());
    CHECK(j["start"].get<double>() >= prev_start);
    prev_start = j["start"].get<double>();
    ++count;
  }
  CHECK(count == r.events.size());

  CHECK_THROWS_AS(export_trace(r.events, (rig.dir.path() / "no" / "dir" / "x").string()),
                  core::Error);
}

TEST_SUITE_END();
