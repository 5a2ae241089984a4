// Acceptance suite: eight end-to-end criteria, one PASS/FAIL line each.
// Every tolerance is a named constant below; each criterion with a runtime
// budget measures itself and fails when it blows the budget.
//
//   acceptance                 run all criteria
//   acceptance --criterion N   run one
//
// Exit code is the number of failed criteria (0 = all pass).

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "alaas/bench/bench.hpp"
#include "alaas/client/client.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/core/types.hpp"
#include "alaas/data/manager.hpp"
#include "alaas/infer/engine.hpp"
#include "alaas/infer/stub_server.hpp"
#include "alaas/pipeline/pipeline.hpp"
#include "alaas/server/config.hpp"
#include "alaas/server/service.hpp"
#include "alaas/strategy/strategies.hpp"
#include "../support/oracles.hpp"
#include "../support/schema.hpp"
#include "../support/temp_dir.hpp"

namespace {

using namespace alaas;
using testsupport::TempDir;

// --- pinned tolerances and budgets ---------------------------------------

// 1: oracle equivalence. Ids must match exactly; LC/MC/RC scores are the
// same arithmetic on both sides and must match bitwise; ES and continuous
// k-center scores may differ by summation order, bounded here.
constexpr double kScoreReassocTol = 1e-12;
constexpr int kOracleSeeds = 200;
constexpr double kOracleBudgetS = 60.0;

// 2: pipelined vs sequential_whole throughput ratio floor.
constexpr double kSpeedupFloor = 2.0;
constexpr double kSpeedupBudgetS = 120.0;

// 3: batch-size sweep. Mean throughput may dip at most 5% between adjacent
// batch sizes; BS=16 must beat BS=1 by at least 1.5x.
constexpr double kMonotonicNoiseBand = 0.05;
constexpr double kBatch16Gain = 1.5;
constexpr double kSweepBudgetS = 120.0;

// 7: score-function invariants.
constexpr double kSimplexSlack = 1e-9;
constexpr double kEntropyTol = 1e-9;
constexpr int kPropertyCases = 1000;
constexpr double kPropertyBudgetS = 30.0;

// --------------------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& msg) {
  if (!ok) throw Failure(msg);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

std::vector<core::SampleId> selected_ids(const core::ALReport& r) {
  std::vector<core::SampleId> ids;
  for (const auto& s : r.selected) ids.push_back(s.id);
  return ids;
}

void write_origin_files(const std::filesystem::path& dir, int count,
                        const std::string& salt) {
  for (int i = 0; i < count; ++i) {
    std::string body = salt + std::to_string(i * i + 7) +
                       std::string(11 + (i * 13) % 52, char('a' + i % 26));
    char name[32];
    std::snprintf(name, sizeof name, "s%04d.bin", i);
    core::write_file_atomic(dir / name, body);
  }
}

// --- criterion 1: strategy oracle equivalence ------------------------------

void check_ids_equal(const std::vector<core::SampleId>& got,
                     const std::vector<core::SampleId>& want,
                     const std::string& where) {
  expect(got == want, where + ": selected ids diverge from the oracle");
}

void check_scores(const std::vector<double>& got, const std::vector<double>& want,
                  bool exact, const std::string& where) {
  expect(got.size() == want.size(), where + ": score count mismatch");
  for (std::size_t i = 0; i < got.size(); ++i) {
    bool ok = exact ? got[i] == want[i]
                    : std::abs(got[i] - want[i]) <= kScoreReassocTol;
    expect(ok, where + ": score " + std::to_string(i) + " diverges");
  }
}

void check_seeded(const strategy::Selection& sel, std::uint64_t budget,
                  const std::set<core::SampleId>& pool,
                  const std::set<core::SampleId>& labeled,
                  const strategy::Selection& again, const std::string& where) {
  expect(sel.ids.size() == budget, where + ": budget not exact");
  std::set<core::SampleId> uniq(sel.ids.begin(), sel.ids.end());
  expect(uniq.size() == sel.ids.size(), where + ": duplicate ids");
  for (auto id : sel.ids) {
    expect(pool.count(id) == 1, where + ": id outside the offered pool");
    expect(labeled.count(id) == 0, where + ": picked a labeled id");
  }
  expect(sel.ids == again.ids && sel.scores == again.scores,
         where + ": not deterministic for a fixed seed");
}

Outcome criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  const std::array<std::size_t, 3> class_counts{2, 4, 10};
  const std::array<std::size_t, 2> dims{2, 8};
  const std::uint32_t beta = 3;

  struct Scorer {
    const char* name;
    std::vector<double> (*prod)(const core::ProbabilityMatrix&);
    double (*naive)(const std::vector<double>&);
    bool exact;
  };
  const std::array<Scorer, 4> scorers{{
      {"LC", strategy::score_lc, testsupport::naive_lc, true},
      {"MC", strategy::score_mc, testsupport::naive_mc, true},
      {"RC", strategy::score_rc, testsupport::naive_rc, true},
      {"ES", strategy::score_es, testsupport::naive_es, false},
  }};

  for (int seed = 0; seed < kOracleSeeds; ++seed) {
    std::mt19937_64 gen(seed * 1000003ULL + 17);
    const std::size_t n = 8 + seed % 57;  // 8..64
    const std::size_t classes = class_counts[seed % 3];
    const std::size_t dim = dims[seed % 2];
    const std::uint64_t budget = 1 + seed % 8;
    const std::string tag = "seed " + std::to_string(seed);

    auto probs = testsupport::random_probs(gen, n, classes);
    for (const auto& sc : scorers) {
      auto got = strategy::select_top_b(sc.prod(probs), probs.row_ids, budget);
      auto want = testsupport::naive_top_b(
          testsupport::naive_scores(probs, sc.naive), probs.row_ids, budget);
      check_ids_equal(got.ids, want.ids, tag + " " + sc.name);
      check_scores(got.scores, want.scores, sc.exact, tag + " " + sc.name);
    }

    // The top-B prefilter stage of DBAL, at its own (larger) budget.
    {
      auto lc = strategy::score_lc(probs);
      auto pre = std::min<std::uint64_t>(beta * budget, n);
      auto got = strategy::select_top_b(lc, probs.row_ids, pre);
      auto want = testsupport::naive_top_b(
          testsupport::naive_scores(probs, testsupport::naive_lc), probs.row_ids,
          pre);
      check_ids_equal(got.ids, want.ids, tag + " DBAL-prefilter");
      check_scores(got.scores, want.scores, true, tag + " DBAL-prefilter");
    }

    // Greedy k-center on an integer grid: exact on both sides, so ids and
    // scores must agree bitwise. Every third seed adds labeled centers.
    {
      auto embeds = testsupport::grid_embeds(gen, n, dim, -4, 4);
      core::EmbeddingMatrix labeled;
      labeled.dim = dim;
      if (seed % 3 == 0) {
        labeled = testsupport::grid_embeds(gen, 2 + seed % 5, dim, -4, 4);
        for (auto& id : labeled.row_ids) id += 1000000;  // keep ids disjoint
      }
      auto got = strategy::select_kcenter_greedy(embeds, labeled, budget);
      auto want = testsupport::naive_kcenter(embeds, labeled, budget);
      check_ids_equal(got.ids, want.ids, tag + " KCG");
      check_scores(got.scores, want.scores, true, tag + " KCG");
      auto core_set = strategy::select_coreset(embeds, labeled, budget);
      check_ids_equal(core_set.ids, want.ids, tag + " CoreSet");
      check_scores(core_set.scores, want.scores, true, tag + " CoreSet");
    }

    // Seeded strategies: budget exactness, pool membership, labeled
    // exclusion, determinism for a fixed seed.
    {
      auto embeds = testsupport::random_embeds(gen, n, dim);
      embeds.row_ids = probs.row_ids;
      std::set<core::SampleId> pool(probs.row_ids.begin(), probs.row_ids.end());
      std::set<core::SampleId> labeled;
      for (std::size_t i = 0; i < n / 4; ++i) labeled.insert(1000000 + i);

      auto r1 = strategy::select_random(probs.row_ids, budget, seed);
      auto r2 = strategy::select_random(probs.row_ids, budget, seed);
      check_seeded(r1, budget, pool, labeled, r2, tag + " Random");

      auto k1 = strategy::select_kmeans(embeds, budget, seed);
      auto k2 = strategy::select_kmeans(embeds, budget, seed);
      check_seeded(k1, budget, pool, labeled, k2, tag + " KMeans");

      auto d1 = strategy::select_dbal(probs, embeds, budget, beta, seed);
      auto d2 = strategy::select_dbal(probs, embeds, budget, beta, seed);
      check_seeded(d1, budget, pool, labeled, d2, tag + " DBAL");
    }
  }

  double elapsed = seconds_since(t0);
  expect(elapsed < kOracleBudgetS,
         "runtime " + fmt(elapsed) + "s exceeds " + fmt(kOracleBudgetS, 0) + "s");
  return {true, "9 strategies x " + std::to_string(kOracleSeeds) +
                    " seeds vs brute-force oracles in " + fmt(elapsed) + "s"};
}

// --- criterion 2: pipeline speedup -----------------------------------------

const bench::BenchCell& find_cell(const bench::BenchResult& res,
                                  const std::string& mode, std::uint64_t bs) {
  for (const auto& c : res.cells) {
    if (c.mode == mode && c.batch_size == bs) {
      expect(!c.failed, "cell " + mode + "/" + std::to_string(bs) +
                            " failed: " + c.error);
      return c;
    }
  }
  throw Failure("cell " + mode + "/" + std::to_string(bs) + " missing");
}

Outcome criterion2() {
  auto t0 = std::chrono::steady_clock::now();
  TempDir dir("accept2");

  bench::BenchScenario sc;
  sc.name = "stage-overlap";
  sc.pool_size = 1000;
  sc.budget = 16;
  sc.strategy = "LC";
  sc.modes = {"pipelined", "sequential_whole"};
  sc.batch_sizes = {16};
  sc.fetch_latency_ms = 1.0;
  sc.preprocess_latency_ms = 1.0;
  sc.infer_latency_ms_per_item = 1.0;
  sc.repeats = 3;
  sc.seed = 5;
  // One worker per stage: the ratio then isolates stage overlap instead of
  // intra-stage parallel fan-out.
  sc.fetch_workers = 1;
  sc.infer_workers = 1;

  auto res = bench::run_scenario(sc, dir.sub("work"));
  const auto& pipelined = find_cell(res, "pipelined", 16);
  const auto& sequential = find_cell(res, "sequential_whole", 16);
  expect(pipelined.selected_ids == sequential.selected_ids,
         "modes disagree on the selection");

  double ratio = pipelined.throughput_mean / sequential.throughput_mean;
  double elapsed = seconds_since(t0);
  expect(sequential.throughput_mean > 0, "sequential throughput is zero");
  expect(ratio >= kSpeedupFloor,
         "throughput ratio " + fmt(ratio) + " below floor " + fmt(kSpeedupFloor, 1));
  expect(elapsed < kSpeedupBudgetS,
         "runtime " + fmt(elapsed) + "s exceeds " + fmt(kSpeedupBudgetS, 0) + "s");
  return {true, "pipelined " + fmt(pipelined.throughput_mean, 1) +
                    " items/s vs sequential_whole " +
                    fmt(sequential.throughput_mean, 1) + ", ratio " + fmt(ratio) +
                    " (floor " + fmt(kSpeedupFloor, 1) + ") in " + fmt(elapsed) +
                    "s"};
}

// --- criterion 3: batch-size monotonicity ----------------------------------

Outcome criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  TempDir dir("accept3");

  bench::BenchScenario sc;
  sc.name = "batch-sweep";
  sc.pool_size = 2000;
  sc.budget = 16;
  sc.strategy = "LC";
  sc.modes = {"pipelined"};
  sc.batch_sizes = {1, 2, 4, 8, 16};
  sc.repeats = 3;
  sc.seed = 11;
  sc.backend = "remote-stub";
  sc.stub_per_call_ms = 5.0;
  sc.stub_per_item_ms = 0.2;

  auto res = bench::run_scenario(sc, dir.sub("work"));
  std::vector<double> tput;
  for (auto bs : sc.batch_sizes) tput.push_back(find_cell(res, "pipelined", bs).throughput_mean);

  for (std::size_t i = 1; i < tput.size(); ++i) {
    expect(tput[i] >= tput[i - 1] * (1.0 - kMonotonicNoiseBand),
           "throughput drops past the noise band at batch size " +
               std::to_string(sc.batch_sizes[i]) + " (" + fmt(tput[i - 1], 1) +
               " -> " + fmt(tput[i], 1) + ")");
  }
  expect(tput.back() >= kBatch16Gain * tput.front(),
         "throughput(16)/throughput(1) = " + fmt(tput.back() / tput.front()) +
             " below " + fmt(kBatch16Gain, 1));

  double elapsed = seconds_since(t0);
  expect(elapsed < kSweepBudgetS,
         "runtime " + fmt(elapsed) + "s exceeds " + fmt(kSweepBudgetS, 0) + "s");
  std::string curve;
  for (std::size_t i = 0; i < tput.size(); ++i) {
    curve += (i ? ", " : "") + std::to_string(sc.batch_sizes[i]) + ":" +
             fmt(tput[i], 0);
  }
  return {true, "throughput non-decreasing over BS {" + curve + "} items/s, x" +
                    fmt(tput.back() / tput.front()) + " at BS=16, in " +
                    fmt(elapsed) + "s"};
}

// --- criterion 4: cache effectiveness --------------------------------------

server::ServiceConfig local_service_config(const TempDir& dir, int workers) {
  server::ServiceConfig cfg;
  cfg.server.port = 0;
  cfg.server.workers = workers;
  cfg.infer_cfg.classes = 8;
  cfg.infer_cfg.embed_dim = 4;
  cfg.data.data_dir = dir.sub("data");
  cfg.data.cache_dir = dir.sub("cache");
  return cfg;
}

Outcome criterion4() {
  const int n = 40;
  TempDir dir("accept4");
  write_origin_files(dir.path() / "origin", n, "cache-region-");

  server::Service service(local_service_config(dir, 1));
  service.start();
  try {
    client::ClientConfig c;
    c.server_url = service.url();
    c.poll_interval_ms = 10;

    auto dataset = client::push_dataset(c, client::expand_dir(dir.sub("origin")),
                                        "cache-check");
    core::ALQuery q;
    q.dataset_id = dataset;
    q.strategy.name = core::Strategy::LC;
    q.budget = 5;
    q.batch_size = 8;

    expect(service.data_manager().remote_access_count() == 0,
           "origin reads before any query");
    service.engine().reset_backend_calls();
    auto round1 = client::query_and_wait(c, q);
    auto fetches1 = service.data_manager().remote_access_count();
    auto calls1 = service.engine().backend_calls();

    service.engine().reset_backend_calls();
    auto round2 = client::query_and_wait(c, q);
    auto fetches2 = service.data_manager().remote_access_count() - fetches1;
    auto calls2 = service.engine().backend_calls();

    expect(fetches1 == n, "round one origin reads = " + std::to_string(fetches1) +
                              ", want " + std::to_string(n));
    expect(calls1 > 0, "round one made no backend calls");
    expect(fetches2 == 0,
           "round two origin reads = " + std::to_string(fetches2) + ", want 0");
    expect(calls2 == 0,
           "round two backend calls = " + std::to_string(calls2) + ", want 0");
    expect(selected_ids(round1) == selected_ids(round2),
           "cached round selected different ids");

    service.stop();
    return {true, "origin reads " + std::to_string(fetches1) + " then 0, backend calls " +
                      std::to_string(calls1) + " then 0 (exact)"};
  } catch (...) {
    service.stop();
    throw;
  }
}

// --- criterion 5: end-to-end protocol conformance ---------------------------

struct RawResponse {
  int status = 0;
  std::string body;
};

RawResponse raw(httplib::Client& cli, const std::string& method,
                const std::string& path, const std::string& body = "") {
  httplib::Result res =
      method == "GET"    ? cli.Get(path)
      : method == "POST" ? cli.Post(path, body, "application/json")
                         : cli.Delete(path);
  expect(static_cast<bool>(res), method + " " + path + ": no response");
  return {res->status, res->body};
}

void check_schema(const std::string& endpoint, const std::string& body,
                  const std::string& where) {
  auto doc = core::json::parse(body, nullptr, false);
  expect(!doc.is_discarded(), where + ": body is not JSON");
  auto violation = testsupport::api_violation(endpoint, doc);
  expect(!violation, where + ": schema violation: " + violation.value_or(""));
}

Outcome criterion5() {
  const int n = 200;
  const std::uint64_t budget = 20;
  const std::string sentinel = "PAYLOADSENTINEL";
  TempDir dir("accept5");
  write_origin_files(dir.path() / "origin", n, sentinel + "-");

  server::Service service(local_service_config(dir, 2));
  service.start();
  try {
    httplib::Client cli(service.url());
    cli.set_read_timeout(30, 0);

    auto no_payload = [&](const std::string& body, const std::string& where) {
      expect(body.find(sentinel) == std::string::npos,
             where + ": payload bytes leaked into a response");
    };

    auto health = raw(cli, "GET", "/v1/health");
    expect(health.status == 200, "health status " + std::to_string(health.status));
    check_schema("GET /v1/health", health.body, "health");

    core::json push_body{{"uris", client::expand_dir(dir.sub("origin"))},
                         {"name", "conformance"}};
    auto created = raw(cli, "POST", "/v1/datasets", push_body.dump());
    expect(created.status == 201, "push status " + std::to_string(created.status));
    check_schema("POST /v1/datasets", created.body, "push");
    no_payload(created.body, "push");
    const std::string dataset = core::json::parse(created.body)["dataset_id"];

    auto manifest = raw(cli, "GET", "/v1/datasets/" + dataset);
    expect(manifest.status == 200, "manifest status " + std::to_string(manifest.status));
    check_schema("GET /v1/datasets/{id}", manifest.body, "manifest");
    no_payload(manifest.body, "manifest");
    std::set<std::string> manifest_uris;
    auto manifest_doc = core::json::parse(manifest.body);
    for (const auto& s : manifest_doc["samples"]) {
      manifest_uris.insert(s["uri"].get<std::string>());
    }
    expect(manifest_uris.size() == n, "manifest does not list all URIs");

    int queries = 0;
    for (const auto& alias : core::strategy_aliases()) {
      const std::string where = "strategy " + alias;
      core::json qbody{{"dataset_id", dataset},
                       {"strategy", alias},
                       {"budget", budget},
                       {"batch_size", 16},
                       {"seed", 9}};
      auto accepted = raw(cli, "POST", "/v1/queries", qbody.dump());
      expect(accepted.status == 202,
             where + ": submit status " + std::to_string(accepted.status));
      check_schema("POST /v1/queries", accepted.body, where);
      no_payload(accepted.body, where);
      const std::string job = core::json::parse(accepted.body)["job_id"];

      core::json record;
      auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
      for (;;) {
        auto polled = raw(cli, "GET", "/v1/queries/" + job);
        expect(polled.status == 200,
               where + ": poll status " + std::to_string(polled.status));
        check_schema("GET /v1/queries/{job_id}", polled.body, where);
        no_payload(polled.body, where);
        record = core::json::parse(polled.body);
        const std::string state = record["state"];
        if (state == "done" || state == "failed" || state == "cancelled") break;
        expect(std::chrono::steady_clock::now() < deadline, where + ": poll timeout");
        sleep_ms(10);
      }
      expect(record["state"] == "done",
             where + ": terminal state " + record["state"].get<std::string>() +
                 (record["error"].is_null()
                      ? ""
                      : " (" + record["error"].get<std::string>() + ")"));

      std::set<std::string> uris;
      std::set<std::uint64_t> ids;
      for (const auto& s : record["report"]["selected"]) {
        uris.insert(s["uri"].get<std::string>());
        ids.insert(s["id"].get<std::uint64_t>());
        expect(manifest_uris.count(s["uri"]) == 1,
               where + ": selected URI not in the manifest");
      }
      expect(uris.size() == budget && ids.size() == budget,
             where + ": want " + std::to_string(budget) + " distinct URIs, got " +
                 std::to_string(uris.size()));
      ++queries;
    }

    service.stop();
    return {true, std::to_string(queries) + " aliases x B=" + std::to_string(budget) +
                      " over " + std::to_string(n) +
                      " URIs; all responses schema-valid, URI-only"};
  } catch (...) {
    service.stop();
    throw;
  }
}

// --- criterion 6: schedule independence ------------------------------------

Outcome criterion6() {
  TempDir dir("accept6");
  data::DataConfig dc;
  dc.data_dir = dir.sub("data");
  dc.cache_dir = dir.sub("cache");
  data::DataManager dm(dc);

  infer::BackendSpec spec;
  spec.classes = 6;
  spec.embed_dim = 5;
  infer::Engine engine(spec);

  const std::array<int, 4> sizes{24, 40, 64, 96};
  std::vector<std::string> datasets;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    auto origin = dir.path() / ("origin" + std::to_string(k));
    write_origin_files(origin, sizes[k], "pool" + std::to_string(k) + "-");
    datasets.push_back(
        dm.ingest(client::expand_dir(origin.string()), "pool" + std::to_string(k), "accept")
            .dataset_id);
  }

  const std::array<pipeline::PipelineMode, 3> modes{
      pipeline::PipelineMode::pipelined, pipeline::PipelineMode::sequential_rounds,
      pipeline::PipelineMode::sequential_whole};
  constexpr std::array<core::Strategy, 9> kinds{
      core::Strategy::LC,     core::Strategy::MC,      core::Strategy::RC,
      core::Strategy::ES,     core::Strategy::Random,  core::Strategy::KMeans,
      core::Strategy::KCG,    core::Strategy::CoreSet, core::Strategy::DBAL};

  std::mt19937_64 gen(4242);
  int triples = 50;
  for (int t = 0; t < triples; ++t) {
    const std::size_t ds = gen() % datasets.size();
    const int pool = sizes[ds];
    core::ALQuery q;
    q.dataset_id = datasets[ds];
    q.strategy.name = kinds[t % kinds.size()];
    q.budget = 1 + gen() % 10;
    q.batch_size = std::array<std::uint64_t, 5>{1, 3, 4, 7, 16}[gen() % 5];
    q.seed = gen();
    if ((q.strategy.name == core::Strategy::KCG ||
         q.strategy.name == core::Strategy::CoreSet) &&
        t % 2 == 0) {
      for (std::uint64_t i = 0; i < 3; ++i) q.labeled_ids.push_back(i * 2);
    }

    std::vector<std::vector<core::SampleId>> per_mode;
    for (auto mode : modes) {
      pipeline::PipelineSpec ps;
      ps.mode = mode;
      auto run = pipeline::run_round(dm, q, ps, engine);
      per_mode.push_back(selected_ids(run.report));
      expect(per_mode.back().size() == q.budget,
             "triple " + std::to_string(t) + ": wrong selection size");
    }
    expect(per_mode[0] == per_mode[1] && per_mode[1] == per_mode[2],
           "triple " + std::to_string(t) + " (" +
               core::strategy_name(q.strategy.name) + ", pool " +
               std::to_string(pool) + "): modes disagree");
  }

  return {true, std::to_string(triples) +
                    " (dataset, query, seed) triples identical across 3 modes"};
}

// --- criterion 7: score-function invariants --------------------------------

Outcome criterion7() {
  auto t0 = std::chrono::steady_clock::now();

  infer::BackendSpec spec;
  spec.classes = 5;
  spec.embed_dim = 6;
  infer::Engine engine(spec);

  int simplex_checks = 0, uniform_checks = 0, scaling_checks = 0, batch_checks = 0;
  for (int i = 0; i < kPropertyCases; ++i) {
    std::mt19937_64 gen(i * 7919ULL + 3);
    const std::size_t n = 4 + i % 37;
    const std::size_t classes = 2 + i % 9;

    auto probs = testsupport::random_probs(gen, n, classes);
    auto lc = strategy::score_lc(probs);
    auto mc = strategy::score_mc(probs);
    auto rc = strategy::score_rc(probs);
    auto es = strategy::score_es(probs);
    const double lc_cap = 1.0 - 1.0 / static_cast<double>(classes);
    const double es_cap = std::log(static_cast<double>(classes));
    for (std::size_t r = 0; r < n; ++r) {
      expect(lc[r] >= -kSimplexSlack && lc[r] <= lc_cap + kSimplexSlack,
             "LC out of [0, 1-1/C]");
      expect(mc[r] >= -kSimplexSlack && mc[r] <= 1.0 + kSimplexSlack,
             "MC out of [0, 1]");
      expect(rc[r] >= -kSimplexSlack && rc[r] <= 1.0 + kSimplexSlack,
             "RC out of [0, 1]");
      expect(es[r] >= -kSimplexSlack && es[r] <= es_cap + kSimplexSlack,
             "ES out of [0, ln C]");
    }
    ++simplex_checks;

    if (i % 4 == 0) {
      core::ProbabilityMatrix uniform;
      uniform.rows = 1;
      uniform.classes = classes;
      uniform.data.assign(classes, 1.0 / static_cast<double>(classes));
      uniform.row_ids = {7};
      auto u = strategy::score_es(uniform);
      expect(std::abs(u[0] - es_cap) <= kEntropyTol,
             "ES(uniform " + std::to_string(classes) + ") != ln C");
      ++uniform_checks;
    }

    if (i % 3 == 0) {
      const std::size_t dim = 2 + i % 5;
      auto embeds = testsupport::random_embeds(gen, n, dim);
      core::EmbeddingMatrix labeled;
      labeled.dim = dim;
      if (i % 6 == 0) {
        labeled = testsupport::random_embeds(gen, 3, dim);
        for (auto& id : labeled.row_ids) id += 1000000;
      }
      auto scaled = embeds;
      for (auto& v : scaled.data) v *= 2.0;  // exact in binary floating point
      auto scaled_labeled = labeled;
      for (auto& v : scaled_labeled.data) v *= 2.0;
      const std::uint64_t budget = std::min<std::uint64_t>(5, n);
      auto a = strategy::select_kcenter_greedy(embeds, labeled, budget);
      auto b = strategy::select_kcenter_greedy(scaled, scaled_labeled, budget);
      expect(a.ids == b.ids, "KCG pick sequence changed under positive scaling");
      auto c = strategy::select_coreset(embeds, labeled, budget);
      auto d = strategy::select_coreset(scaled, scaled_labeled, budget);
      expect(c.ids == d.ids, "CoreSet pick sequence changed under positive scaling");
      ++scaling_checks;
    }

    if (i % 5 == 0) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<infer::FeatureVector> batch(4 + i % 13);
      for (std::size_t r = 0; r < batch.size(); ++r) {
        batch[r].id = 100 + r;
        batch[r].values.resize(spec.embed_dim);
        for (auto& v : batch[r].values) v = u(gen);
      }
      auto [probs_full, embeds_full] = engine.infer_batch(batch);
      for (std::size_t r = 0; r < batch.size(); ++r) {
        auto [p1, e1] = engine.infer_batch({batch[r]});
        for (std::size_t k = 0; k < probs_full.classes; ++k) {
          expect(p1.data[k] == probs_full.data[r * probs_full.classes + k],
                 "BS=1 probability differs from batched");
        }
        for (std::size_t k = 0; k < embeds_full.dim; ++k) {
          expect(e1.data[k] == embeds_full.data[r * embeds_full.dim + k],
                 "BS=1 embedding differs from batched");
        }
      }
      ++batch_checks;
    }
  }

  double elapsed = seconds_since(t0);
  expect(elapsed < kPropertyBudgetS,
         "runtime " + fmt(elapsed) + "s exceeds " + fmt(kPropertyBudgetS, 0) + "s");
  return {true, std::to_string(simplex_checks) + " simplex, " +
                    std::to_string(uniform_checks) + " uniform-entropy, " +
                    std::to_string(scaling_checks) + " scaling, " +
                    std::to_string(batch_checks) + " batching cases in " +
                    fmt(elapsed) + "s"};
}

// --- criterion 8: crash/restart safety --------------------------------------

pid_t spawn_serve(const std::string& config_path, const std::string& log_path) {
  pid_t pid = fork();
  expect(pid >= 0, "fork failed");
  if (pid == 0) {
    int fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      dup2(fd, 1);
      dup2(fd, 2);
      close(fd);
    }
    execl(ALAAS_CLI_BIN, "alaas", "serve", "--config", config_path.c_str(),
          static_cast<char*>(nullptr));
    _exit(127);
  }
  return pid;
}

std::string wait_for_url(const std::string& log_path) {
  for (int i = 0; i < 400; ++i) {
    if (auto text = core::read_file(log_path)) {
      auto nl = text->find('\n');
      if (nl != std::string::npos) {
        auto line = core::json::parse(text->substr(0, nl), nullptr, false);
        if (!line.is_discarded() && line.contains("url")) return line["url"];
        throw Failure("serve printed something else: " + text->substr(0, nl));
      }
    }
    sleep_ms(25);
  }
  throw Failure("server did not announce its URL within 10s");
}

core::JobRecord poll_until_terminal(const client::ClientConfig& c,
                                    const std::string& job, int deadline_s) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(deadline_s);
  for (;;) {
    auto rec = client::get_job(c, job);
    if (rec.state == core::JobState::done || rec.state == core::JobState::failed ||
        rec.state == core::JobState::cancelled) {
      return rec;
    }
    expect(std::chrono::steady_clock::now() < deadline,
           "job " + job + " did not reach a terminal state in " +
               std::to_string(deadline_s) + "s");
    sleep_ms(10);
  }
}

Outcome criterion8() {
  const int n = 48;
  TempDir dir("accept8");
  write_origin_files(dir.path() / "origin", n, "restart-");

  // A slow remote backend keeps the first job observably mid-flight; the stub
  // outlives both server processes because it runs in this one.
  infer::StubServer stub(6, 4);
  stub.start();
  stub.set_latency(25.0, 0.0);

  const std::string config_path = dir.sub("service.yaml");
  core::write_file_atomic(
      config_path,
      "server:\n  host: 127.0.0.1\n  port: 0\n  workers: 1\n"
      "infer:\n  backend: remote\n  endpoint: " + stub.endpoint() +
          "\n  classes: 6\n  embed_dim: 4\n"
          "data:\n  data_dir: " + dir.sub("data").string() +
          "\n  cache_dir: " + dir.sub("cache").string() + "\n");

  pid_t pid1 = spawn_serve(config_path, dir.sub("serve1.log"));
  std::string verdict;
  try {
    client::ClientConfig c;
    c.server_url = wait_for_url(dir.sub("serve1.log"));
    c.poll_interval_ms = 10;

    auto dataset = client::push_dataset(c, client::expand_dir(dir.sub("origin")),
                                        "restart-pool");
    core::ALQuery q;
    q.dataset_id = dataset;
    q.strategy.name = core::Strategy::LC;
    q.budget = 6;
    q.batch_size = 4;
    q.seed = 1;

    // One worker: the first job runs, the other two stay queued on disk.
    auto running_job = client::submit_query(c, q);
    auto queued_a = client::submit_query(c, q);
    auto queued_b = client::submit_query(c, q);

    auto spin_deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (client::get_job(c, running_job).state == core::JobState::queued) {
      expect(std::chrono::steady_clock::now() < spin_deadline,
             "first job never started running");
      sleep_ms(5);
    }
    sleep_ms(120);  // mid-inference: 12 stub calls x 25 ms per job

    expect(kill(pid1, SIGKILL) == 0, "SIGKILL failed");
    int status = 0;
    waitpid(pid1, &status, 0);
    pid1 = -1;

    pid_t pid2 = spawn_serve(config_path, dir.sub("serve2.log"));
    try {
      client::ClientConfig c2;
      c2.server_url = wait_for_url(dir.sub("serve2.log"));
      c2.poll_interval_ms = 10;

      // Documented policy: a job caught running dies as failed("interrupted
      // by restart"); it may also have finished just before the kill landed.
      auto interrupted = client::get_job(c2, running_job);
      if (interrupted.state == core::JobState::failed) {
        expect(interrupted.error &&
                   interrupted.error->find("interrupted by restart") !=
                       std::string::npos,
               "failed job lacks the restart marker: " +
                   interrupted.error.value_or("<none>"));
        verdict = "running job failed(\"interrupted by restart\")";
      } else {
        expect(interrupted.state == core::JobState::done,
               "interrupted job is neither failed nor done");
        verdict = "running job finished before the kill landed";
      }

      // Queued jobs were re-enqueued and complete after the restart.
      auto rec_a = poll_until_terminal(c2, queued_a, 60);
      auto rec_b = poll_until_terminal(c2, queued_b, 60);
      expect(rec_a.state == core::JobState::done,
             "re-queued job a ended " + std::string(core::job_state_name(rec_a.state)) +
                 (rec_a.error ? " (" + *rec_a.error + ")" : ""));
      expect(rec_b.state == core::JobState::done, "re-queued job b did not finish");
      expect(rec_a.report && rec_a.report->selected.size() == q.budget,
             "re-queued job a has a malformed report");

      // Manifest and caches survived: same sample count, and a fresh query
      // over the same dataset completes with the same selection.
      auto manifest = client::get_dataset(c2, dataset);
      expect(manifest.samples.size() == n, "manifest lost samples across restart");
      auto fresh = client::query_and_wait(c2, q);
      expect(selected_ids(fresh) == selected_ids(*rec_a.report),
             "post-restart selection diverges");

      expect(kill(pid2, SIGTERM) == 0, "SIGTERM failed");
      waitpid(pid2, &status, 0);
      pid2 = -1;
      expect(WIFEXITED(status) && WEXITSTATUS(status) == 0,
             "second server did not shut down cleanly");
    } catch (...) {
      if (pid2 > 0) {
        kill(pid2, SIGKILL);
        waitpid(pid2, &status, 0);
      }
      throw;
    }
  } catch (...) {
    if (pid1 > 0) {
      int status = 0;
      kill(pid1, SIGKILL);
      waitpid(pid1, &status, 0);
    }
    stub.stop();
    throw;
  }
  stub.stop();
  return {true, verdict + "; queued jobs re-ran to done; manifest and caches intact"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg.rfind("--criterion=", 0) == 0) {
      only = std::atoi(arg.substr(12).c_str());
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }

  struct Entry {
    int num;
    Outcome (*fn)();
  };
  const std::array<Entry, 8> entries{{{1, criterion1},
                                      {2, criterion2},
                                      {3, criterion3},
                                      {4, criterion4},
                                      {5, criterion5},
                                      {6, criterion6},
                                      {7, criterion7},
                                      {8, criterion8}}};

  int failures = 0;
  for (const auto& e : entries) {
    if (only != 0 && e.num != only) continue;
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, ex.what()};
    }
    std::printf("criterion %d: %s (%s)\n", e.num, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
