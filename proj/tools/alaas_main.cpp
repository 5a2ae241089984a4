// `alaas` command line: push datasets, run queries, poll jobs, cancel jobs,
// and host the service in-process (serve). Exit codes: 0 success, 1 usage
// error, 2 server or job error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "alaas/client/client.hpp"
#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"
#include "alaas/server/config.hpp"
#include "alaas/server/service.hpp"

namespace {

using alaas::core::Error;
using alaas::core::ErrorCode;
using alaas::core::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitServer = 2;

std::atomic<bool> g_shutdown{false};

void on_signal(int) { g_shutdown.store(true); }

std::string alias_list() {
  std::string names;
  for (const auto& a : alaas::core::strategy_aliases()) {
    names += names.empty() ? a : ", " + a;
  }
  return names;
}

// A prior report file (or a bare JSON array of ids) names the already
// labeled samples for multi-round selection.
std::vector<alaas::core::SampleId> labeled_from_file(const std::string& path) {
  auto text = alaas::core::read_file(path);
  if (!text) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  json j = json::parse(*text);
  if (j.is_array()) return j.get<std::vector<alaas::core::SampleId>>();
  std::vector<alaas::core::SampleId> ids;
  const json& selected = j.contains("report") && j["report"].is_object()
                             ? j["report"]["selected"]
                             : j["selected"];
  for (const auto& entry : selected) ids.push_back(entry.at("id").get<std::uint64_t>());
  return ids;
}

// Byte-stable output: drop everything that varies between two runs of the
// same query (the random job id, wall-clock readings, and per-stage item
// counts, which depend on cache warmth). What survives is exactly the
// selection contract: dataset, strategy, budget, selected ids/uris/scores.
void scrub_for_determinism(alaas::core::ALReport& report) {
  report.job_id.clear();
  report.completed_at = 0;
  report.timing.wall_clock = 0.0;
  report.timing.throughput = 0.0;
  for (auto& [stage, st] : report.timing.stages) {
    st.items = 0;
    st.busy_time = 0.0;
    st.idle_time = 0.0;
  }
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << std::endl;
  } else {
    alaas::core::write_file_atomic(out_path, j.dump(2) + "\n");
  }
}

int run_serve(const std::string& config_path) {
  alaas::server::ServiceConfig cfg;
  try {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("ALAAS_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = alaas::server::load_config(path);
    if (const char* host = std::getenv("ALAAS_HOST")) cfg.server.host = host;
    if (const char* port = std::getenv("ALAAS_PORT")) {
      cfg.server.port = std::stoi(port);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitServer;
  }
  try {
    alaas::server::Service service(std::move(cfg));
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.start();
    std::printf("{\"status\":\"serving\",\"url\":\"%s\"}\n", service.url().c_str());
    std::fflush(stdout);
    while (!g_shutdown.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    service.stop();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << e.code_name() << ": " << e.what() << "\n";
    return kExitServer;
  }
}

int classify(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidValue:
      return kExitUsage;
    default:
      return kExitServer;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active-learning service client"};
  app.require_subcommand(1);

  alaas::client::ClientConfig ccfg;
  app.add_option("--server", ccfg.server_url, "server base URL")
      ->envname("ALAAS_SERVER");
  app.add_option("--timeout-ms", ccfg.request_timeout_ms, "request timeout");

  // push
  auto* push = app.add_subcommand("push", "register a dataset by URI list or directory");
  std::string push_dir, push_name = "dataset";
  std::vector<std::string> push_uris;
  push->add_option("--dir", push_dir, "directory expanded to sorted file:// URIs");
  push->add_option("--uris", push_uris, "explicit URIs");
  push->add_option("--name", push_name, "dataset name");

  // query
  auto* query = app.add_subcommand("query", "run one AL round and print the report");
  std::string q_dataset, q_strategy = "LC", q_labeled_from, q_out;
  std::uint64_t q_budget = 0, q_batch = 0, q_seed = 0;
  bool q_deterministic = false;
  query->add_option("--dataset", q_dataset, "dataset id")->required();
  query->add_option("--strategy", q_strategy, "strategy alias");
  query->add_option("--budget", q_budget, "samples to select")->required();
  query->add_option("--batch-size", q_batch, "inference batch size");
  query->add_option("--seed", q_seed, "seed for stochastic strategies");
  query->add_option("--labeled-from", q_labeled_from,
                    "prior report file; its selected ids are excluded");
  query->add_option("--out", q_out, "write the report here instead of stdout");
  query->add_flag("--deterministic", q_deterministic,
                  "zero the job id, timestamps and timings for byte-stable output");
  query->add_option("--poll-interval-ms", ccfg.poll_interval_ms, "poll interval");
  query->add_option("--max-poll-ms", ccfg.max_poll_time_ms, "poll budget");

  // status
  auto* status = app.add_subcommand("status", "print a job record");
  std::string s_job;
  status->add_option("--job", s_job, "job id")->required();

  // cancel
  auto* cancel = app.add_subcommand("cancel", "cancel a job");
  std::string c_job;
  cancel->add_option("--job", c_job, "job id")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run the server in-process");
  std::string serve_config;
  serve->add_option("--config", serve_config, "YAML config (or ALAAS_CONFIG)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);  // --help
      return kExitOk;
    }
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*push) {
      std::vector<std::string> uris = push_uris;
      if (!push_dir.empty()) {
        auto expanded = alaas::client::expand_dir(push_dir);
        uris.insert(uris.end(), expanded.begin(), expanded.end());
      }
      if (uris.empty()) {
        std::cerr << "push: provide --dir or --uris\n";
        return kExitUsage;
      }
      auto id = alaas::client::push_dataset(ccfg, uris, push_name);
      std::cout << json{{"dataset_id", id}}.dump() << std::endl;
      return kExitOk;
    }
    if (*query) {
      auto kind = alaas::core::strategy_from_name(q_strategy);
      if (!kind) {
        std::cerr << "unknown strategy \"" << q_strategy
                  << "\"; valid aliases: " << alias_list() << "\n";
        return kExitUsage;
      }
      alaas::core::ALQuery q;
      q.dataset_id = q_dataset;
      q.strategy.name = *kind;
      q.budget = q_budget;
      if (q_batch > 0) q.batch_size = q_batch;
      q.seed = q_seed;
      if (!q_labeled_from.empty()) q.labeled_ids = labeled_from_file(q_labeled_from);
      auto report = alaas::client::query_and_wait(ccfg, q);
      if (q_deterministic) scrub_for_determinism(report);
      emit(json(report), q_out);
      return kExitOk;
    }
    if (*status) {
      emit(json(alaas::client::get_job(ccfg, s_job)), "");
      return kExitOk;
    }
    if (*cancel) {
      auto state = alaas::client::cancel_job(ccfg, c_job);
      std::cout << json{{"job_id", c_job},
                        {"state", alaas::core::job_state_name(state)}}
                       .dump()
                << std::endl;
      return kExitOk;
    }
    if (*serve) {
      return run_serve(serve_config);
    }
  } catch (const Error& e) {
    std::cerr << e.code_name() << ": " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitServer;
  }
  return kExitUsage;
}
