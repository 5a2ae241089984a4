// `alaas-bench` runs a benchmark scenario file and writes result.json,
// summary.csv and runs.csv into --out; with --baseline it also emits a
// markdown comparison. Exit codes: 0 all cells ok, 1 usage error, 2 any
// failed cell or runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "alaas/bench/bench.hpp"
#include "alaas/core/error.hpp"
#include "alaas/core/fsutil.hpp"

int main(int argc, char** argv) {
  CLI::App app{"active-learning pipeline benchmark harness"};
  std::string scenario_path, out_dir, work_dir, baseline_path;
  app.add_option("--scenario", scenario_path, "scenario JSON")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--work", work_dir, "pool/cache directory (default <out>/work)");
  app.add_option("--baseline", baseline_path, "prior result.json to compare against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 1;
  }

  using alaas::core::json;
  namespace fs = std::filesystem;
  try {
    auto text = alaas::core::read_file(scenario_path);
    if (!text) {
      std::cerr << "cannot read scenario: " << scenario_path << "\n";
      return 1;
    }
    alaas::bench::BenchScenario scenario = json::parse(*text);
    if (work_dir.empty()) work_dir = (fs::path(out_dir) / "work").string();
    fs::create_directories(out_dir);

    alaas::bench::BenchResult result = alaas::bench::run_scenario(scenario, work_dir);
    alaas::bench::write_json(result, (fs::path(out_dir) / "result.json").string());
    alaas::bench::write_summary_csv(result,
                                    (fs::path(out_dir) / "summary.csv").string());
    alaas::bench::write_runs_csv(result, (fs::path(out_dir) / "runs.csv").string());

    if (!baseline_path.empty()) {
      auto base_text = alaas::core::read_file(baseline_path);
      if (!base_text) {
        std::cerr << "cannot read baseline: " << baseline_path << "\n";
        return 1;
      }
      alaas::bench::BenchResult baseline = json::parse(*base_text);
      std::string table = alaas::bench::compare_report(result, baseline);
      alaas::core::write_file_atomic((fs::path(out_dir) / "compare.md").string(),
                                     table);
      std::cout << table;
    }

    int failed = 0;
    for (const auto& cell : result.cells) {
      if (cell.failed) {
        ++failed;
        std::cerr << "cell " << cell.mode << "/" << cell.batch_size
                  << " failed: " << cell.error << "\n";
      }
    }
    if (failed) return 2;
    std::cout << "wrote " << (fs::path(out_dir) / "result.json").string() << "\n";
    return 0;
  } catch (const alaas::core::Error& e) {
    std::cerr << e.code_name() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
