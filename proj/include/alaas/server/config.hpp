#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "alaas/core/types.hpp"
#include "alaas/data/manager.hpp"
#include "alaas/infer/engine.hpp"
#include "alaas/pipeline/pipeline.hpp"

namespace alaas::server {

// Service configuration, one YAML file. Every section and field is optional;
// defaults below. Unknown keys are rejected with their dotted path so that a
// typo ("buget") cannot silently fall back to a default.
//
//   name: alaas                     version: 0.1.0
//   active_learning:
//     strategy: LC                  # any alias from the strategy table
//     budget: 10
//     batch_size: 16
//     dbal_beta: 10                 # DBAL only
//   server:
//     host: 127.0.0.1               # ALAAS_HOST overrides
//     port: 8290                    # ALAAS_PORT overrides; 0 = ephemeral
//     workers: 2                    # concurrent jobs
//   infer:
//     backend: mock                 # mock | remote
//     endpoint: ~                   # required for remote
//     model_version: m1
//     classes: 10
//     embed_dim: 8
//   data:
//     data_dir: alaas-data
//     cache_dir: alaas-cache
//     cache_max_bytes: 0            # 0 = unbounded
//     fetch_concurrency: 8
//     fetch_timeout_ms: 30000
//     s3_gateway_template: ~        # e.g. https://gw/{bucket}/{key}
//   pipeline:
//     mode: pipelined               # pipelined | sequential_whole | sequential_rounds
//     queue_capacity: 0             # 0 = auto (4x batch size)
struct ServiceConfig {
  struct ActiveLearning {
    core::Strategy strategy = core::Strategy::LC;
    std::uint64_t budget = 10;
    std::uint64_t batch_size = 16;
    std::uint32_t dbal_beta = 10;
  };
  struct Server {
    std::string host = "127.0.0.1";
    int port = 8290;
    int workers = 2;
  };
  struct Infer {
    infer::BackendKind backend = infer::BackendKind::mock;
    std::optional<std::string> endpoint;
    std::string model_version = "m1";
    std::size_t classes = 10;
    std::size_t embed_dim = 8;
  };
  struct Pipeline {
    pipeline::PipelineMode mode = pipeline::PipelineMode::pipelined;
    std::size_t queue_capacity = 0;
  };

  std::string name = "alaas";
  std::string version = "0.1.0";
  ActiveLearning active_learning;
  Server server;
  Infer infer_cfg;
  data::DataConfig data;
  Pipeline pipe;

  core::StrategyKind strategy_kind() const {
    return {active_learning.strategy, active_learning.dbal_beta};
  }
  infer::BackendSpec backend_spec() const;
  pipeline::PipelineSpec pipeline_spec() const;
};

// Throws ParseError (with the 1-based line), UnknownKey (with the dotted
// path) or InvalidValue (with key and reason). ALAAS_HOST/ALAAS_PORT are
// applied by the caller, not here.
ServiceConfig load_config(const std::string& path);

// Same contract over an in-memory document; "" and "---" load all defaults.
ServiceConfig parse_config(const std::string& yaml_text);

}  // namespace alaas::server
