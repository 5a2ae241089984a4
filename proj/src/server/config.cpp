#include "alaas/server/config.hpp"

#include <yaml-cpp/yaml.h>

#include <limits>
#include <set>
#include <string>

#include "alaas/core/error.hpp"

namespace alaas::server {

using core::Error;
using core::ErrorCode;

infer::BackendSpec ServiceConfig::backend_spec() const {
  infer::BackendSpec spec;
  spec.kind = infer_cfg.backend;
  spec.endpoint = infer_cfg.endpoint;
  spec.model_version = infer_cfg.model_version;
  spec.classes = infer_cfg.classes;
  spec.embed_dim = infer_cfg.embed_dim;
  return spec;
}

pipeline::PipelineSpec ServiceConfig::pipeline_spec() const {
  pipeline::PipelineSpec spec;
  spec.mode = pipe.mode;
  spec.queue_capacity = pipe.queue_capacity;
  spec.batch.max_batch = active_learning.batch_size;
  return spec;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& reason) {
  throw Error(ErrorCode::InvalidValue, key + ": " + reason);
}

// A YAML mapping (or absent node) whose keys must all be consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string prefix)
      : node_(node), prefix_(std::move(prefix)) {
    if (node_ && !node_.IsMap() && !node_.IsNull()) {
      bad_value(prefix_.empty() ? "<root>" : prefix_, "expected a mapping");
    }
  }

  YAML::Node take(const char* key) {
    taken_.insert(key);
    return node_ ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
  }

  Section section(const char* key) { return Section(take(key), path(key)); }

  std::string path(const char* key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  // Call last: any key not taken is a typo.
  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!taken_.count(key)) {
        throw Error(ErrorCode::UnknownKey, path(key.c_str()));
      }
    }
  }

 private:
  YAML::Node node_;
  std::string prefix_;
  std::set<std::string> taken_;
};

bool present(const YAML::Node& n) { return n && !n.IsNull(); }

std::string get_string(Section& s, const char* key, const std::string& def) {
  YAML::Node n = s.take(key);
  if (!present(n)) return def;
  if (!n.IsScalar()) bad_value(s.path(key), "expected a string");
  return n.as<std::string>();
}

std::optional<std::string> get_opt_string(Section& s, const char* key) {
  YAML::Node n = s.take(key);
  if (!present(n)) return std::nullopt;
  if (!n.IsScalar()) bad_value(s.path(key), "expected a string");
  return n.as<std::string>();
}

std::int64_t get_int(Section& s, const char* key, std::int64_t def,
                     std::int64_t lo, std::int64_t hi) {
  YAML::Node n = s.take(key);
  if (!present(n)) return def;
  std::int64_t v = 0;
  try {
    v = n.as<std::int64_t>();
  } catch (const YAML::Exception&) {
    bad_value(s.path(key), "expected an integer");
  }
  if (v < lo || v > hi) {
    bad_value(s.path(key), "out of range [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
  }
  return v;
}

ServiceConfig from_root(const YAML::Node& root) {
  ServiceConfig cfg;
  Section top(root, "");

  cfg.name = get_string(top, "name", cfg.name);
  cfg.version = get_string(top, "version", cfg.version);

  {
    Section al = top.section("active_learning");
    const std::string strat =
        get_string(al, "strategy", core::strategy_name(cfg.active_learning.strategy));
    auto kind = core::strategy_from_name(strat);
    if (!kind) bad_value(al.path("strategy"), "unknown strategy: " + strat);
    cfg.active_learning.strategy = *kind;
    cfg.active_learning.budget = static_cast<std::uint64_t>(
        get_int(al, "budget", static_cast<std::int64_t>(cfg.active_learning.budget),
                1, std::numeric_limits<std::int64_t>::max()));
    cfg.active_learning.batch_size = static_cast<std::uint64_t>(get_int(
        al, "batch_size", static_cast<std::int64_t>(cfg.active_learning.batch_size),
        1, 1 << 20));
    cfg.active_learning.dbal_beta = static_cast<std::uint32_t>(
        get_int(al, "dbal_beta", cfg.active_learning.dbal_beta, 1, 1 << 20));
    al.finish();
  }
  {
    Section sv = top.section("server");
    cfg.server.host = get_string(sv, "host", cfg.server.host);
    cfg.server.port = static_cast<int>(get_int(sv, "port", cfg.server.port, 0, 65535));
    cfg.server.workers =
        static_cast<int>(get_int(sv, "workers", cfg.server.workers, 1, 256));
    sv.finish();
  }
  {
    Section in = top.section("infer");
    const std::string backend = get_string(in, "backend", "mock");
    if (backend == "mock") {
      cfg.infer_cfg.backend = infer::BackendKind::mock;
    } else if (backend == "remote") {
      cfg.infer_cfg.backend = infer::BackendKind::remote;
    } else {
      bad_value(in.path("backend"), "expected mock or remote");
    }
    cfg.infer_cfg.endpoint = get_opt_string(in, "endpoint");
    if (cfg.infer_cfg.backend == infer::BackendKind::remote &&
        !cfg.infer_cfg.endpoint) {
      bad_value(in.path("endpoint"), "required for backend: remote");
    }
    cfg.infer_cfg.model_version =
        get_string(in, "model_version", cfg.infer_cfg.model_version);
    cfg.infer_cfg.classes = static_cast<std::size_t>(
        get_int(in, "classes", static_cast<std::int64_t>(cfg.infer_cfg.classes), 2,
                1 << 20));
    cfg.infer_cfg.embed_dim = static_cast<std::size_t>(
        get_int(in, "embed_dim", static_cast<std::int64_t>(cfg.infer_cfg.embed_dim),
                1, 1 << 20));
    in.finish();
  }
  {
    Section da = top.section("data");
    cfg.data.data_dir = get_string(da, "data_dir", cfg.data.data_dir);
    cfg.data.cache_dir = get_string(da, "cache_dir", cfg.data.cache_dir);
    cfg.data.cache_max_bytes = static_cast<std::uint64_t>(
        get_int(da, "cache_max_bytes",
                static_cast<std::int64_t>(cfg.data.cache_max_bytes), 0,
                std::numeric_limits<std::int64_t>::max()));
    cfg.data.fetch_concurrency = static_cast<int>(
        get_int(da, "fetch_concurrency", cfg.data.fetch_concurrency, 1, 1024));
    cfg.data.fetch_timeout_ms = static_cast<int>(
        get_int(da, "fetch_timeout_ms", cfg.data.fetch_timeout_ms, 1,
                std::numeric_limits<int>::max()));
    cfg.data.s3_gateway_template = get_opt_string(da, "s3_gateway_template");
    da.finish();
  }
  {
    Section pl = top.section("pipeline");
    const std::string mode =
        get_string(pl, "mode", pipeline::pipeline_mode_name(cfg.pipe.mode));
    auto m = pipeline::pipeline_mode_from_name(mode);
    if (!m) bad_value(pl.path("mode"), "unknown pipeline mode: " + mode);
    cfg.pipe.mode = *m;
    cfg.pipe.queue_capacity = static_cast<std::size_t>(
        get_int(pl, "queue_capacity",
                static_cast<std::int64_t>(cfg.pipe.queue_capacity), 0, 1 << 20));
    pl.finish();
  }
  top.finish();
  return cfg;
}

}  // namespace

ServiceConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return from_root(root);
}

ServiceConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::ParseError, "cannot read config file: " + path);
  }
  return from_root(root);
}

}  // namespace alaas::server
