// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "meltcheck/meltcheck.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>

#include "common/error.hpp"
#include "oracle/oracle.hpp"
#include "pipeline/coco_import.hpp"
#include "pipeline/pipeline.hpp"
#include "planner/planner.hpp"
#include "reportd/server.hpp"

using meltcheck::Error;
using meltcheck::ErrorCode;
using nlohmann::json;

struct mc_context {
  std::unique_ptr<meltcheck::pipeline::Pipeline> pipeline;
  std::mutex mutex;  // stages are not reentrant
};

struct mc_server {
  std::unique_ptr<meltcheck::reportd::IssueStore> store;
  std::unique_ptr<meltcheck::reportd::Server> server;
};

namespace {

thread_local std::string g_last_error;

void use_stderr_logger() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("meltcheck");
    spdlog::set_default_logger(logger);
  });
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

mc_status fail(ErrorCode code, const std::string& message) {
  g_last_error = json{{"code", meltcheck::to_string(code)}, {"message", message}}.dump();
  return static_cast<mc_status>(code);
}

// Runs fn, mapping exceptions onto status codes and the thread's last error.
template <typename Fn>
mc_status guarded(Fn fn) {
  g_last_error.clear();
  try {
    fn();
    return MC_OK;
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const json::exception& e) {
    return fail(ErrorCode::invalid_argument, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ErrorCode::io, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::internal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::internal, e.what());
  }
}

template <typename Stage>
mc_status run_stage(mc_context* ctx, char** out, Stage stage) {
  if (!ctx || !out) return fail(ErrorCode::invalid_argument, "null argument");
  return guarded([&] {
    std::lock_guard lock(ctx->mutex);
    json summary = stage(*ctx->pipeline);
    *out = dup_string(summary.dump());
  });
}

}  // namespace

extern "C" {

const char* mc_version(void) { return "0.1.0"; }

const char* mc_status_name(mc_status status) {
  switch (status) {
    case MC_OK: return "ok";
    case MC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MC_ERR_IO: return "io";
    case MC_ERR_CORPUS: return "corpus";
    case MC_ERR_BACKEND: return "backend";
    case MC_ERR_ADAPTER: return "adapter";
    case MC_ERR_OVERFLOW: return "overflow";
    case MC_ERR_NOT_FOUND: return "not_found";
    case MC_ERR_CONFLICT: return "conflict";
    case MC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void mc_free(char* p) { std::free(p); }

const char* mc_last_error(void) { return g_last_error.empty() ? nullptr : g_last_error.c_str(); }

mc_status mc_set_log_level(const char* level) {
  if (!level) return fail(ErrorCode::invalid_argument, "null level");
  use_stderr_logger();
  auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0) {
    return fail(ErrorCode::invalid_argument, std::string("unknown log level '") + level + "'");
  }
  spdlog::set_level(parsed);
  return MC_OK;
}

mc_status mc_context_create(const char* config_json, const char* base_dir, mc_context** out) {
  if (!config_json || !out) return fail(ErrorCode::invalid_argument, "null argument");
  use_stderr_logger();
  return guarded([&] {
    json doc = json::parse(config_json);
    auto config = meltcheck::pipeline::RunConfig::from_json(doc, base_dir ? base_dir : "");
    config.validate(/*need_corpus=*/false);
    auto ctx = std::make_unique<mc_context>();
    ctx->pipeline = std::make_unique<meltcheck::pipeline::Pipeline>(std::move(config));
    *out = ctx.release();
  });
}

void mc_context_destroy(mc_context* ctx) { delete ctx; }

mc_status mc_context_config(mc_context* ctx, char** config_json) {
  return run_stage(ctx, config_json, [](auto& p) { return p.config().to_json(); });
}

mc_status mc_plan(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.plan(); }); }
mc_status mc_melt(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.melt(); }); }
mc_status mc_caption(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.caption(); }); }
mc_status mc_check(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.check(); }); }
mc_status mc_audit_gt(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.audit_gt(); }); }
mc_status mc_run(mc_context* ctx, char** s) { return run_stage(ctx, s, [](auto& p) { return p.run(); }); }

mc_status mc_precision(mc_context* ctx, const char* verdicts_path, char** stats_json) {
  std::optional<std::filesystem::path> path;
  if (verdicts_path) path = verdicts_path;
  return run_stage(ctx, stats_json, [&](auto& p) { return p.precision(path); });
}

mc_status mc_import_coco(const char* instances_json, const char* captions_json, const char* image_dir,
                         const char* manifest_out, char** report_json) {
  if (!instances_json || !image_dir || !manifest_out || !report_json) {
    return fail(ErrorCode::invalid_argument, "null argument");
  }
  use_stderr_logger();
  return guarded([&] {
    std::optional<std::filesystem::path> caps;
    if (captions_json) caps = captions_json;
    auto report = meltcheck::pipeline::import_coco(instances_json, caps, image_dir, manifest_out);
    *report_json = dup_string(report.to_json().dump());
  });
}

mc_status mc_count_pairs(uint32_t m, int32_t max_depth, uint64_t* out) {
  if (!out) return fail(ErrorCode::invalid_argument, "null argument");
  return guarded([&] {
    meltcheck::planner::MaxDepth d;
    if (max_depth > 0) d = static_cast<unsigned>(max_depth);
    *out = meltcheck::planner::count_pairs(m, d);
  });
}

mc_status mc_format_precision(uint64_t erroneous, uint64_t labeled, char** out) {
  if (!out) return fail(ErrorCode::invalid_argument, "null argument");
  return guarded([&] { *out = dup_string(meltcheck::oracle::format_precision(erroneous, labeled)); });
}

mc_status mc_server_start(mc_context* ctx, const char* bind, int port, const char* static_dir, mc_server** out) {
  if (!ctx || !out) return fail(ErrorCode::invalid_argument, "null argument");
  if (port < 0 || port > 65535) return fail(ErrorCode::invalid_argument, "port out of range");
  return guarded([&] {
    const auto& layout = ctx->pipeline->layout();
    auto srv = std::make_unique<mc_server>();
    srv->store = std::make_unique<meltcheck::reportd::IssueStore>(layout.issues(), layout.verdicts());
    meltcheck::reportd::ServerOptions options;
    if (bind) options.bind = bind;
    options.port = port;
    options.image_dir = layout.images();
    if (static_dir) options.static_dir = static_dir;
    srv->server = std::make_unique<meltcheck::reportd::Server>(*srv->store, options);
    srv->server->start();
    *out = srv.release();
  });
}

int mc_server_port(const mc_server* server) { return server ? server->server->port() : -1; }

void mc_server_wait(mc_server* server) {
  if (server) server->server->wait();
}

void mc_server_stop(mc_server* server) {
  if (server) server->server->stop();
}

void mc_server_destroy(mc_server* server) { delete server; }

}  // extern "C"
