// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

// meltcheck command-line driver. Talks to the library only through the C API.

#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "meltcheck/meltcheck.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string corpus;
  std::string out;
  std::string max_depth;
  std::optional<std::size_t> pair_budget;
  std::string backend;
  std::vector<std::string> adapters;
  std::string reference_adapter;
  std::optional<unsigned> jobs;
  std::optional<unsigned> depth_d;
  bool pair_relative = false;
  std::string lexicon;
  std::string log_level = "warn";
};

class Failure : public std::exception {
 public:
  Failure(int status, std::string body) : status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

[[noreturn]] void usage_error(const std::string& message) {
  throw Failure(MC_ERR_INVALID_ARGUMENT,
                json{{"error", {{"code", "invalid_argument"}, {"message", message}}}}.dump());
}

void check(mc_status status) {
  if (status == MC_OK) return;
  const char* err = mc_last_error();
  std::string body = err ? json{{"error", json::parse(err)}}.dump()
                         : json{{"error", {{"code", mc_status_name(status)}, {"message", ""}}}}.dump();
  throw Failure(status, body);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mc_free(s);
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot read " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) usage_error(path.string() + " is not valid JSON");
  return doc;
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

json adapter_json(const std::string& flag) {
  if (flag.rfind("stub:", 0) == 0) {
    std::string rest = flag.substr(5);
    auto eq = rest.find('=');
    std::string id = eq == std::string::npos ? fs::path(rest).stem().string() : rest.substr(0, eq);
    std::string fixture = eq == std::string::npos ? rest : rest.substr(eq + 1);
    return json{{"id", id}, {"kind", "stub"}, {"fixture", absolute(fixture)}};
  }
  json doc = read_json_file(flag);
  if (doc.contains("fixture") && doc["fixture"].is_string()) {
    fs::path f = doc["fixture"].get<std::string>();
    if (f.is_relative()) doc["fixture"] = (fs::absolute(flag).parent_path() / f).lexically_normal().string();
  }
  return doc;
}

json backend_json(const std::string& flag) {
  if (flag == "builtin") return json{{"kind", "builtin"}};
  if (flag.rfind("http://", 0) == 0 || flag.rfind("https://", 0) == 0) return json{{"kind", "http"}, {"endpoint", flag}};
  if (flag.rfind("http:", 0) == 0) return json{{"kind", "http"}, {"endpoint", flag.substr(5)}};
  if (flag.rfind("command:", 0) == 0) return json{{"kind", "command"}, {"command", flag.substr(8)}};
  if (fs::is_regular_file(flag)) return read_json_file(flag);
  usage_error("--backend expects builtin, http:URL, command:TEMPLATE or a JSON file");
}

// Merges --config with the individual flags (flags win).
std::pair<json, std::string> build_config(const Options& o) {
  json cfg = json::object();
  std::string base_dir;
  if (!o.config.empty()) {
    cfg = read_json_file(o.config);
    base_dir = fs::absolute(o.config).parent_path().string();
  }
  if (!o.corpus.empty()) cfg["corpus"] = absolute(o.corpus);
  if (!o.out.empty()) cfg["out"] = absolute(o.out);
  if (!cfg.contains("out")) cfg["out"] = absolute("out");
  if (!o.max_depth.empty()) {
    if (o.max_depth == "unlimited") {
      cfg["plan"]["max_depth"] = "unlimited";
    } else {
      try {
        std::size_t used = 0;
        long long d = std::stoll(o.max_depth, &used);
        if (used != o.max_depth.size() || d < 1) throw std::invalid_argument("");
        cfg["plan"]["max_depth"] = d;
      } catch (const std::exception&) {
        usage_error("--max-depth must be a positive integer or 'unlimited'");
      }
    }
  }
  if (o.pair_budget) cfg["plan"]["pair_budget"] = *o.pair_budget;
  if (!o.backend.empty()) cfg["backend"] = backend_json(o.backend);
  if (!o.adapters.empty()) {
    cfg["adapters"] = json::array();
    for (const auto& a : o.adapters) cfg["adapters"].push_back(adapter_json(a));
  }
  if (!o.reference_adapter.empty()) cfg["reference_adapter"] = o.reference_adapter;
  if (o.jobs) cfg["jobs"] = *o.jobs;
  if (o.depth_d) cfg["lexicon"]["depth"] = *o.depth_d;
  if (o.pair_relative) cfg["lexicon"]["pair_relative"] = true;
  if (!o.lexicon.empty()) cfg["lexicon"]["path"] = absolute(o.lexicon);
  return {cfg, base_dir};
}

struct Context {
  mc_context* ctx = nullptr;
  explicit Context(const Options& o) {
    auto [cfg, base] = build_config(o);
    check(mc_context_create(cfg.dump().c_str(), base.empty() ? nullptr : base.c_str(), &ctx));
  }
  ~Context() { mc_context_destroy(ctx); }
};

void print_json(const std::string& text) { std::cout << json::parse(text).dump(2) << std::endl; }

using Stage = mc_status (*)(mc_context*, char**);

void run_stage(const Options& o, Stage stage) {
  Context c(o);
  char* out = nullptr;
  check(stage(c.ctx, &out));
  print_json(take(out));
}

int serve(const Options& o, const std::string& bind, int port, const std::string& static_dir) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Context c(o);
  mc_server* server = nullptr;
  check(mc_server_start(c.ctx, bind.c_str(), port, static_dir.empty() ? nullptr : static_dir.c_str(), &server));
  std::cout << json{{"serving", "http://" + bind + ":" + std::to_string(mc_server_port(server))}}.dump()
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  mc_server_stop(server);
  mc_server_destroy(server);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meltcheck: metamorphic testing of image captioning systems"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--corpus", o.corpus, "Corpus directory or manifest");
  app.add_option("--out", o.out, "Output directory (default ./out)");
  app.add_option("--max-depth", o.max_depth, "Largest removed set size, or 'unlimited' (default 2)");
  app.add_option("--pair-budget", o.pair_budget, "Per-seed pair cap");
  app.add_option("--backend", o.backend, "builtin | http:URL | command:TEMPLATE | backend JSON file");
  app.add_option("--adapter", o.adapters, "Adapter JSON file or stub:[ID=]FIXTURE (repeatable)");
  app.add_option("--reference-adapter", o.reference_adapter, "Adapter id used for the GT audit");
  app.add_option("--jobs", o.jobs, "Parallel backend/adapter calls")->check(CLI::PositiveNumber);
  app.add_option("--depth-d", o.depth_d, "Hypernym rounds for synonym mapping (default 3)");
  app.add_flag("--pair-relative-keywords", o.pair_relative, "Map nouns only onto keywords the pair names");
  app.add_option("--lexicon", o.lexicon, "Lexicon data file");
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off");

  auto* import = app.add_subcommand("import-coco", "Convert COCO annotations into a corpus manifest");
  std::string instances, captions, images, manifest;
  import->add_option("--instances", instances)->required()->check(CLI::ExistingFile);
  import->add_option("--captions", captions)->check(CLI::ExistingFile);
  import->add_option("--images", images, "Directory holding the COCO image files")->required();
  import->add_option("--manifest", manifest, "Output corpus.json")->required();

  auto* plan = app.add_subcommand("plan", "Enumerate ancestor/descendant pairs");
  auto* melt = app.add_subcommand("melt", "Inpaint every planned state");
  auto* caption = app.add_subcommand("caption", "Caption every planned state with each adapter");
  auto* check_cmd = app.add_subcommand("check", "Check the metamorphic relations");
  auto* audit = app.add_subcommand("audit-gt", "Audit ground-truth captions");
  auto* run = app.add_subcommand("run", "plan, melt, caption, check and audit-gt");
  auto* precision = app.add_subcommand("precision", "Precision over triage verdicts");
  std::string verdicts;
  bool precision_json = false;
  precision->add_option("--verdicts", verdicts, "Verdicts JSONL (default OUT/verdicts.jsonl)");
  precision->add_flag("--json", precision_json, "Print full statistics as JSON");
  auto* count = app.add_subcommand("count-pairs", "Closed-form pair count");
  unsigned count_m = 0;
  count->add_option("m", count_m, "Number of meltable objects")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Serve the triage API");
  std::string bind = "127.0.0.1", static_dir;
  int port = 8600;
  serve_cmd->add_option("--bind", bind);
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--static", static_dir, "Directory of UI assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", {{"code", "invalid_argument"}, {"message", e.what()}}}}.dump() << std::endl;
    return MC_ERR_INVALID_ARGUMENT;
  }

  try {
    check(mc_set_log_level(o.log_level.c_str()));
    if (*import) {
      char* out = nullptr;
      check(mc_import_coco(instances.c_str(), captions.empty() ? nullptr : captions.c_str(), images.c_str(),
                           manifest.c_str(), &out));
      print_json(take(out));
    } else if (*plan) {
      run_stage(o, mc_plan);
    } else if (*melt) {
      run_stage(o, mc_melt);
    } else if (*caption) {
      run_stage(o, mc_caption);
    } else if (*check_cmd) {
      run_stage(o, mc_check);
    } else if (*audit) {
      run_stage(o, mc_audit_gt);
    } else if (*run) {
      run_stage(o, mc_run);
    } else if (*precision) {
      Context c(o);
      char* out = nullptr;
      check(mc_precision(c.ctx, verdicts.empty() ? nullptr : verdicts.c_str(), &out));
      json stats = json::parse(take(out));
      if (precision_json) {
        std::cout << stats.dump(2) << std::endl;
      } else {
        std::cout << stats["precision_text"].get<std::string>() << " (" << stats["erroneous"] << "/"
                  << stats["labeled"] << " labeled, " << stats["pending"] << " pending)" << std::endl;
      }
    } else if (*count) {
      uint64_t n = 0;
      int32_t depth = 2;
      if (o.max_depth == "unlimited") {
        depth = 0;
      } else if (!o.max_depth.empty()) {
        std::size_t used = 0;
        try {
          depth = std::stoi(o.max_depth, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != o.max_depth.size() || depth < 1) usage_error("--max-depth must be a positive integer or 'unlimited'");
      }
      check(mc_count_pairs(count_m, depth, &n));
      std::cout << n << std::endl;
    } else if (*serve_cmd) {
      return serve(o, bind, port, static_dir);
    }
  } catch (const Failure& f) {
    std::cerr << f.body() << std::endl;
    return f.status();
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << std::endl;
    return MC_ERR_INTERNAL;
  }
  return 0;
}
