// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "pipeline/config.hpp"

#include <charconv>
#include <set>

#include "common/error.hpp"
#include "common/files.hpp"

namespace meltcheck::pipeline {
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, "config: " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) bad("unknown key '" + key + "' in " + where);
  }
}

planner::MaxDepth depth_from_json(const json& v) {
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "unlimited")) return std::nullopt;
  if (!v.is_number_integer() || v.get<long long>() < 1) bad("plan.max_depth must be >= 1 or \"unlimited\"");
  return static_cast<unsigned>(v.get<long long>());
}

}  // namespace

fs::path default_lexicon_path() {
#ifdef MELTCHECK_DEFAULT_LEXICON
  return MELTCHECK_DEFAULT_LEXICON;
#else
  return "data/lexicon.json";
#endif
}

planner::MaxDepth parse_max_depth(const std::string& text) {
  if (text == "unlimited") return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw Error(ErrorCode::invalid_argument, "max depth must be a positive integer or 'unlimited', got '" + text + "'");
  }
  return value;
}

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) bad("top level must be an object");
  reject_unknown(doc, {"corpus", "out", "plan", "backend", "melt", "adapters", "reference_adapter",
                       "lexicon", "jobs"},
                 "config");
  RunConfig c;
  try {
    if (doc.contains("corpus")) c.corpus = resolve(doc["corpus"].get<std::string>(), base_dir);
    if (doc.contains("out")) c.out = resolve(doc["out"].get<std::string>(), base_dir);
    if (doc.contains("plan")) {
      const json& p = doc["plan"];
      reject_unknown(p, {"max_depth", "pair_budget"}, "plan");
      if (p.contains("max_depth")) c.plan.max_depth = depth_from_json(p["max_depth"]);
      if (p.contains("pair_budget") && !p["pair_budget"].is_null()) {
        c.plan.pair_budget = p["pair_budget"].get<std::size_t>();
      }
    }
    if (doc.contains("backend")) c.backend = melter::BackendConfig::from_json(doc["backend"]);
    if (doc.contains("melt")) {
      const json& m = doc["melt"];
      reject_unknown(m, {"mask_margin", "max_mask_ratio", "strict_preservation"}, "melt");
      c.melt.mask_margin = m.value("mask_margin", c.melt.mask_margin);
      c.melt.max_mask_ratio = m.value("max_mask_ratio", c.melt.max_mask_ratio);
      c.melt.strict_preservation = m.value("strict_preservation", c.melt.strict_preservation);
    }
    if (doc.contains("adapters")) {
      for (const auto& a : doc["adapters"]) c.adapters.push_back(captioner::AdapterConfig::from_json(a, base_dir));
    }
    if (doc.contains("reference_adapter") && !doc["reference_adapter"].is_null()) {
      c.reference_adapter = doc["reference_adapter"].get<std::string>();
    }
    if (doc.contains("lexicon")) {
      const json& l = doc["lexicon"];
      reject_unknown(l, {"path", "depth", "pair_relative"}, "lexicon");
      if (l.contains("path")) c.lexicon_path = resolve(l["path"].get<std::string>(), base_dir);
      c.lexicon.depth = l.value("depth", c.lexicon.depth);
      c.lexicon.pair_relative = l.value("pair_relative", c.lexicon.pair_relative);
    }
    c.jobs = doc.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    bad(e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  return from_json(read_json(file), file.parent_path());
}

json RunConfig::to_json() const {
  json adapters = json::array();
  for (const auto& a : this->adapters) adapters.push_back(a.to_json());
  json plan_json{{"max_depth", plan.max_depth ? json(*plan.max_depth) : json("unlimited")},
                 {"pair_budget", plan.pair_budget ? json(*plan.pair_budget) : json(nullptr)}};
  return json{{"corpus", corpus.string()},
              {"out", out.string()},
              {"plan", plan_json},
              {"backend", backend.to_json()},
              {"melt",
               {{"mask_margin", melt.mask_margin},
                {"max_mask_ratio", melt.max_mask_ratio},
                {"strict_preservation", melt.strict_preservation}}},
              {"adapters", adapters},
              {"reference_adapter", reference_adapter ? json(*reference_adapter) : json(nullptr)},
              {"lexicon",
               {{"path", lexicon_path.string()},
                {"depth", lexicon.depth},
                {"pair_relative", lexicon.pair_relative}}},
              {"jobs", jobs}};
}

void RunConfig::validate(bool need_corpus) const {
  if (need_corpus) {
    if (corpus.empty()) bad("corpus path is required");
    if (!fs::exists(corpus)) bad("corpus '" + corpus.string() + "' does not exist");
  }
  if (out.empty()) bad("out directory is required");
  if (plan.max_depth && *plan.max_depth < 1) bad("max_depth must be >= 1");
  if (melt.mask_margin < 0) bad("melt.mask_margin must be >= 0");
  if (!(melt.max_mask_ratio > 0 && melt.max_mask_ratio <= 1)) bad("melt.max_mask_ratio must be in (0, 1]");
  if (lexicon.depth > 16) bad("lexicon.depth must be <= 16");
  if (!fs::is_regular_file(lexicon_path)) bad("lexicon '" + lexicon_path.string() + "' does not exist");
  if (jobs < 1) bad("jobs must be >= 1");
  backend.validate();
  std::set<std::string> ids;
  for (const auto& a : adapters) {
    a.validate();
    if (!ids.insert(a.id).second) bad("duplicate adapter id '" + a.id + "'");
  }
  if (reference_adapter && !ids.count(*reference_adapter)) {
    bad("reference_adapter '" + *reference_adapter + "' is not among the adapters");
  }
}

const captioner::AdapterConfig& RunConfig::audit_adapter() const {
  if (reference_adapter) {
    for (const auto& a : adapters) {
      if (a.id == *reference_adapter) return a;
    }
    bad("reference_adapter '" + *reference_adapter + "' is not among the adapters");
  }
  if (adapters.size() == 1) return adapters.front();
  bad("the ground-truth audit needs reference_adapter when several adapters are configured");
}

captioner::AdapterConfig adapter_from_flag(const std::string& flag) {
  if (flag.rfind("stub:", 0) == 0) {
    std::string rest = flag.substr(5);
    json stub{{"kind", "stub"}};
    auto eq = rest.find('=');
    if (eq != std::string::npos) {
      stub["id"] = rest.substr(0, eq);
      stub["fixture"] = rest.substr(eq + 1);
    } else {
      stub["id"] = fs::path(rest).stem().string();
      stub["fixture"] = rest;
    }
    return captioner::AdapterConfig::from_json(stub);
  }
  fs::path file = flag;
  return captioner::AdapterConfig::from_json(read_json(file), file.parent_path());
}

}  // namespace meltcheck::pipeline
