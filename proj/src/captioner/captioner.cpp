// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "captioner/captioner.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <thread>

#include "common/encoding.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "common/http_util.hpp"
#include "httplib.h"

namespace meltcheck::captioner {
using nlohmann::json;

namespace {

bool valid_adapter_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return id != "." && id != "..";
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

}  // namespace

AdapterConfig AdapterConfig::from_json(const json& value, const std::filesystem::path& base_dir) {
  AdapterConfig c;
  try {
    c.id = value.at("id").get<std::string>();
    std::string kind = value.value("kind", std::string("stub"));
    if (kind == "http") {
      c.kind = AdapterKind::http;
    } else if (kind == "stub") {
      c.kind = AdapterKind::stub;
    } else {
      throw Error(ErrorCode::invalid_argument, "adapter '" + c.id + "': unknown kind '" + kind + "'");
    }
    c.endpoint = value.value("endpoint", c.endpoint);
    c.method = value.value("method", c.method);
    c.image_encoding = value.value("image_encoding", c.image_encoding);
    if (auto it = value.find("request_template"); it != value.end()) {
      c.request_template = it->is_string() ? it->get<std::string>() : it->dump();
    }
    c.caption_pointer = value.value("caption_pointer", c.caption_pointer);
    if (auto it = value.find("headers"); it != value.end()) {
      c.headers = it->get<std::map<std::string, std::string>>();
    }
    c.rate_limit_per_sec = value.value("rate_limit_per_sec", c.rate_limit_per_sec);
    c.max_retries = value.value("max_retries", c.max_retries);
    c.timeout_sec = value.value("timeout_sec", c.timeout_sec);
    c.backoff_initial_sec = value.value("backoff_initial_sec", c.backoff_initial_sec);
    if (auto it = value.find("fixture"); it != value.end()) {
      std::filesystem::path p = it->get<std::string>();
      c.fixture = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("adapter config: ") + e.what());
  }
  c.validate();
  return c;
}

json AdapterConfig::to_json() const {
  json out{{"id", id}, {"kind", kind == AdapterKind::http ? "http" : "stub"}};
  if (kind == AdapterKind::http) {
    out["endpoint"] = endpoint;
    out["method"] = method;
    out["image_encoding"] = image_encoding;
    out["request_template"] = request_template;
    out["caption_pointer"] = caption_pointer;
    out["headers"] = headers;
    out["rate_limit_per_sec"] = rate_limit_per_sec;
    out["max_retries"] = max_retries;
    out["timeout_sec"] = timeout_sec;
    out["backoff_initial_sec"] = backoff_initial_sec;
  } else {
    out["fixture"] = fixture.string();
  }
  return out;
}

void AdapterConfig::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_argument, "adapter '" + id + "': " + what);
  };
  if (!valid_adapter_id(id)) fail("id must be nonempty and use only [A-Za-z0-9_.-]");
  if (kind == AdapterKind::http) {
    if (endpoint.empty()) fail("endpoint is required");
    split_url(endpoint);
    if (caption_pointer.empty() || caption_pointer.front() != '/') {
      fail("caption_pointer must be a nonempty JSON pointer");
    }
    if (image_encoding != "base64-json" && image_encoding != "multipart") {
      fail("image_encoding must be base64-json or multipart");
    }
    if (method != "POST" && method != "PUT") fail("method must be POST or PUT");
    if (max_retries < 0) fail("max_retries must be >= 0");
    if (timeout_sec <= 0) fail("timeout_sec must be positive");
  } else {
    if (fixture.empty()) fail("fixture is required");
    if (!std::filesystem::is_regular_file(fixture)) fail("fixture '" + fixture.string() + "' not found");
  }
}

json CaptionRecord::to_json() const {
  return json{{"adapter_id", adapter_id},
              {"state_key", state_key},
              {"text", text},
              {"latency_ms", latency_ms},
              {"retrieved_at", retrieved_at}};
}

CaptionRecord CaptionRecord::from_json(const json& value) {
  try {
    CaptionRecord r;
    r.adapter_id = value.at("adapter_id").get<std::string>();
    r.state_key = value.at("state_key").get<std::string>();
    r.text = value.at("text").get<std::string>();
    r.latency_ms = value.value("latency_ms", std::int64_t{0});
    r.retrieved_at = value.value("retrieved_at", std::string());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("caption record: ") + e.what());
  }
}

StubAdapter::StubAdapter(std::string id, std::map<std::string, std::string> captions)
    : id_(std::move(id)), captions_(std::move(captions)) {}

std::unique_ptr<StubAdapter> StubAdapter::from_fixture(std::string id,
                                                       const std::filesystem::path& fixture) {
  json doc = read_json(fixture);
  if (!doc.is_object()) {
    throw Error(ErrorCode::invalid_argument,
                "stub fixture '" + fixture.string() + "' must map state keys to captions");
  }
  std::map<std::string, std::string> captions;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::invalid_argument,
                  "stub fixture '" + fixture.string() + "': value for '" + key + "' is not a string");
    }
    captions[key] = value.get<std::string>();
  }
  return std::make_unique<StubAdapter>(std::move(id), std::move(captions));
}

std::string StubAdapter::caption(const std::string& state_key, std::span<const std::uint8_t>) {
  auto it = captions_.find(state_key);
  if (it == captions_.end()) {
    throw Error(ErrorCode::adapter, "adapter '" + id_ + "': fixture has no caption for " + state_key);
  }
  return it->second;
}

std::string extract_caption(const std::string& body, const std::string& pointer) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::adapter, "response is not JSON");
  try {
    const json& node = doc.at(json::json_pointer(pointer));
    if (!node.is_string()) {
      throw Error(ErrorCode::adapter, "caption pointer " + pointer + " does not name a string");
    }
    return node.get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::adapter, "caption pointer " + pointer + " resolves to nothing");
  }
}

HttpAdapter::HttpAdapter(AdapterConfig config)
    : config_(std::move(config)), limiter_(config_.rate_limit_per_sec) {
  config_.validate();
}

std::string HttpAdapter::caption(const std::string& state_key, std::span<const std::uint8_t> png) {
  UrlParts url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  auto timeout = std::chrono::duration<double>(config_.timeout_sec);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  for (const auto& [name, value] : config_.headers) {
    std::vector<std::string> missing;
    std::string expanded = interpolate_env(value, &missing);
    for (const auto& var : missing) {
      spdlog::warn("adapter '{}': header {} uses unset variable {}", config_.id, name, var);
    }
    headers.emplace(name, expanded);
  }

  std::string body;
  httplib::MultipartFormDataItems form;
  const bool multipart = config_.image_encoding == "multipart";
  if (multipart) {
    form.push_back({"image", std::string(png.begin(), png.end()), "image.png", "image/png"});
  } else {
    body = config_.request_template;
    replace_all(body, "{image}", base64_encode(png));
    replace_all(body, "{state_key}", state_key);
  }

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      auto delay = std::chrono::duration<double>(config_.backoff_initial_sec * (1 << (attempt - 1)));
      spdlog::info("adapter '{}': retry {} for {} after {}", config_.id, attempt, state_key,
                   last_failure);
      std::this_thread::sleep_for(delay);
    }
    limiter_.acquire();
    httplib::Result res;
    if (multipart) {
      res = config_.method == "PUT" ? client.Put(url.path, headers, form)
                                    : client.Post(url.path, headers, form);
    } else {
      res = config_.method == "PUT" ? client.Put(url.path, headers, body, "application/json")
                                    : client.Post(url.path, headers, body, "application/json");
    }
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return extract_caption(res->body, config_.caption_pointer);
    last_failure = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw Error(ErrorCode::adapter, "adapter '" + config_.id + "' at " + config_.endpoint + " failed for " +
                                      state_key + ": " + last_failure);
}

std::unique_ptr<Adapter> make_adapter(const AdapterConfig& config) {
  if (config.kind == AdapterKind::stub) return StubAdapter::from_fixture(config.id, config.fixture);
  return std::make_unique<HttpAdapter>(config);
}

CaptionCache::CaptionCache(std::filesystem::path file) : file_(std::move(file)) {
  for (const auto& line : read_jsonl(*file_)) {
    if (!line.parse_ok) {
      spdlog::warn("{}:{}: skipping unparseable caption record", file_->string(), line.line_number);
      continue;
    }
    try {
      CaptionRecord r = CaptionRecord::from_json(line.value);
      records_[{r.adapter_id, r.state_key}] = std::move(r);
    } catch (const Error& e) {
      spdlog::warn("{}:{}: {}", file_->string(), line.line_number, e.what());
    }
  }
}

std::optional<CaptionRecord> CaptionCache::find(const std::string& adapter_id,
                                                const std::string& state_key) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find({adapter_id, state_key});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void CaptionCache::put(const CaptionRecord& record) {
  std::lock_guard lock(mutex_);
  if (file_) {
    std::filesystem::create_directories(file_->parent_path());
    append_line_durable(*file_, to_jsonl(record.to_json()));
  }
  records_[{record.adapter_id, record.state_key}] = record;
}

std::size_t CaptionCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

CaptionRecord Captioner::caption(const planner::MeltState& state, const ImageSource& images) {
  const std::string key = planner::state_key(state);
  if (auto hit = cache_.find(adapter_.id(), key)) return *hit;

  std::promise<CaptionRecord> promise;
  std::shared_future<CaptionRecord> pending;
  {
    std::lock_guard lock(mutex_);
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      pending = it->second;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  try {
    std::vector<std::uint8_t> png = images(state);
    ++calls_;
    auto start = std::chrono::steady_clock::now();
    CaptionRecord record;
    record.adapter_id = adapter_.id();
    record.state_key = key;
    record.text = adapter_.caption(key, png);
    if (adapter_.reports_latency()) {
      record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    }
    record.retrieved_at = utc_timestamp();
    if (record.text.empty()) spdlog::info("adapter '{}': empty caption for {}", adapter_.id(), key);
    cache_.put(record);
    promise.set_value(record);
    return record;
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::vector<PairCaptions> caption_pairs(const std::vector<planner::MeltPair>& pairs,
                                        Captioner& captioner,
                                        const Captioner::ImageSource& images, unsigned jobs) {
  std::vector<planner::MeltState> states = planner::unique_states(pairs);
  struct Outcome {
    std::optional<CaptionRecord> record;
    std::string error;
  };
  std::vector<Outcome> outcomes(states.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < states.size(); i = next++) {
      try {
        outcomes[i].record = captioner.caption(states[i], images);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1 || states.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, states.size()); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  auto lookup = [&](const planner::MeltState& s) -> const Outcome& {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    return outcomes[static_cast<std::size_t>(it - states.begin())];
  };
  std::vector<PairCaptions> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    PairCaptions pc;
    const Outcome& a = lookup(pair.ancestor);
    const Outcome& d = lookup(pair.descendant);
    pc.ancestor = a.record;
    pc.descendant = d.record;
    if (!a.record) pc.error = "ancestor " + planner::state_key(pair.ancestor) + ": " + a.error;
    if (!d.record) {
      if (!pc.error.empty()) pc.error += "; ";
      pc.error += "descendant " + planner::state_key(pair.descendant) + ": " + d.error;
    }
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace meltcheck::captioner
