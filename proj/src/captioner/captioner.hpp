// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "captioner/rate_limiter.hpp"
#include "json.hpp"
#include "planner/planner.hpp"

namespace meltcheck::captioner {

enum class AdapterKind { http, stub };

struct AdapterConfig {
  std::string id;
  AdapterKind kind = AdapterKind::stub;

  // http
  std::string endpoint;
  std::string method = "POST";
  std::string image_encoding = "base64-json";  // or "multipart"
  // JSON body for base64-json; "{image}" and "{state_key}" are substituted.
  std::string request_template = R"({"image": "{image}"})";
  std::string caption_pointer;
  std::map<std::string, std::string> headers;  // values may use ${VAR}
  double rate_limit_per_sec = 0;                // <= 0: unlimited
  int max_retries = 3;
  double timeout_sec = 30;
  double backoff_initial_sec = 0.5;

  // stub
  std::filesystem::path fixture;

  /// Relative fixture paths resolve against `base_dir`.
  static AdapterConfig from_json(const nlohmann::json& value,
                                 const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
  /// Throws Error(invalid_argument) when the invariants do not hold.
  void validate() const;
};

struct CaptionRecord {
  std::string adapter_id;
  std::string state_key;
  std::string text;  // empty = the adapter answered with no caption
  std::int64_t latency_ms = 0;
  std::string retrieved_at;

  bool empty_caption() const { return text.empty(); }
  nlohmann::json to_json() const;
  static CaptionRecord from_json(const nlohmann::json& value);
};

/// The IC system under test.
class Adapter {
 public:
  virtual ~Adapter() = default;
  virtual const std::string& id() const = 0;
  /// Returns the caption text, possibly empty. Throws Error(adapter).
  virtual std::string caption(const std::string& state_key,
                              std::span<const std::uint8_t> png) = 0;
  /// Fixture-backed adapters record latency 0 so their output is reproducible.
  virtual bool reports_latency() const { return true; }
};

/// Looks captions up by state key in a JSON object fixture.
class StubAdapter final : public Adapter {
 public:
  StubAdapter(std::string id, std::map<std::string, std::string> captions);
  static std::unique_ptr<StubAdapter> from_fixture(std::string id,
                                                   const std::filesystem::path& fixture);
  const std::string& id() const override { return id_; }
  std::string caption(const std::string& state_key, std::span<const std::uint8_t> png) override;
  bool reports_latency() const override { return false; }

 private:
  std::string id_;
  std::map<std::string, std::string> captions_;
};

class HttpAdapter final : public Adapter {
 public:
  explicit HttpAdapter(AdapterConfig config);
  const std::string& id() const override { return config_.id; }
  std::string caption(const std::string& state_key, std::span<const std::uint8_t> png) override;
  /// Retries performed so far (all calls).
  std::size_t retries() const { return retries_.load(); }

 private:
  AdapterConfig config_;
  RateLimiter limiter_;
  std::atomic<std::size_t> retries_{0};
};

std::unique_ptr<Adapter> make_adapter(const AdapterConfig& config);

/// Extracts the string at `pointer` from a JSON response body.
/// Throws Error(adapter) if it is absent or not a string.
std::string extract_caption(const std::string& body, const std::string& pointer);

/// Persistent (adapter_id, state_key) -> CaptionRecord store. A JSON-lines
/// file is the backing store; later lines win on load.
class CaptionCache {
 public:
  CaptionCache() = default;
  explicit CaptionCache(std::filesystem::path file);

  std::optional<CaptionRecord> find(const std::string& adapter_id,
                                    const std::string& state_key) const;
  void put(const CaptionRecord& record);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, CaptionRecord> records_;
};

/// Deduplicating front end over an adapter: one adapter call per state key,
/// concurrent callers for an in-flight key wait for the first.
class Captioner {
 public:
  Captioner(Adapter& adapter, CaptionCache& cache) : adapter_(adapter), cache_(cache) {}

  using ImageSource = std::function<std::vector<std::uint8_t>(const planner::MeltState&)>;

  CaptionRecord caption(const planner::MeltState& state, const ImageSource& images);
  std::size_t adapter_calls() const { return calls_.load(); }
  const std::string& adapter_id() const { return adapter_.id(); }

 private:
  Adapter& adapter_;
  CaptionCache& cache_;
  std::atomic<std::size_t> calls_{0};
  std::mutex mutex_;
  std::map<std::string, std::shared_future<CaptionRecord>> in_flight_;
};

struct PairCaptions {
  std::optional<CaptionRecord> ancestor;
  std::optional<CaptionRecord> descendant;
  std::string error;  // set when either side failed

  bool ok() const { return ancestor && descendant; }
};

/// Captions every pair, in input order. A failing state marks only the pairs
/// that use it. `jobs` bounds concurrent adapter calls.
std::vector<PairCaptions> caption_pairs(const std::vector<planner::MeltPair>& pairs,
                                        Captioner& captioner,
                                        const Captioner::ImageSource& images,
                                        unsigned jobs = 1);

}  // namespace meltcheck::captioner
