// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "common/png_codec.hpp"
#include "corpus/corpus.hpp"
#include "json.hpp"
#include "planner/planner.hpp"

namespace meltcheck::melter {

struct BuiltinParams {
  int max_iterations = 500;
  double tolerance = 0.01;  // in 8-bit intensity units
};

struct InpaintResult {
  Image image;
  int iterations = 0;
  double last_change = 0;  // largest per-pixel update in the final sweep
};

/// Harmonic fill of the masked pixels. Values are Q16 fixed point; each sweep
/// visits masked pixels in raster order and replaces them with the rounded
/// mean of their in-image 4-neighbours (Gauss-Seidel). The masked region
/// starts at the per-channel mean of the unmasked pixels bordering it.
/// Throws Error(invalid_argument) on a size mismatch or a fully masked image.
InpaintResult builtin_inpaint(const Image& image, const GrayImage& mask,
                              const BuiltinParams& params = {});

enum class BackendKind { builtin, http, command };

struct BackendConfig {
  BackendKind kind = BackendKind::builtin;
  BuiltinParams builtin;
  std::string endpoint;  // http
  std::string command;   // command: uses {image_in} {mask_in} {image_out}
  double timeout_sec = 120;
  int max_retries = 2;
  double backoff_initial_sec = 0.5;

  static BackendConfig from_json(const nlohmann::json& value);
  /// "builtin", "http:URL" or "command:TEMPLATE".
  static BackendConfig from_flag(const std::string& flag);
  nlohmann::json to_json() const;
  void validate() const;
};

class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  /// Recorded as backend_id on every melted image.
  virtual std::string id() const = 0;
  /// Throws Error(backend) on failure.
  virtual Image inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) = 0;
};

class BuiltinBackend final : public InpaintBackend {
 public:
  explicit BuiltinBackend(BuiltinParams params = {}) : params_(params) {}
  std::string id() const override;
  Image inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) override;

 private:
  BuiltinParams params_;
};

/// POST {"image": b64 png, "mask": b64 png} -> {"image": b64 png}.
class HttpBackend final : public InpaintBackend {
 public:
  explicit HttpBackend(BackendConfig config);
  std::string id() const override { return "http:" + config_.endpoint; }
  Image inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) override;
  std::size_t retries() const { return retries_.load(); }

 private:
  BackendConfig config_;
  std::atomic<std::size_t> retries_{0};
};

/// Runs a shell command over temp files.
class CommandBackend final : public InpaintBackend {
 public:
  explicit CommandBackend(BackendConfig config);
  std::string id() const override { return "command"; }
  Image inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) override;

 private:
  BackendConfig config_;
};

std::unique_ptr<InpaintBackend> make_backend(const BackendConfig& config);

struct MeltOptions {
  int mask_margin = corpus::kDefaultMaskMargin;
  double max_mask_ratio = 0.5;       // states masking more than this are skipped
  bool strict_preservation = false;  // error instead of restoring unmasked pixels
};

struct MeltedImage {
  std::string state_key;
  std::string seed_id;
  std::vector<int> removed;
  std::vector<std::uint8_t> png;  // empty when skipped
  std::string backend_id;
  double mask_ratio = 0;
  bool skipped = false;
  std::string skip_reason;

  nlohmann::json to_json() const;  // provenance only, no pixels
};

/// Melts states through one backend, at most one backend call per state.
/// With a cache directory, results persist as {dir}/{seed_id}/{suffix}.png
/// and are reused across runs.
class Melter {
 public:
  Melter(InpaintBackend& backend, MeltOptions options,
         std::optional<std::filesystem::path> cache_dir = std::nullopt);

  /// Throws Error(invalid_argument) if the state removes an id that is not
  /// meltable in `seed`, Error(backend) if the backend fails.
  MeltedImage melt(const corpus::SeedImage& seed, const planner::MeltState& state);

  std::size_t backend_calls() const { return calls_.load(); }
  std::optional<std::filesystem::path> cache_path(const planner::MeltState& state) const;

 private:
  MeltedImage compute(const corpus::SeedImage& seed, const planner::MeltState& state);

  InpaintBackend& backend_;
  MeltOptions options_;
  std::optional<std::filesystem::path> cache_dir_;
  std::atomic<std::size_t> calls_{0};
  std::mutex mutex_;
  std::map<std::string, std::shared_future<MeltedImage>> results_;
};

}  // namespace meltcheck::melter
