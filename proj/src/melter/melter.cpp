// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "melter/melter.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "common/encoding.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "common/http_util.hpp"
#include "common/subprocess.hpp"
#include "httplib.h"

namespace meltcheck::melter {
using nlohmann::json;

namespace {

constexpr int kFrac = 16;
constexpr std::int64_t kOne = std::int64_t{1} << kFrac;

void check_dimensions(const Image& got, const Image& expected, const std::string& state_key,
                      const std::string& backend) {
  if (got.width != expected.width || got.height != expected.height) {
    throw Error(ErrorCode::backend, "dimension mismatch for " + state_key + " from " + backend +
                                        ": got " + std::to_string(got.width) + "x" +
                                        std::to_string(got.height) + ", expected " +
                                        std::to_string(expected.width) + "x" +
                                        std::to_string(expected.height));
  }
}

std::string backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::builtin: return "builtin";
    case BackendKind::http: return "http";
    case BackendKind::command: return "command";
  }
  return "builtin";
}

}  // namespace

InpaintResult builtin_inpaint(const Image& image, const GrayImage& mask, const BuiltinParams& params) {
  if (mask.width != image.width || mask.height != image.height) {
    throw Error(ErrorCode::invalid_argument, "mask size does not match image size");
  }
  const int w = image.width, h = image.height;
  const std::size_t n = image.pixel_count();
  InpaintResult result{image, 0, 0};

  std::vector<std::size_t> holes;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask.pixels[i] != 0) holes.push_back(i);
  }
  if (holes.empty()) return result;
  if (holes.size() == n) throw Error(ErrorCode::invalid_argument, "cannot inpaint a fully masked image");

  auto masked = [&](int x, int y) { return mask.pixels[static_cast<std::size_t>(y) * w + x] != 0; };

  // Seed value: per-channel mean over unmasked pixels touching the hole.
  std::int64_t sum[3] = {0, 0, 0};
  std::int64_t border = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (masked(x, y)) continue;
      bool touches = (x > 0 && masked(x - 1, y)) || (x + 1 < w && masked(x + 1, y)) ||
                     (y > 0 && masked(x, y - 1)) || (y + 1 < h && masked(x, y + 1));
      if (!touches) continue;
      const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) sum[c] += image.rgb[p + c];
      ++border;
    }
  }

  std::vector<std::int64_t> field(n * 3);
  for (std::size_t i = 0; i < n * 3; ++i) field[i] = std::int64_t{image.rgb[i]} << kFrac;
  for (std::size_t i : holes) {
    for (int c = 0; c < 3; ++c) field[i * 3 + c] = ((sum[c] << kFrac) + border / 2) / border;
  }

  const std::int64_t tol = static_cast<std::int64_t>(std::llround(params.tolerance * kOne));
  std::int64_t change = 0;
  while (result.iterations < params.max_iterations) {
    ++result.iterations;
    change = 0;
    for (std::size_t i : holes) {
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      std::size_t nb[4];
      int count = 0;
      if (x > 0) nb[count++] = i - 1;
      if (x + 1 < w) nb[count++] = i + 1;
      if (y > 0) nb[count++] = i - w;
      if (y + 1 < h) nb[count++] = i + w;
      for (int c = 0; c < 3; ++c) {
        std::int64_t s = 0;
        for (int k = 0; k < count; ++k) s += field[nb[k] * 3 + c];
        std::int64_t value = (s + count / 2) / count;
        change = std::max(change, std::abs(value - field[i * 3 + c]));
        field[i * 3 + c] = value;
      }
    }
    if (change < tol) break;
  }
  result.last_change = static_cast<double>(change) / kOne;

  for (std::size_t i : holes) {
    for (int c = 0; c < 3; ++c) {
      std::int64_t v = (field[i * 3 + c] + kOne / 2) >> kFrac;
      result.image.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::clamp<std::int64_t>(v, 0, 255));
    }
  }
  return result;
}

BackendConfig BackendConfig::from_json(const json& value) {
  BackendConfig c;
  try {
    std::string kind = value.value("kind", std::string("builtin"));
    if (kind == "builtin") {
      c.kind = BackendKind::builtin;
    } else if (kind == "http") {
      c.kind = BackendKind::http;
    } else if (kind == "command") {
      c.kind = BackendKind::command;
    } else {
      throw Error(ErrorCode::invalid_argument, "backend: unknown kind '" + kind + "'");
    }
    c.builtin.max_iterations = value.value("max_iterations", c.builtin.max_iterations);
    c.builtin.tolerance = value.value("tolerance", c.builtin.tolerance);
    c.endpoint = value.value("endpoint", c.endpoint);
    c.command = value.value("command", c.command);
    c.timeout_sec = value.value("timeout_sec", c.timeout_sec);
    c.max_retries = value.value("max_retries", c.max_retries);
    c.backoff_initial_sec = value.value("backoff_initial_sec", c.backoff_initial_sec);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("backend config: ") + e.what());
  }
  c.validate();
  return c;
}

BackendConfig BackendConfig::from_flag(const std::string& flag) {
  BackendConfig c;
  if (flag == "builtin") {
    c.kind = BackendKind::builtin;
  } else if (flag.rfind("http:", 0) == 0 && flag.rfind("http://", 0) != 0) {
    c.kind = BackendKind::http;
    c.endpoint = flag.substr(5);
  } else if (flag.rfind("http://", 0) == 0 || flag.rfind("https://", 0) == 0) {
    c.kind = BackendKind::http;
    c.endpoint = flag;
  } else if (flag.rfind("command:", 0) == 0) {
    c.kind = BackendKind::command;
    c.command = flag.substr(8);
  } else {
    throw Error(ErrorCode::invalid_argument,
                "--backend expects builtin, http:URL or command:TEMPLATE, got '" + flag + "'");
  }
  c.validate();
  return c;
}

json BackendConfig::to_json() const {
  json out{{"kind", backend_kind_name(kind)}};
  switch (kind) {
    case BackendKind::builtin:
      out["max_iterations"] = builtin.max_iterations;
      out["tolerance"] = builtin.tolerance;
      break;
    case BackendKind::http:
      out["endpoint"] = endpoint;
      out["timeout_sec"] = timeout_sec;
      out["max_retries"] = max_retries;
      out["backoff_initial_sec"] = backoff_initial_sec;
      break;
    case BackendKind::command:
      out["command"] = command;
      out["timeout_sec"] = timeout_sec;
      out["max_retries"] = max_retries;
      break;
  }
  return out;
}

void BackendConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, "backend: " + what); };
  switch (kind) {
    case BackendKind::builtin:
      if (builtin.max_iterations < 1) fail("max_iterations must be >= 1");
      if (!(builtin.tolerance >= 0)) fail("tolerance must be >= 0");
      if (!endpoint.empty() || !command.empty()) fail("builtin takes no endpoint or command");
      break;
    case BackendKind::http:
      if (endpoint.empty()) fail("http backend needs an endpoint");
      if (!command.empty()) fail("http backend takes no command");
      split_url(endpoint);
      break;
    case BackendKind::command:
      if (command.empty()) fail("command backend needs a command template");
      if (!endpoint.empty()) fail("command backend takes no endpoint");
      for (const char* ph : {"{image_in}", "{mask_in}", "{image_out}"}) {
        if (command.find(ph) == std::string::npos) fail(std::string("command template lacks ") + ph);
      }
      break;
  }
  if (timeout_sec <= 0) fail("timeout_sec must be positive");
  if (max_retries < 0) fail("max_retries must be >= 0");
}

std::string BuiltinBackend::id() const { return "builtin"; }

Image BuiltinBackend::inpaint(const Image& image, const GrayImage& mask, const std::string&) {
  return builtin_inpaint(image, mask, params_).image;
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

Image HttpBackend::inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) {
  UrlParts url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_sec));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const std::string body = json{{"image", base64_encode(encode_png(image))},
                                {"mask", base64_encode(encode_png(mask))}}
                               .dump();
  std::string failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      spdlog::info("inpaint backend {}: retry {} for {} after {}", config_.endpoint, attempt,
                   state_key, failure);
      std::this_thread::sleep_for(
          std::chrono::duration<double>(config_.backoff_initial_sec * (1 << (attempt - 1))));
    }
    auto res = client.Post(url.path, body, "application/json");
    if (!res) {
      failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      failure = "HTTP " + std::to_string(res->status);
      if (!retryable_status(res->status)) break;
      continue;
    }
    Image out;
    try {
      json doc = json::parse(res->body);
      out = decode_png_rgb(base64_decode(doc.at("image").get<std::string>()));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::backend, "inpaint backend " + config_.endpoint +
                                          " returned an undecodable image for " + state_key + ": " +
                                          e.what());
    }
    check_dimensions(out, image, state_key, config_.endpoint);
    return out;
  }
  throw Error(ErrorCode::backend, "inpaint backend " + config_.endpoint + " failed for " + state_key +
                                      " after " + std::to_string(config_.max_retries + 1) +
                                      " attempts: " + failure);
}

CommandBackend::CommandBackend(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

Image CommandBackend::inpaint(const Image& image, const GrayImage& mask, const std::string& state_key) {
  std::string tmpl = (std::filesystem::temp_directory_path() / "meltcheck-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw Error(ErrorCode::io, "cannot create temp directory");
  const std::filesystem::path dir = tmpl;
  struct Cleanup {
    std::filesystem::path dir;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }
  } cleanup{dir};

  const auto in = dir / "image.png", mask_path = dir / "mask.png", out = dir / "out.png";
  write_file_atomic(in, encode_png(image));
  write_file_atomic(mask_path, encode_png(mask));
  std::string cmd = config_.command;
  for (auto [ph, path] : {std::pair{"{image_in}", in}, {"{mask_in}", mask_path}, {"{image_out}", out}}) {
    for (auto pos = cmd.find(ph); pos != std::string::npos; pos = cmd.find(ph)) {
      cmd.replace(pos, std::string_view(ph).size(), shell_quote(path.string()));
    }
  }

  std::string failure;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) spdlog::info("inpaint command: retry {} for {} after {}", attempt, state_key, failure);
    ShellResult r = run_shell(cmd, config_.timeout_sec);
    if (r.timed_out) {
      failure = "timed out after " + std::to_string(config_.timeout_sec) + " s";
      continue;
    }
    if (r.exit_code != 0) {
      failure = "exit code " + std::to_string(r.exit_code);
      continue;
    }
    Image result;
    try {
      result = decode_png_rgb(read_bytes(out));
    } catch (const Error& e) {
      throw Error(ErrorCode::backend, "inpaint command produced no usable image for " + state_key +
                                          ": " + e.what());
    }
    check_dimensions(result, image, state_key, "command");
    return result;
  }
  throw Error(ErrorCode::backend, "inpaint command failed for " + state_key + ": " + failure);
}

std::unique_ptr<InpaintBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::http: return std::make_unique<HttpBackend>(config);
    case BackendKind::command: return std::make_unique<CommandBackend>(config);
    case BackendKind::builtin: break;
  }
  return std::make_unique<BuiltinBackend>(config.builtin);
}

json MeltedImage::to_json() const {
  json out{{"state_key", state_key},
           {"seed_id", seed_id},
           {"removed", removed},
           {"backend_id", backend_id},
           {"mask_ratio", std::round(mask_ratio * 1e6) / 1e6},
           {"skipped", skipped}};
  if (skipped) out["skip_reason"] = skip_reason;
  return out;
}

Melter::Melter(InpaintBackend& backend, MeltOptions options,
               std::optional<std::filesystem::path> cache_dir)
    : backend_(backend), options_(options), cache_dir_(std::move(cache_dir)) {}

std::optional<std::filesystem::path> Melter::cache_path(const planner::MeltState& state) const {
  if (!cache_dir_) return std::nullopt;
  return *cache_dir_ / state.seed_id / (planner::state_suffix(state.removed) + ".png");
}

MeltedImage Melter::melt(const corpus::SeedImage& seed, const planner::MeltState& state) {
  if (state.seed_id != seed.seed_id) {
    throw Error(ErrorCode::invalid_argument,
                "state " + planner::state_key(state) + " does not belong to seed " + seed.seed_id);
  }
  const std::vector<int> meltable = corpus::meltable_objects(seed);
  for (int id : state.removed) {
    if (!std::binary_search(meltable.begin(), meltable.end(), id)) {
      throw Error(ErrorCode::invalid_argument, "state " + planner::state_key(state) +
                                                   ": object " + std::to_string(id) +
                                                   " is not meltable");
    }
  }
  if (state.removed.empty()) {
    MeltedImage root;
    root.state_key = planner::state_key(state);
    root.seed_id = seed.seed_id;
    root.png = seed.png;
    root.backend_id = "original";
    return root;
  }

  const std::string key = planner::state_key(state);
  std::promise<MeltedImage> promise;
  std::shared_future<MeltedImage> pending;
  {
    std::lock_guard lock(mutex_);
    if (auto it = results_.find(key); it != results_.end()) {
      pending = it->second;
    } else {
      results_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();
  try {
    MeltedImage out = compute(seed, state);
    promise.set_value(out);
    return out;
  } catch (...) {
    promise.set_exception(std::current_exception());
    throw;
  }
}

MeltedImage Melter::compute(const corpus::SeedImage& seed, const planner::MeltState& state) {
  MeltedImage out;
  out.state_key = planner::state_key(state);
  out.seed_id = seed.seed_id;
  out.removed = state.removed;
  out.backend_id = backend_.id();

  GrayImage mask = corpus::build_mask(seed, {state.removed.begin(), state.removed.end()},
                                      options_.mask_margin);
  out.mask_ratio = static_cast<double>(corpus::mask_population(mask)) /
                   static_cast<double>(mask.pixel_count());
  if (out.mask_ratio > options_.max_mask_ratio) {
    out.skipped = true;
    out.skip_reason = "mask covers " + std::to_string(out.mask_ratio) + " of the image";
    spdlog::warn("skipping {}: mask ratio {:.4f} exceeds {:.4f}", out.state_key, out.mask_ratio,
                 options_.max_mask_ratio);
    return out;
  }

  auto path = cache_path(state);
  if (path && std::filesystem::is_regular_file(*path)) {
    out.png = read_bytes(*path);
    return out;
  }

  ++calls_;
  Image melted = backend_.inpaint(seed.image, mask, out.state_key);
  check_dimensions(melted, seed.image, out.state_key, backend_.id());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (mask.pixels[i] != 0) continue;
    for (int c = 0; c < 3; ++c) {
      if (melted.rgb[i * 3 + c] != seed.image.rgb[i * 3 + c]) {
        ++changed;
        melted.rgb[i * 3 + c] = seed.image.rgb[i * 3 + c];
      }
    }
  }
  if (changed > 0) {
    if (options_.strict_preservation) {
      throw Error(ErrorCode::backend, "backend " + backend_.id() + " altered " + std::to_string(changed) +
                                          " unmasked channel values in " + out.state_key);
    }
    spdlog::warn("{}: restored {} unmasked channel values altered by {}", out.state_key, changed,
                 backend_.id());
  }
  out.png = encode_png(melted);
  if (path) write_file_atomic(*path, out.png);
  return out;
}

}  // namespace meltcheck::melter
