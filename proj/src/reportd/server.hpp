// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "reportd/issue_store.hpp"

namespace httplib {
class Server;
}

namespace meltcheck::reportd {

struct ServerOptions {
  std::string bind = "127.0.0.1";
  int port = 8600;  // 0 picks a free port
  std::filesystem::path image_dir;  // {image_dir}/{seed_id}/{suffix}.png
  std::optional<std::filesystem::path> static_dir;  // triage UI assets
};

/// JSON API over an IssueStore:
///   GET  /api/issues?status=&adapter=&limit=
///   GET  /api/issues/{id}
///   POST /api/issues/{id}/verdict
///   GET  /api/images/{state_key}.png
///   GET  /api/stats
///   GET  /api/export
class Server {
 public:
  Server(IssueStore& store, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving on a background thread. Returns the port.
  int start();
  int port() const { return port_; }
  void stop();
  /// Blocks until the listener exits. Safe to call alongside stop().
  void wait();

 private:
  void install_routes();

  IssueStore& store_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = 0;
  std::mutex stop_mutex_;
  std::mutex done_mutex_;
  std::condition_variable done_cv_;
  bool done_ = false;
};

}  // namespace meltcheck::reportd
