// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "reportd/server.hpp"

#include <spdlog/spdlog.h>

#include <charconv>

#include "common/error.hpp"
#include "common/files.hpp"
#include "httplib.h"

namespace meltcheck::reportd {
using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, json{{"error", {{"code", code}, {"message", message}}}}, status);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    default: return 500;
  }
}

std::string image_url(const planner::MeltState& state) {
  return "/api/images/" + planner::state_key(state) + ".png";
}

json issue_view(const Snapshot& snap, const oracle::SuspiciousIssue& issue) {
  json out = issue.to_json();
  out["status"] = snap.labeled(issue.issue_id) ? "labeled" : "pending";
  json verdicts = json::array();
  for (const auto& v : snap.verdicts_for(issue.issue_id)) verdicts.push_back(v.to_json());
  out["verdicts"] = verdicts;
  out["images"] = {{"ancestor", image_url(issue.pair.ancestor)},
                   {"descendant", image_url(issue.pair.descendant)}};
  return out;
}

}  // namespace

Server::Server(IssueStore& store, ServerOptions options)
    : store_(store), options_(std::move(options)), http_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Server::~Server() { stop(); }

void Server::install_routes() {
  auto& svr = *http_;

  svr.Get("/api/issues", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = store_.snapshot();
    std::string status = req.get_param_value("status");
    std::string adapter = req.get_param_value("adapter");
    if (!status.empty() && status != "pending" && status != "labeled") {
      return send_error(res, 400, "invalid_argument", "status must be pending or labeled");
    }
    std::size_t limit = snap->issues.size();
    if (req.has_param("limit")) {
      std::string text = req.get_param_value("limit");
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), limit);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        return send_error(res, 400, "invalid_argument", "limit must be a nonnegative integer");
      }
    }
    json items = json::array();
    std::size_t matched = 0;
    for (const auto& issue : snap->issues) {
      if (!adapter.empty() && issue.adapter_id != adapter) continue;
      bool labeled = snap->labeled(issue.issue_id);
      if (status == "pending" && labeled) continue;
      if (status == "labeled" && !labeled) continue;
      ++matched;
      if (items.size() < limit) items.push_back(issue_view(*snap, issue));
    }
    send_json(res, json{{"issues", items}, {"total", matched}});
  });

  svr.Get(R"(/api/issues/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = store_.snapshot();
    const auto* issue = snap->find(req.matches[1]);
    if (!issue) return send_error(res, 404, "not_found", "unknown issue '" + std::string(req.matches[1]) + "'");
    send_json(res, issue_view(*snap, *issue));
  });

  svr.Post(R"(/api/issues/([0-9A-Za-z]+)/verdict)", [this](const httplib::Request& req,
                                                          httplib::Response& res) {
    const std::string id = req.matches[1];
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      return send_error(res, 400, "invalid_argument", "verdict body must be a JSON object");
    }
    try {
      oracle::Verdict v = oracle::Verdict::from_json(body);
      if (!v.issue_id.empty() && v.issue_id != id) {
        return send_error(res, 400, "invalid_argument", "issue_id in body does not match the URL");
      }
      v.issue_id = id;
      if (!store_.snapshot()->find(id)) {
        return send_error(res, 404, "not_found", "unknown issue '" + id + "'");
      }
      oracle::Stats stats = store_.record_verdict(std::move(v));
      send_json(res, json{{"ok", true}, {"stats", stats.to_json()}});
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    }
  });

  svr.Get(R"(/api/images/(.+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    planner::MeltState state;
    try {
      state = planner::parse_state_key(std::string(req.matches[1]));
    } catch (const Error& e) {
      return send_error(res, 400, "invalid_argument", e.what());
    }
    if (!corpus::valid_seed_id(state.seed_id)) {
      return send_error(res, 400, "invalid_argument", "bad seed id");
    }
    auto path = options_.image_dir / state.seed_id / (planner::state_suffix(state.removed) + ".png");
    if (!std::filesystem::is_regular_file(path)) {
      return send_error(res, 404, "not_found", "no image for " + planner::state_key(state));
    }
    auto bytes = read_bytes(path);
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
  });

  svr.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, store_.snapshot()->stats.to_json());
  });

  svr.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = store_.snapshot();
    json issues = json::array(), verdicts = json::array();
    for (const auto& issue : snap->issues) issues.push_back(issue_view(*snap, issue));
    for (const auto& v : snap->verdicts) verdicts.push_back(v.to_json());
    send_json(res, json{{"issues", issues}, {"verdicts", verdicts}, {"stats", snap->stats.to_json()}});
  });

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });

  if (options_.static_dir) {
    if (!svr.set_mount_point("/", options_.static_dir->string())) {
      throw Error(ErrorCode::invalid_argument,
                  "static directory '" + options_.static_dir->string() + "' does not exist");
    }
  }
}

int Server::start() {
  if (options_.port == 0) {
    port_ = http_->bind_to_any_port(options_.bind);
  } else {
    port_ = http_->bind_to_port(options_.bind, options_.port) ? options_.port : -1;
  }
  if (port_ < 0) {
    throw Error(ErrorCode::io, "cannot bind " + options_.bind + ":" + std::to_string(options_.port));
  }
  thread_ = std::thread([this] {
    http_->listen_after_bind();
    std::lock_guard lock(done_mutex_);
    done_ = true;
    done_cv_.notify_all();
  });
  spdlog::info("serving on http://{}:{}", options_.bind, port_);
  return port_;
}

void Server::stop() {
  std::lock_guard lock(stop_mutex_);
  http_->stop();
  if (thread_.joinable()) thread_.join();
}

void Server::wait() {
  std::unique_lock lock(done_mutex_);
  done_cv_.wait(lock, [this] { return done_ || !thread_.joinable(); });
}

}  // namespace meltcheck::reportd
