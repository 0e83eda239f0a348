// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "reportd/issue_store.hpp"

#include <spdlog/spdlog.h>

#include "common/encoding.hpp"
#include "common/error.hpp"
#include "common/files.hpp"

namespace meltcheck::reportd {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& file) {
  return file.string() + ".quarantine";
}

// Loads `file`, handing each parsed line to `accept`. Lines that fail to
// parse or that `accept` rejects are quarantined and the file is rewritten.
template <typename Accept>
std::size_t load_log(const std::filesystem::path& file, Accept accept) {
  std::vector<JsonlLine> lines = read_jsonl(file);
  std::string kept;
  std::size_t bad = 0;
  for (const auto& line : lines) {
    bool ok = line.parse_ok;
    if (ok) {
      try {
        accept(line.value);
      } catch (const Error& e) {
        spdlog::warn("{}:{}: {}", file.string(), line.line_number, e.what());
        ok = false;
      }
    }
    if (!ok) {
      ++bad;
      append_line_durable(sidecar(file), line.raw);
      continue;
    }
    kept += line.raw;
    kept += '\n';
  }
  if (bad > 0) {
    spdlog::warn("{}: quarantined {} line(s) to {}", file.string(), bad, sidecar(file).string());
    write_file_atomic(file, kept);
  }
  return bad;
}

}  // namespace

const oracle::SuspiciousIssue* Snapshot::find(const std::string& issue_id) const {
  auto it = index.find(issue_id);
  return it == index.end() ? nullptr : &issues[it->second];
}

std::vector<oracle::Verdict> Snapshot::verdicts_for(const std::string& issue_id) const {
  std::vector<oracle::Verdict> mine;
  for (const auto& v : verdicts) {
    if (v.issue_id == issue_id) mine.push_back(v);
  }
  return oracle::latest_per_annotator(mine);
}

bool Snapshot::labeled(const std::string& issue_id) const {
  for (const auto& v : verdicts) {
    if (v.issue_id == issue_id) return true;
  }
  return false;
}

IssueStore::IssueStore(std::filesystem::path issues_file, std::filesystem::path verdicts_file)
    : issues_file_(std::move(issues_file)), verdicts_file_(std::move(verdicts_file)) {
  auto snap = std::make_shared<Snapshot>();
  report_.quarantined += load_log(issues_file_, [&](const nlohmann::json& value) {
    oracle::SuspiciousIssue issue = oracle::issue_from_json(value);
    if (snap->index.count(issue.issue_id)) {
      ++report_.duplicates;
      return;
    }
    snap->index.emplace(issue.issue_id, snap->issues.size());
    snap->issues.push_back(std::move(issue));
  });
  report_.quarantined += load_log(verdicts_file_, [&](const nlohmann::json& value) {
    oracle::Verdict v = oracle::Verdict::from_json(value);
    v.validate();
    snap->verdicts.push_back(std::move(v));
  });
  report_.issues = snap->issues.size();
  report_.verdicts = snap->verdicts.size();
  snap->stats = oracle::compute_precision(snap->issues, snap->verdicts);
  snapshot_ = std::move(snap);
}

std::shared_ptr<const Snapshot> IssueStore::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void IssueStore::publish(std::shared_ptr<Snapshot> next) {
  next->stats = oracle::compute_precision(next->issues, next->verdicts);
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(next);
}

bool IssueStore::record_issue(const oracle::SuspiciousIssue& issue) {
  std::lock_guard lock(write_mutex_);
  auto current = snapshot();
  if (current->index.count(issue.issue_id)) return false;
  append_line_durable(issues_file_, to_jsonl(issue.to_json()));
  auto next = std::make_shared<Snapshot>(*current);
  next->index.emplace(issue.issue_id, next->issues.size());
  next->issues.push_back(issue);
  publish(std::move(next));
  return true;
}

oracle::Stats IssueStore::record_verdict(oracle::Verdict verdict) {
  verdict.validate();
  std::lock_guard lock(write_mutex_);
  auto current = snapshot();
  if (!current->find(verdict.issue_id)) {
    throw Error(ErrorCode::not_found, "unknown issue '" + verdict.issue_id + "'");
  }
  if (verdict.labeled_at.empty()) verdict.labeled_at = utc_timestamp();
  append_line_durable(verdicts_file_, to_jsonl(verdict.to_json()));
  auto next = std::make_shared<Snapshot>(*current);
  next->verdicts.push_back(std::move(verdict));
  publish(next);
  return next->stats;
}

}  // namespace meltcheck::reportd
