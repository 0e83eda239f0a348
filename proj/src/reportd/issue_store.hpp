// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "oracle/oracle.hpp"

namespace meltcheck::reportd {

/// Immutable view of the store. Readers hold a shared_ptr to one of these
/// while writers build the next one.
struct Snapshot {
  std::vector<oracle::SuspiciousIssue> issues;  // file order
  std::map<std::string, std::size_t> index;     // issue_id -> position
  std::vector<oracle::Verdict> verdicts;        // log order, superseded ones included
  oracle::Stats stats;

  const oracle::SuspiciousIssue* find(const std::string& issue_id) const;
  /// Current verdict per annotator for one issue.
  std::vector<oracle::Verdict> verdicts_for(const std::string& issue_id) const;
  bool labeled(const std::string& issue_id) const;
};

struct LoadReport {
  std::size_t issues = 0;
  std::size_t verdicts = 0;
  std::size_t quarantined = 0;  // lines moved to a .quarantine sidecar
  std::size_t duplicates = 0;
};

/// Append-only issue and verdict logs (JSON lines) with an in-memory index.
/// The files are the source of truth; construction rebuilds everything from
/// them. Unreadable lines are moved to "<file>.quarantine" and the log is
/// rewritten without them so later appends start on a clean line.
class IssueStore {
 public:
  IssueStore(std::filesystem::path issues_file, std::filesystem::path verdicts_file);

  const LoadReport& load_report() const { return report_; }
  std::shared_ptr<const Snapshot> snapshot() const;

  /// Returns false when an issue with the same id is already stored.
  /// The line is fsynced before this returns.
  bool record_issue(const oracle::SuspiciousIssue& issue);

  /// Validates, stamps labeled_at when absent, appends, and returns the
  /// updated statistics. Throws Error(not_found) for unknown issues and
  /// Error(invalid_argument) for malformed verdicts.
  oracle::Stats record_verdict(oracle::Verdict verdict);

  const std::filesystem::path& issues_file() const { return issues_file_; }
  const std::filesystem::path& verdicts_file() const { return verdicts_file_; }

 private:
  void publish(std::shared_ptr<Snapshot> next);

  std::filesystem::path issues_file_;
  std::filesystem::path verdicts_file_;
  LoadReport report_;
  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

}  // namespace meltcheck::reportd
