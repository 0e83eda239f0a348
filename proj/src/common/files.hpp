// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace meltcheck {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& contents);

// Appends `line` plus '\n' and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

// Canonical single-line JSON used for every *.jsonl file we emit.
std::string to_jsonl(const nlohmann::json& value);

struct JsonlLine {
  std::size_t line_number;
  std::string raw;
  nlohmann::json value;  // discarded when parse_ok is false
  bool parse_ok;
};

// Missing file reads as empty. Blank lines are skipped.
std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path);

}  // namespace meltcheck
