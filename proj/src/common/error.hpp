// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meltcheck {

// Mirrors mc_status in the C header; values must stay in sync.
enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  corpus = 3,
  backend = 4,
  adapter = 5,
  overflow = 6,
  not_found = 7,
  conflict = 8,
  internal = 9,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace meltcheck
