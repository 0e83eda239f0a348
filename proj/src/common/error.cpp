// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "common/error.hpp"

namespace meltcheck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::corpus: return "corpus";
    case ErrorCode::backend: return "backend";
    case ErrorCode::adapter: return "adapter";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace meltcheck
