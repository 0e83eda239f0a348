// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meltcheck {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Whitespace is ignored; any other invalid input throws Error(invalid_argument).
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string sha256_hex(std::string_view data);

// Expands ${NAME} from the process environment. Unset variables expand to ""
// and are reported through `missing` when non-null.
std::string interpolate_env(std::string_view text,
                            std::vector<std::string>* missing = nullptr);

// UTC, second resolution: 2026-10-15T20:50:00Z
std::string utc_timestamp();

}  // namespace meltcheck
