// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <string>

namespace meltcheck {

// "http://host:8080/v1/caption?x=1" -> origin "http://host:8080",
// path "/v1/caption?x=1". The path defaults to "/".
struct UrlParts {
  std::string origin;
  std::string path;
};

UrlParts split_url(const std::string& url);

// 429 and 5xx are worth retrying; other non-2xx statuses are final.
inline bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace meltcheck
