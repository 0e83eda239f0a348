// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "common/http_util.hpp"

#include "common/error.hpp"

namespace meltcheck {

UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_argument, "endpoint '" + url + "' has no scheme");
  }
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::invalid_argument, "endpoint '" + url + "': unsupported scheme");
  }
  auto path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  if (path_start == std::string::npos) {
    parts.origin = url;
    parts.path = "/";
  } else {
    parts.origin = url.substr(0, path_start);
    parts.path = url.substr(path_start);
  }
  if (parts.origin.size() == scheme_end + 3) {
    throw Error(ErrorCode::invalid_argument, "endpoint '" + url + "' has no host");
  }
  return parts;
}

}  // namespace meltcheck
