// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <string>
#include <string_view>

namespace meltcheck {

struct ShellResult {
  int exit_code = 0;
  bool timed_out = false;
};

// Runs `command` through /bin/sh -c. On timeout the whole process group is
// killed and timed_out is set.
ShellResult run_shell(const std::string& command, double timeout_sec);

// Single-quotes `text` for safe interpolation into a shell command.
std::string shell_quote(std::string_view text);

}  // namespace meltcheck
