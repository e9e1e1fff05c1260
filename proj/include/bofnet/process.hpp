// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace bofnet {

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string std_out;
  std::string std_err;
};

/// Resolves a program name against PATH; absolute or relative paths are
/// returned unchanged when they exist.
std::optional<std::string> find_program(const std::string& name);

/// Runs argv[0] with the remaining arguments (no shell involved), feeding
/// `input` on stdin and capturing both output streams.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& input = {},
                          std::chrono::milliseconds timeout = std::chrono::seconds(60),
                          const std::vector<std::pair<std::string, std::string>>& env = {});

}  // namespace bofnet
