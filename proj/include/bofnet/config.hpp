// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bofnet/experiment.hpp"

namespace bofnet::config {

/// Everything a run depends on. Serialized as INI-style text with sections
/// [experiment], [corpus], [split], [model], [train] and [compile].
struct RunConfig {
  experiment::ExperimentSpec spec;
  std::string compile_command = std::string(asmpipe::kDefaultCompileCommand);
};

/// Sets one value by its dotted key, e.g. "train.batch_size". Throws
/// InvalidArgument for unknown keys or unparsable values.
void set(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get(const RunConfig& cfg, std::string_view key);
std::vector<std::string> keys();

/// Applies every key of an INI file on top of `cfg`.
void apply_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_text(RunConfig& cfg, const std::string& text);

std::string to_ini(const RunConfig& cfg);

inline constexpr std::string_view kEchoName = "config.echo";
void write_echo(const std::filesystem::path& dir, const RunConfig& cfg);

}  // namespace bofnet::config
