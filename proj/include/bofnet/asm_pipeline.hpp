// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bofnet::asmpipe {

/// Raw compiler output for one translation unit.
struct AsmUnit {
  std::string source_id;
  std::vector<std::string> lines;
};

/// Assembly after directive stripping; every line is a verbatim line of the
/// originating AsmUnit, in the original order.
struct NormalizedAsm {
  std::string source_id;
  std::vector<std::string> lines;
};

inline constexpr std::string_view kNewlineToken = "\n";

struct TokenStream {
  std::string source_id;
  std::vector<std::string> tokens;
};

/// Default compiler invocation. `{input}` and `{output}` are substituted; the
/// template is split on whitespace and executed without a shell.
inline constexpr std::string_view kDefaultCompileCommand =
    "gcc -S -fno-asynchronous-unwind-tables -masm=intel {input} -o {output}";

std::vector<std::string> expand_command(std::string_view command_template,
                                        const std::string& input, const std::string& output);

/// Compiles a C file into `output_s` and loads the result. A `.s` input is
/// ingested directly without invoking the compiler.
AsmUnit compile_c(const std::filesystem::path& c_path, std::string_view command_template,
                  const std::filesystem::path& output_s);

/// Overload writing the assembly next to a temporary file that is removed afterwards.
AsmUnit compile_c(const std::filesystem::path& c_path,
                  std::string_view command_template = kDefaultCompileCommand);

AsmUnit load_asm(const std::filesystem::path& s_path, std::string source_id = {});

/// Splits text on '\n' (a trailing newline does not produce an empty last line).
std::vector<std::string> split_lines(std::string_view text);

NormalizedAsm normalize(const AsmUnit& unit);
NormalizedAsm normalize(const NormalizedAsm& unit);

std::vector<std::string> tokenize_line(std::string_view line);
TokenStream tokenize(const NormalizedAsm& unit);

}  // namespace bofnet::asmpipe
