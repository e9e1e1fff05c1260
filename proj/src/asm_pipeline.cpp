// SPDX-License-Identifier: Apache-2.0
#include "bofnet/asm_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

#include "bofnet/error.hpp"
#include "bofnet/process.hpp"

namespace fs = std::filesystem;

namespace bofnet::asmpipe {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view first_word(std::string_view line) {
  auto begin = line.find_first_not_of(" \t\r\f\v");
  if (begin == std::string_view::npos) return {};
  auto end = line.find_first_of(" \t\r\f\v", begin);
  return line.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
}

// Directives whose whole line is dropped. `.glob` also covers the spelling
// shown in hand-edited listings.
constexpr std::array kDroppedDirectives = {
    std::string_view(".file"),  std::string_view(".text"),  std::string_view(".glob"),
    std::string_view(".globl"), std::string_view(".type"),  std::string_view(".size"),
    std::string_view(".ident"), std::string_view(".section"),
};

bool is_dropped_directive(std::string_view word) {
  if (word.starts_with(".intel_syntax")) return true;
  if (word.starts_with("endbr")) return true;
  return std::find(kDroppedDirectives.begin(), kDroppedDirectives.end(), word) !=
         kDroppedDirectives.end();
}

bool is_string_label(std::string_view word) {
  // `.LC<digits>:` possibly followed by more text on the same line.
  if (!word.starts_with(".LC")) return false;
  std::size_t i = 3;
  while (i < word.size() && std::isdigit(static_cast<unsigned char>(word[i]))) ++i;
  return i > 3 && i < word.size() && word[i] == ':';
}

bool is_string_payload(std::string_view word) {
  return word == ".string" || word == ".ascii" || word == ".asciz";
}

template <typename Unit>
NormalizedAsm normalize_lines(const Unit& unit) {
  NormalizedAsm out;
  out.source_id = unit.source_id;
  bool in_string_block = false;
  for (const auto& line : unit.lines) {
    auto word = first_word(line);
    if (is_string_label(word)) {
      in_string_block = true;
      continue;
    }
    if (in_string_block && is_string_payload(word)) continue;
    in_string_block = false;
    if (is_dropped_directive(word)) continue;
    out.lines.push_back(line);
  }
  return out;
}

// Alternation order matters: whitespace is skipped, quoted strings stay whole,
// signed integers bind their sign, symbols may carry `.`, `$` and `@PLT`-style
// suffixes, and anything else is a one-character token.
const std::regex& token_regex() {
  static const std::regex re(
      R"((\s+)|("[^"]*")|([-+]?(?:0[xX][0-9A-Fa-f]+|[0-9]+))|([A-Za-z_.$][A-Za-z0-9_.$@]*)|([\s\S]))",
      std::regex::ECMAScript | std::regex::optimize);
  return re;
}

}  // namespace

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> expand_command(std::string_view command_template, const std::string& input,
                                        const std::string& output) {
  std::vector<std::string> argv;
  std::istringstream words{std::string(command_template)};
  std::string word;
  while (words >> word) {
    for (auto [key, value] : {std::pair<std::string_view, const std::string&>{"{input}", input},
                              std::pair<std::string_view, const std::string&>{"{output}", output}}) {
      for (auto pos = word.find(key); pos != std::string::npos; pos = word.find(key, pos + value.size())) {
        word.replace(pos, key.size(), value);
      }
    }
    argv.push_back(word);
  }
  return argv;
}

AsmUnit load_asm(const fs::path& s_path, std::string source_id) {
  AsmUnit unit;
  unit.source_id = source_id.empty() ? s_path.stem().string() : std::move(source_id);
  unit.lines = split_lines(read_file(s_path));
  if (unit.lines.empty()) throw Error(ErrorCode::EmptyOutput, "empty assembly file " + s_path.string());
  return unit;
}

AsmUnit compile_c(const fs::path& c_path, std::string_view command_template, const fs::path& output_s) {
  if (!fs::exists(c_path)) throw Error(ErrorCode::Io, "no such file " + c_path.string());
  if (c_path.extension() == ".s") return load_asm(c_path);

  auto argv = expand_command(command_template, c_path.string(), output_s.string());
  if (argv.empty()) throw Error(ErrorCode::InvalidArgument, "empty compiler command template");
  if (!find_program(argv[0])) throw Error(ErrorCode::CompilerNotFound, "compiler not found: " + argv[0]);

  auto result = run_command(argv);
  if (result.exit_code != 0) {
    throw Error(ErrorCode::CompileFailed,
                c_path.string() + " (exit " + std::to_string(result.exit_code) + ")\n" + result.std_err);
  }
  if (!fs::exists(output_s) || fs::file_size(output_s) == 0) {
    throw Error(ErrorCode::EmptyOutput, "compiler produced no assembly for " + c_path.string());
  }
  return load_asm(output_s, c_path.stem().string());
}

AsmUnit compile_c(const fs::path& c_path, std::string_view command_template) {
  if (c_path.extension() == ".s") return compile_c(c_path, command_template, c_path);
  auto tmp = fs::temp_directory_path() /
             ("bofnet-" + std::to_string(::getpid()) + "-" + c_path.stem().string() + ".s");
  struct Cleanup {
    fs::path path;
    ~Cleanup() {
      std::error_code ec;
      fs::remove(path, ec);
    }
  } cleanup{tmp};
  return compile_c(c_path, command_template, tmp);
}

NormalizedAsm normalize(const AsmUnit& unit) { return normalize_lines(unit); }
NormalizedAsm normalize(const NormalizedAsm& unit) { return normalize_lines(unit); }

std::vector<std::string> tokenize_line(std::string_view line) {
  std::vector<std::string> tokens;
  const auto& re = token_regex();
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(line.begin(), line.end(), re), end; it != end; ++it) {
    const auto& m = *it;
    if (m[1].matched) continue;
    tokens.push_back(m.str());
  }
  tokens.emplace_back(kNewlineToken);
  return tokens;
}

TokenStream tokenize(const NormalizedAsm& unit) {
  TokenStream stream;
  stream.source_id = unit.source_id;
  for (const auto& line : unit.lines) {
    auto tokens = tokenize_line(line);
    stream.tokens.insert(stream.tokens.end(), std::make_move_iterator(tokens.begin()),
                         std::make_move_iterator(tokens.end()));
  }
  return stream;
}

}  // namespace bofnet::asmpipe
