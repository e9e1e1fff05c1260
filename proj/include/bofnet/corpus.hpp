// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bofnet::corpus {

enum class RiskyCall { Strcpy, Strncpy, Strcat, Scanf, Sprintf, Gets, Fgets, Memcpy };

inline constexpr std::array kRiskyCalls = {RiskyCall::Strcpy, RiskyCall::Strncpy, RiskyCall::Strcat,
                                           RiskyCall::Scanf,  RiskyCall::Sprintf, RiskyCall::Gets,
                                           RiskyCall::Fgets,  RiskyCall::Memcpy};

std::string_view to_string(RiskyCall call);
std::optional<RiskyCall> parse_risky_call(std::string_view name);

enum class Safety { Safe, Vulnerable };

/// How attacker-controlled data reaches the function.
enum class InputKind {
  Argument,  // `void f(const char *s)`
  Stdin,     // `void f(void)`, reads standard input
};

inline constexpr int kVariantsPerCall = 15;
/// Vulnerable variants 1..kRepairedVariants have a repaired safe twin; the
/// remaining safe slots per call are independent safe functions.
inline constexpr int kRepairedVariants = 10;

/// Placeholder for the function name inside a template body.
inline constexpr std::string_view kNamePlaceholder = "@NAME@";

struct FunctionTemplate {
  std::string id;
  RiskyCall call = RiskyCall::Strcpy;
  int variant_index = 1;
  Safety safety = Safety::Safe;
  /// Library-wide unique, safety-neutral function name.
  std::string name;
  /// Complete function definition with `@NAME@` where the name goes.
  std::string body;
  std::optional<std::string> repaired_of;
  InputKind input = InputKind::Argument;
  /// Declared size of the attacker-facing buffer; scales the overflow probe.
  std::size_t buffer_size = 32;
  /// Literal passed by main() for Argument-kind functions.
  std::string call_argument = "hello world";

  /// Body with the library name substituted.
  std::string definition() const;
  std::string definition(std::string_view function_name) const;
};

class FunctionLibrary {
 public:
  explicit FunctionLibrary(std::vector<FunctionTemplate> templates);

  std::span<const FunctionTemplate> templates() const { return templates_; }
  const FunctionTemplate& at(const std::string& id) const;
  const FunctionTemplate* find(const std::string& id) const;
  std::size_t count(RiskyCall call, Safety safety) const;
  std::size_t count(Safety safety) const;

 private:
  std::vector<FunctionTemplate> templates_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The shipped library: 8 calls x 15 vulnerable variants, and as many safe
/// functions (repaired twins plus independent safe functions).
FunctionLibrary build_function_library();

/// Process-wide immutable instance of build_function_library().
const FunctionLibrary& function_library();

/// Shared prologue of every rendered program and probe harness.
std::string_view program_prelude();

enum class Label { Positive, Negative };  // Positive: safe, Negative: vulnerable

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

struct SafePoolFilter {
  enum class Kind { AllSafe, ExcludeRepaired, OnlyRepairedOf } kind = Kind::AllSafe;
  RiskyCall call = RiskyCall::Strcpy;  // used by OnlyRepairedOf
};

struct VulnerablePoolFilter {
  enum class Kind { AllVulnerable, OnlyCall } kind = Kind::AllVulnerable;
  RiskyCall call = RiskyCall::Strcpy;  // used by OnlyCall
};

std::string to_string(const SafePoolFilter& filter);
std::string to_string(const VulnerablePoolFilter& filter);
SafePoolFilter parse_safe_filter(std::string_view text);
VulnerablePoolFilter parse_vulnerable_filter(std::string_view text);

struct CorpusSpec {
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t functions_per_program = 3;
  SafePoolFilter safe_pool;
  VulnerablePoolFilter vulnerable_pool;
  std::uint64_t seed = 0;
};

struct ProgramSample {
  std::string id;
  std::vector<std::string> function_ids;
  Label label = Label::Positive;
  std::string c_source;
};

std::vector<const FunctionTemplate*> safe_pool(const FunctionLibrary& library, const SafePoolFilter& filter);
std::vector<const FunctionTemplate*> vulnerable_pool(const FunctionLibrary& library,
                                                     const VulnerablePoolFilter& filter);

/// Renders a program with the functions renamed positionally (`fn0`, `fn1`, ...)
/// and a main() calling them in order.
std::string render_program(const FunctionLibrary& library, std::span<const std::string> function_ids);

ProgramSample sample_program(const FunctionLibrary& library, const CorpusSpec& spec, Label label,
                             std::mt19937_64& rng, std::string id = {});

/// Positives first, then negatives; sample i draws from a generator seeded by
/// (spec.seed, label, i) only.
std::vector<ProgramSample> generate_corpus(const FunctionLibrary& library, const CorpusSpec& spec);

std::string sample_id(Label label, std::size_t index);

// On-disk corpus: `<dir>/manifest.jsonl` plus one `<id>.c` per sample.
inline constexpr std::string_view kManifestName = "manifest.jsonl";
inline constexpr int kManifestFormatVersion = 1;

struct ManifestRecord {
  std::string id;
  Label label = Label::Positive;
  std::vector<std::string> function_ids;
  std::string path;  // relative to the corpus directory
};

void write_corpus(const std::filesystem::path& dir, std::span<const ProgramSample> samples);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& dir);

struct ProbeResult {
  std::size_t multiplier = 0;
  std::size_t input_length = 0;
  int exit_code = 0;
  bool overflow = false;
};

struct ValidationReport {
  std::string template_id;
  bool compiles = false;
  bool overflow_observed = false;
  bool sanitizer = false;  // probes ran under AddressSanitizer
  std::vector<ProbeResult> probes;
  std::string diagnostics;

  /// True when the observation agrees with the template's label.
  bool consistent(Safety safety) const {
    return compiles && overflow_observed == (safety == Safety::Vulnerable);
  }
};

inline constexpr std::array<std::size_t, 3> kProbeMultipliers = {1, 2, 10};

/// Compiles the template into a probe harness and feeds it inputs of 1x, 2x
/// and 10x its buffer size. Throws CompilerUnavailable without a C compiler.
ValidationReport validate_template(const FunctionTemplate& t, const std::string& compiler = "gcc");

}  // namespace bofnet::corpus
