// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bofnet/corpus.hpp"
#include "bofnet/error.hpp"
#include "bofnet/random.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace bofnet::corpus {

std::string_view to_string(RiskyCall call) {
  switch (call) {
    case RiskyCall::Strcpy: return "strcpy";
    case RiskyCall::Strncpy: return "strncpy";
    case RiskyCall::Strcat: return "strcat";
    case RiskyCall::Scanf: return "scanf";
    case RiskyCall::Sprintf: return "sprintf";
    case RiskyCall::Gets: return "gets";
    case RiskyCall::Fgets: return "fgets";
    case RiskyCall::Memcpy: return "memcpy";
  }
  return "?";
}

std::optional<RiskyCall> parse_risky_call(std::string_view name) {
  for (auto call : kRiskyCalls) {
    if (to_string(call) == name) return call;
  }
  return std::nullopt;
}

std::string_view to_string(Label label) { return label == Label::Positive ? "positive" : "negative"; }

std::optional<Label> parse_label(std::string_view text) {
  if (text == "positive") return Label::Positive;
  if (text == "negative") return Label::Negative;
  return std::nullopt;
}

std::string to_string(const SafePoolFilter& filter) {
  switch (filter.kind) {
    case SafePoolFilter::Kind::AllSafe: return "AllSafe";
    case SafePoolFilter::Kind::ExcludeRepaired: return "ExcludeRepaired";
    case SafePoolFilter::Kind::OnlyRepairedOf:
      return "OnlyRepairedOf(" + std::string(to_string(filter.call)) + ")";
  }
  return "?";
}

std::string to_string(const VulnerablePoolFilter& filter) {
  if (filter.kind == VulnerablePoolFilter::Kind::AllVulnerable) return "AllVulnerable";
  return "OnlyCall(" + std::string(to_string(filter.call)) + ")";
}

namespace {

// Parses `Name(arg)`; returns {Name, arg} with arg empty when absent.
std::pair<std::string, std::string> split_call_syntax(std::string_view text) {
  auto open = text.find('(');
  if (open == std::string_view::npos) return {std::string(text), {}};
  if (text.back() != ')') throw Error(ErrorCode::InvalidArgument, "malformed filter: " + std::string(text));
  return {std::string(text.substr(0, open)), std::string(text.substr(open + 1, text.size() - open - 2))};
}

RiskyCall require_call(const std::string& name, std::string_view context) {
  auto call = parse_risky_call(name);
  if (!call) throw Error(ErrorCode::InvalidArgument, "unknown risky call '" + name + "' in " + std::string(context));
  return *call;
}

}  // namespace

SafePoolFilter parse_safe_filter(std::string_view text) {
  auto [name, arg] = split_call_syntax(text);
  if (name == "AllSafe" && arg.empty()) return {SafePoolFilter::Kind::AllSafe};
  if (name == "ExcludeRepaired" && arg.empty()) return {SafePoolFilter::Kind::ExcludeRepaired};
  if (name == "OnlyRepairedOf") return {SafePoolFilter::Kind::OnlyRepairedOf, require_call(arg, text)};
  throw Error(ErrorCode::InvalidArgument, "unknown safe pool filter: " + std::string(text));
}

VulnerablePoolFilter parse_vulnerable_filter(std::string_view text) {
  auto [name, arg] = split_call_syntax(text);
  if (name == "AllVulnerable" && arg.empty()) return {VulnerablePoolFilter::Kind::AllVulnerable};
  if (name == "OnlyCall") return {VulnerablePoolFilter::Kind::OnlyCall, require_call(arg, text)};
  throw Error(ErrorCode::InvalidArgument, "unknown vulnerable pool filter: " + std::string(text));
}

std::string FunctionTemplate::definition() const { return definition(name); }

std::string FunctionTemplate::definition(std::string_view function_name) const {
  std::string out = body;
  auto pos = out.find(kNamePlaceholder);
  if (pos != std::string::npos) out.replace(pos, kNamePlaceholder.size(), function_name);
  return out;
}

FunctionLibrary::FunctionLibrary(std::vector<FunctionTemplate> templates) : templates_(std::move(templates)) {
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (!index_.emplace(templates_[i].id, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate template id " + templates_[i].id);
    }
  }
}

const FunctionTemplate* FunctionLibrary::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &templates_[it->second];
}

const FunctionTemplate& FunctionLibrary::at(const std::string& id) const {
  const auto* t = find(id);
  if (!t) throw Error(ErrorCode::InvalidArgument, "unknown template id " + id);
  return *t;
}

std::size_t FunctionLibrary::count(RiskyCall call, Safety safety) const {
  return static_cast<std::size_t>(std::count_if(templates_.begin(), templates_.end(), [&](const auto& t) {
    return t.call == call && t.safety == safety;
  }));
}

std::size_t FunctionLibrary::count(Safety safety) const {
  return static_cast<std::size_t>(
      std::count_if(templates_.begin(), templates_.end(), [&](const auto& t) { return t.safety == safety; }));
}

const FunctionLibrary& function_library() {
  static const FunctionLibrary library = build_function_library();
  return library;
}

std::vector<const FunctionTemplate*> safe_pool(const FunctionLibrary& library, const SafePoolFilter& filter) {
  std::vector<const FunctionTemplate*> pool;
  for (const auto& t : library.templates()) {
    if (t.safety != Safety::Safe) continue;
    switch (filter.kind) {
      case SafePoolFilter::Kind::AllSafe:
        pool.push_back(&t);
        break;
      case SafePoolFilter::Kind::ExcludeRepaired:
        if (!t.repaired_of) pool.push_back(&t);
        break;
      case SafePoolFilter::Kind::OnlyRepairedOf:
        if (t.repaired_of && t.call == filter.call) pool.push_back(&t);
        break;
    }
  }
  return pool;
}

std::vector<const FunctionTemplate*> vulnerable_pool(const FunctionLibrary& library,
                                                     const VulnerablePoolFilter& filter) {
  std::vector<const FunctionTemplate*> pool;
  for (const auto& t : library.templates()) {
    if (t.safety != Safety::Vulnerable) continue;
    if (filter.kind == VulnerablePoolFilter::Kind::OnlyCall && t.call != filter.call) continue;
    pool.push_back(&t);
  }
  return pool;
}

namespace {

std::string c_string_literal(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_program(const FunctionLibrary& library, std::span<const std::string> function_ids) {
  std::string src(program_prelude());
  std::string calls;
  for (std::size_t i = 0; i < function_ids.size(); ++i) {
    const auto& t = library.at(function_ids[i]);
    auto name = "fn" + std::to_string(i);
    src += '\n';
    src += t.definition(name);
    calls += "    " + name + "(" + (t.input == InputKind::Argument ? c_string_literal(t.call_argument) : "") + ");\n";
  }
  src += "\nint main(void)\n{\n" + calls + "    return 0;\n}\n";
  return src;
}

ProgramSample sample_program(const FunctionLibrary& library, const CorpusSpec& spec, Label label,
                             std::mt19937_64& rng, std::string id) {
  const std::size_t nf = spec.functions_per_program;
  if (nf == 0) throw Error(ErrorCode::InvalidArgument, "functions_per_program must be >= 1");

  auto safe = safe_pool(library, spec.safe_pool);
  const std::size_t safe_needed = label == Label::Positive ? nf : nf - 1;
  if (safe_needed > 0 && safe.empty()) {
    throw Error(ErrorCode::EmptyPool, "safe pool " + to_string(spec.safe_pool) + " is empty");
  }
  if (safe.size() < safe_needed) {
    throw Error(ErrorCode::PoolTooSmall, "need " + std::to_string(safe_needed) + " distinct safe functions, pool " +
                                             to_string(spec.safe_pool) + " has " + std::to_string(safe.size()));
  }

  ProgramSample sample;
  sample.id = std::move(id);
  sample.label = label;
  // Partial Fisher-Yates: draw without replacement in sampled order.
  for (std::size_t i = 0; i < safe_needed; ++i) {
    std::swap(safe[i], safe[i + uniform_index(rng, safe.size() - i)]);
    sample.function_ids.push_back(safe[i]->id);
  }
  if (label == Label::Negative) {
    auto vulnerable = vulnerable_pool(library, spec.vulnerable_pool);
    if (vulnerable.empty()) {
      throw Error(ErrorCode::EmptyPool, "vulnerable pool " + to_string(spec.vulnerable_pool) + " is empty");
    }
    const auto* pick = vulnerable[uniform_index(rng, vulnerable.size())];
    auto slot = uniform_index(rng, nf);
    sample.function_ids.insert(sample.function_ids.begin() + static_cast<std::ptrdiff_t>(slot), pick->id);
  }
  sample.c_source = render_program(library, sample.function_ids);
  return sample;
}

std::string sample_id(Label label, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06zu", label == Label::Positive ? "pos" : "neg", index);
  return buf;
}

std::vector<ProgramSample> generate_corpus(const FunctionLibrary& library, const CorpusSpec& spec) {
  std::vector<ProgramSample> samples;
  samples.reserve(spec.n_positive + spec.n_negative);
  for (auto [label, count] : {std::pair{Label::Positive, spec.n_positive}, std::pair{Label::Negative, spec.n_negative}}) {
    for (std::size_t i = 0; i < count; ++i) {
      std::mt19937_64 rng(derive_seed(spec.seed, label == Label::Positive ? 1 : 2, i));
      samples.push_back(sample_program(library, spec, label, rng, sample_id(label, i)));
    }
  }
  return samples;
}

void write_corpus(const fs::path& dir, std::span<const ProgramSample> samples) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / kManifestName, std::ios::binary);
  if (!manifest) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
  manifest << json{{"format", "bofnet-corpus"}, {"version", kManifestFormatVersion}, {"count", samples.size()}}.dump()
           << '\n';
  for (const auto& s : samples) {
    auto file = s.id + ".c";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / file).string());
    out << s.c_source;
    manifest << json{{"id", s.id}, {"label", to_string(s.label)}, {"function_ids", s.function_ids}, {"path", file}}.dump()
             << '\n';
  }
}

std::vector<ManifestRecord> read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestName, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / kManifestName).string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::CorruptFile, "empty manifest");
  std::vector<ManifestRecord> records;
  try {
    auto header = json::parse(line);
    if (header.at("format") != "bofnet-corpus") throw Error(ErrorCode::CorruptFile, "not a corpus manifest");
    if (header.at("version") != kManifestFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "manifest version " + header.at("version").dump());
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      ManifestRecord r;
      r.id = j.at("id").get<std::string>();
      auto label = parse_label(j.at("label").get<std::string>());
      if (!label) throw Error(ErrorCode::CorruptFile, "bad label in manifest: " + line);
      r.label = *label;
      r.function_ids = j.at("function_ids").get<std::vector<std::string>>();
      r.path = j.at("path").get<std::string>();
      records.push_back(std::move(r));
    }
    if (records.size() != header.at("count").get<std::size_t>()) {
      throw Error(ErrorCode::CorruptFile, "manifest record count mismatch");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("manifest: ") + e.what());
  }
  return records;
}

}  // namespace bofnet::corpus
