// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "bofnet/corpus.hpp"
#include "bofnet/error.hpp"
#include "bofnet/process.hpp"
#include "bofnet/random.hpp"

namespace fs = std::filesystem;
using namespace bofnet;
using namespace bofnet::corpus;

TEST_CASE("library holds 120 vulnerable and 120 safe templates, 15 per call") {
  const auto& lib = function_library();
  CHECK(lib.templates().size() == 240);
  CHECK(lib.count(Safety::Vulnerable) == 120);
  CHECK(lib.count(Safety::Safe) == 120);
  for (auto call : kRiskyCalls) {
    CAPTURE(to_string(call));
    CHECK(lib.count(call, Safety::Vulnerable) == kVariantsPerCall);
    CHECK(lib.count(call, Safety::Safe) == kVariantsPerCall);
  }
  std::set<std::string> ids;
  for (const auto& t : lib.templates()) ids.insert(t.id);
  CHECK(ids.size() == 240);
}

TEST_CASE("repaired twins point at a vulnerable template of the same family") {
  const auto& lib = function_library();
  std::size_t twins = 0;
  std::set<std::string> targets;
  for (const auto& t : lib.templates()) {
    if (!t.repaired_of) continue;
    ++twins;
    CHECK(t.safety == Safety::Safe);
    const auto& v = lib.at(*t.repaired_of);
    CHECK(v.safety == Safety::Vulnerable);
    CHECK(v.call == t.call);
    CHECK(v.variant_index == t.variant_index);
    targets.insert(*t.repaired_of);
  }
  CHECK(twins == 8 * kRepairedVariants);
  CHECK(targets.size() == twins);
}

TEST_CASE("the memcpy example pair differs only in the length argument") {
  const auto& lib = function_library();
  const auto& vuln = lib.at("memcpy-v01-vuln");
  const auto& safe = lib.at("memcpy-v01-safe");
  CHECK(vuln.body.find("memcpy(dest,s,strlen(s));") != std::string::npos);
  CHECK(safe.body.find("memcpy(dest,s,sizeof(dest));") != std::string::npos);
  CHECK(vuln.body.find("char dest[256];") != std::string::npos);
}

TEST_CASE("pool filters") {
  const auto& lib = function_library();
  CHECK(safe_pool(lib, {SafePoolFilter::Kind::AllSafe, RiskyCall::Strcpy}).size() == 120);
  CHECK(safe_pool(lib, {SafePoolFilter::Kind::ExcludeRepaired, RiskyCall::Strcpy}).size() == 40);
  auto fgets_twins = safe_pool(lib, {SafePoolFilter::Kind::OnlyRepairedOf, RiskyCall::Fgets});
  CHECK(fgets_twins.size() == kRepairedVariants);
  for (const auto* t : fgets_twins) CHECK(t->call == RiskyCall::Fgets);
  CHECK(vulnerable_pool(lib, {VulnerablePoolFilter::Kind::AllVulnerable, RiskyCall::Strcpy}).size() == 120);
  CHECK(vulnerable_pool(lib, {VulnerablePoolFilter::Kind::OnlyCall, RiskyCall::Fgets}).size() == 15);

  CHECK(to_string(parse_safe_filter("OnlyRepairedOf(fgets)")) == "OnlyRepairedOf(fgets)");
  CHECK(to_string(parse_vulnerable_filter("OnlyCall(memcpy)")) == "OnlyCall(memcpy)");
  CHECK_THROWS_AS(parse_safe_filter("OnlyRepairedOf(nope)"), Error);
  CHECK_THROWS_AS(parse_safe_filter("Sometimes"), Error);
}

TEST_CASE("sampled programs have the right composition") {
  const auto& lib = function_library();
  CorpusSpec spec;
  spec.functions_per_program = 3;
  spec.safe_pool.kind = SafePoolFilter::Kind::ExcludeRepaired;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto label = i % 2 ? Label::Negative : Label::Positive;
    auto s = sample_program(lib, spec, label, rng);
    REQUIRE(s.function_ids.size() == 3);
    std::set<std::string> distinct(s.function_ids.begin(), s.function_ids.end());
    CHECK(distinct.size() == 3);
    std::size_t vulnerable = 0;
    for (const auto& id : s.function_ids) {
      const auto& t = lib.at(id);
      if (t.safety == Safety::Vulnerable) {
        ++vulnerable;
      } else {
        CHECK(!t.repaired_of);
      }
    }
    CHECK(vulnerable == (label == Label::Negative ? 1u : 0u));
    CHECK(s.c_source.find("int main(void)") != std::string::npos);
  }
}

TEST_CASE("single-function negatives hold only the vulnerable function") {
  CorpusSpec spec;
  spec.functions_per_program = 1;
  std::mt19937_64 rng(1);
  auto s = sample_program(function_library(), spec, Label::Negative, rng);
  REQUIRE(s.function_ids.size() == 1);
  CHECK(function_library().at(s.function_ids[0]).safety == Safety::Vulnerable);
}

TEST_CASE("the vulnerable function lands in every slot") {
  CorpusSpec spec;
  spec.functions_per_program = 3;
  spec.safe_pool.kind = SafePoolFilter::Kind::ExcludeRepaired;
  std::mt19937_64 rng(9);
  std::set<std::size_t> slots;
  for (int i = 0; i < 60; ++i) {
    auto s = sample_program(function_library(), spec, Label::Negative, rng);
    for (std::size_t k = 0; k < s.function_ids.size(); ++k) {
      if (function_library().at(s.function_ids[k]).safety == Safety::Vulnerable) slots.insert(k);
    }
  }
  CHECK(slots.size() == 3);
}

TEST_CASE("rendered programs do not reveal template names") {
  std::vector<std::string> ids{"memcpy-v01-vuln", "strcpy-v12-safe"};
  auto src = render_program(function_library(), ids);
  CHECK(src.find("fn0") != std::string::npos);
  CHECK(src.find("fn1") != std::string::npos);
  for (const auto& id : ids) CHECK(src.find(function_library().at(id).name) == std::string::npos);
}

TEST_CASE("pool errors") {
  CorpusSpec spec;
  spec.functions_per_program = kRepairedVariants + 1;
  spec.safe_pool = {SafePoolFilter::Kind::OnlyRepairedOf, RiskyCall::Fgets};
  std::mt19937_64 rng(1);
  try {
    sample_program(function_library(), spec, Label::Positive, rng);
    FAIL("expected PoolTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PoolTooSmall);
  }

  std::vector<FunctionTemplate> only_vulnerable;
  for (const auto& t : function_library().templates()) {
    if (t.safety == Safety::Vulnerable) only_vulnerable.push_back(t);
  }
  FunctionLibrary lib(only_vulnerable);
  spec = {};
  spec.functions_per_program = 2;
  try {
    sample_program(lib, spec, Label::Negative, rng);
    FAIL("expected EmptyPool");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPool);
  }
  spec.functions_per_program = 1;
  CHECK_NOTHROW(sample_program(lib, spec, Label::Negative, rng));
}

TEST_CASE("corpus generation is deterministic and round-trips through the manifest") {
  CorpusSpec spec;
  spec.n_positive = 6;
  spec.n_negative = 4;
  spec.functions_per_program = 3;
  spec.safe_pool.kind = SafePoolFilter::Kind::ExcludeRepaired;
  spec.seed = 42;
  auto a = generate_corpus(function_library(), spec);
  auto b = generate_corpus(function_library(), spec);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].function_ids == b[i].function_ids);
    CHECK(a[i].c_source == b[i].c_source);
  }
  spec.seed = 43;
  auto c = generate_corpus(function_library(), spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].function_ids != c[i].function_ids;
  CHECK(differs);

  auto dir = fs::temp_directory_path() / "bofnet-test-corpus";
  fs::remove_all(dir);
  write_corpus(dir, a);
  auto records = read_manifest(dir);
  REQUIRE(records.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(records[i].id == a[i].id);
    CHECK(records[i].label == a[i].label);
    CHECK(records[i].function_ids == a[i].function_ids);
    CHECK(fs::exists(dir / records[i].path));
  }
  fs::remove_all(dir);
}

TEST_CASE("rendered programs compile") {
  if (!find_program("gcc")) return;
  CorpusSpec spec;
  spec.n_positive = 2;
  spec.n_negative = 2;
  spec.functions_per_program = 5;
  spec.seed = 3;
  auto dir = fs::temp_directory_path() / "bofnet-test-compiles";
  fs::remove_all(dir);
  write_corpus(dir, generate_corpus(function_library(), spec));
  for (const auto& r : read_manifest(dir)) {
    auto res = run_command({"gcc", "-std=gnu17", "-Wall", "-Werror=implicit-function-declaration", "-c",
                            (dir / r.path).string(), "-o", (dir / (r.id + ".o")).string()});
    CAPTURE(res.std_err);
    CHECK(res.exit_code == 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("probe validation separates a vulnerable template from its twin") {
  if (!find_program("gcc")) return;
  for (auto id : {"memcpy-v01", "gets-v02", "fgets-v03", "scanf-v04"}) {
    auto vuln = validate_template(function_library().at(std::string(id) + "-vuln"));
    auto safe = validate_template(function_library().at(std::string(id) + "-safe"));
    CAPTURE(id);
    CAPTURE(vuln.diagnostics);
    CHECK(vuln.consistent(Safety::Vulnerable));
    CHECK(safe.consistent(Safety::Safe));
    CHECK(vuln.probes.size() == kProbeMultipliers.size());
  }
}
