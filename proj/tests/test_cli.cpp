// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "bofnet/cli.hpp"
#include "bofnet/process.hpp"

namespace fs = std::filesystem;
using namespace bofnet;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"generate"}).code == cli::kExitUsage);  // --out missing
  CHECK(run({"generate", "--out", "x", "--bogus"}).code == cli::kExitUsage);
  CHECK(run({"experiment", "NoSuchPreset", "--out", "x"}).code == cli::kExitUsage);
  CHECK(run({"generate", "--out", "x", "--positive", "many"}).code == cli::kExitUsage);
  CHECK(run({"generate", "--out", "x", "--set", "corpus.nope=1"}).code == cli::kExitUsage);
  auto r = run({"frobnicate"});
  CHECK(r.err.find("usage error") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
  auto r = run({"--help"});
  CHECK(r.code == cli::kExitOk);
  for (auto sub : {"generate", "compile", "preprocess", "vocab", "train", "eval", "predict", "experiment"}) {
    CHECK(r.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("runtime failures exit with 1") {
  auto dir = fs::temp_directory_path() / "bofnet-test-cli-fail";
  fs::remove_all(dir);
  fs::create_directories(dir);
  { std::ofstream(dir / "v.txt") << "not a vocabulary\n"; }
  { std::ofstream(dir / "m.bin") << "junk"; }
  { std::ofstream(dir / "a.s") << "\tret\n"; }
  auto r = run({"predict", "--model", (dir / "m.bin").string(), "--vocab", (dir / "v.txt").string(),
                (dir / "a.s").string()});
  CHECK(r.code == cli::kExitFailure);
  CHECK_FALSE(r.err.empty());
  fs::remove_all(dir);
}

TEST_CASE("the step-by-step pipeline runs end to end") {
  if (!find_program("gcc")) return;
  auto dir = fs::temp_directory_path() / "bofnet-test-cli";
  fs::remove_all(dir);
  auto p = [&](const char* sub) { return (dir / sub).string(); };

  auto g = run({"generate", "--out", p("corpus"), "--positive", "10", "--negative", "10", "--functions", "1",
                "--seed", "4"});
  REQUIRE(g.code == 0);
  REQUIRE(run({"compile", "--corpus", p("corpus"), "--out", p("asm")}).code == 0);
  auto pre = run({"preprocess", "--corpus", p("corpus"), "--asm", p("asm"), "--out", p("data"), "--seed", "4"});
  REQUIRE(pre.code == 0);
  CHECK(pre.out.find("train 14, dev 2, test 4") != std::string::npos);
  REQUIRE(run({"vocab", "--data", p("data"), "--out", p("vocab.txt")}).code == 0);
  auto t = run({"train", "--data", p("data"), "--vocab", p("vocab.txt"), "--out", p("run"), "--embed-dim", "8",
                "--hidden-dim", "4", "--max-epochs", "2", "--batch-size", "4", "--quiet"});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "run" / "model.bin"));
  CHECK(fs::exists(dir / "run" / "metrics.jsonl"));
  CHECK(fs::exists(dir / "run" / "config.echo"));

  auto e = run({"eval", "--model", p("run/model.bin"), "--vocab", p("vocab.txt"), "--data", p("data"),
                "--partition", "test"});
  REQUIRE(e.code == 0);
  CHECK(std::regex_search(e.out, std::regex("^ccr [01]\\.\\d{6}\nloss \\d+\\.\\d{6}\ncount 4\n$")));

  auto any_s = fs::directory_iterator(dir / "asm")->path().string();
  auto pr = run({"predict", "--model", p("run/model.bin"), "--vocab", p("vocab.txt"), any_s});
  REQUIRE(pr.code == 0);
  CHECK(std::regex_match(pr.out, std::regex("probability_safe [01]\\.\\d{6}\n(SAFE|VULNERABLE)\n")));

  auto any_c = (dir / "corpus" / "programs").string();
  for (const auto& entry : fs::recursive_directory_iterator(dir / "corpus")) {
    if (entry.path().extension() == ".c") {
      any_c = entry.path().string();
      break;
    }
  }
  auto pc = run({"predict", "--model", p("run/model.bin"), "--vocab", p("vocab.txt"), any_c});
  CHECK(pc.code == 0);
  CHECK(pc.out.substr(0, 17) == "probability_safe ");

  // A different vocabulary is refused.
  { std::ofstream(dir / "other.txt") << "bofnet-vocab 1 3\n0\t<PAD>\n1\t<UNK>\n2\tmov\n"; }
  auto mismatch = run({"eval", "--model", p("run/model.bin"), "--vocab", p("other.txt"), "--data", p("data")});
  CHECK(mismatch.code == cli::kExitFailure);
  fs::remove_all(dir);
}
