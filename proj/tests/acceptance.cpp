// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "bofnet/asm_pipeline.hpp"
#include "bofnet/corpus.hpp"
#include "bofnet/experiment.hpp"
#include "bofnet/model.hpp"
#include "bofnet/process.hpp"
#include "bofnet/training.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace bofnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::optional<json> summary_of(const std::vector<json>& records) {
  for (const auto& r : records) {
    if (r.value("kind", "") == "summary") return r;
  }
  return std::nullopt;
}

class Acceptance {
 public:
  Acceptance(std::string cli, fs::path work, std::string fixtures)
      : cli_(std::move(cli)), work_(std::move(work)), fixtures_(std::move(fixtures)) {}

  // Runs the CLI with a generous timeout; stderr goes to a log next to the run.
  CommandResult bofnet(const std::vector<std::string>& args, const fs::path& log) {
    std::vector<std::string> argv{cli_};
    argv.insert(argv.end(), args.begin(), args.end());
    auto r = run_command(argv, {}, std::chrono::hours(6));
    fs::create_directories(log.parent_path());
    std::ofstream(log) << r.std_out << r.std_err;
    return r;
  }

  Outcome sim1() {
    auto dir = work_ / "sim1-a";
    fs::remove_all(dir);
    auto t0 = Clock::now();
    auto r = bofnet({"experiment", "Sim1-desk", "--best-only", "--quiet", "--out", dir.string()}, work_ / "sim1-a.log");
    double elapsed = seconds_since(t0);
    sim1_seconds_ = elapsed;
    if (r.exit_code != 0) return {false, "experiment exited with " + std::to_string(r.exit_code)};
    auto s = summary_of(read_jsonl(dir / "metrics.jsonl"));
    if (!s) return {false, "no summary record"};
    double ccr = s->at("test_ccr");
    bool pass = ccr >= 0.95 && elapsed <= 1800.0 && s->at("config_id") == "b80-lr0.001";
    return {pass, "test_ccr " + fmt("%.4f", ccr) + " (need >= 0.95), runtime " + fmt("%.0f", elapsed) +
                      " s (need <= 1800), best epoch " + s->at("best_epoch").dump()};
  }

  Outcome sim2() {
    auto dir = work_ / "sim2";
    auto high = work_ / "sim2-lr0.0025";
    fs::remove_all(dir);
    fs::remove_all(high);
    std::vector<std::string> common{"experiment", "Sim2", "--positive", "100", "--negative", "100", "--quiet"};
    auto a = common;
    a.insert(a.end(), {"--grid", "10:0.000125", "--out", dir.string()});
    auto ra = bofnet(a, work_ / "sim2.log");
    auto b = common;
    b.insert(b.end(), {"--grid", "10:0.0025", "--out", high.string()});
    auto rb = bofnet(b, work_ / "sim2-lr0.0025.log");
    if (ra.exit_code != 0) return {false, "lr 1.25e-4 run exited with " + std::to_string(ra.exit_code)};
    auto s = summary_of(read_jsonl(dir / "metrics.jsonl"));
    if (!s) return {false, "lr 1.25e-4 run has no summary"};
    double ccr = s->at("test_ccr");

    // The high rate only has to be recorded: epoch records or a failed record.
    bool recorded = false;
    std::string high_note = "no records";
    if (rb.exit_code == 0 && fs::exists(high / "metrics.jsonl")) {
      auto recs = read_jsonl(high / "metrics.jsonl");
      for (const auto& rec : recs) {
        auto kind = rec.value("kind", "");
        if (kind == "epoch" || kind == "failed") recorded = true;
      }
      auto hs = summary_of(recs);
      high_note = hs ? "test_ccr " + fmt("%.4f", hs->at("test_ccr")) : "recorded as failed";
    }
    return {ccr >= 0.90 && recorded, "lr 1.25e-4 test_ccr " + fmt("%.4f", ccr) + " (need >= 0.90); lr 2.5e-3 exit " +
                                         std::to_string(rb.exit_code) + ", " + high_note};
  }

  Outcome sim3() {
    auto dir = work_ / "sim3";
    fs::remove_all(dir);
    auto r = bofnet({"experiment", "Sim3", "--positive", "160", "--negative", "160", "--grid", "80:0.001", "--quiet",
                     "--out", dir.string()},
                    work_ / "sim3.log");
    if (r.exit_code != 0) return {false, "experiment exited with " + std::to_string(r.exit_code)};
    std::vector<json> epochs;
    for (const auto& rec : read_jsonl(dir / "metrics.jsonl")) {
      if (rec.value("kind", "") == "epoch") epochs.push_back(rec);
    }
    if (epochs.empty()) return {false, "no epoch records"};
    double first = epochs.front().at("train_loss"), last = epochs.back().at("train_loss");
    double best_dev = 0.0, prev = -1.0;
    bool monotone = true;
    for (const auto& e : epochs) {
      double b = e.at("best_dev_ccr");
      monotone = monotone && b >= prev;
      prev = b;
      best_dev = std::max<double>(best_dev, e.at("dev_ccr"));
    }
    bool reference = slurp(dir / "report.txt").find("0.057") != std::string::npos;
    bool pass = last < first && best_dev >= 0.85 && monotone && reference;
    return {pass, "train_loss " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) + ", best dev_ccr " +
                      fmt("%.4f", best_dev) + " (need >= 0.85), best-dev series " +
                      (monotone ? "monotone" : "NOT monotone") + ", " + std::to_string(epochs.size()) + " epochs" +
                      (reference ? "" : ", reference values missing from report")};
  }

  Outcome gradients() {
    auto t0 = Clock::now();
    double worst = 0.0;
    std::string worst_group;
    int checks = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      for (auto mode : {nn::Mode::Eval, nn::Mode::Train}) {
        auto r = testing::gradient_check(seed, mode);
        ++checks;
        for (const auto& [g, e] : r.max_rel_error) {
          if (e >= worst) {
            worst = e;
            worst_group = g;
          }
        }
      }
    }
    double elapsed = seconds_since(t0);
    return {worst < 1e-4 && elapsed < 60.0, std::to_string(checks) + " models, max relative error " +
                                                fmt("%.2e", worst) + " (" + worst_group + "), " +
                                                fmt("%.1f", elapsed) + " s"};
  }

  Outcome losses() {
    std::vector<double> p{0.5}, y{1};
    double e1 = std::abs(nn::bce_loss(p, y) - std::numbers::ln2);
    nn::ModelConfig cfg{7, 5, 4, 2, 0.5, 3};
    auto params = nn::init_params(cfg);
    std::vector<std::vector<std::int32_t>> seqs{{1, 4, 2, 6}};
    auto batch = nn::Batch::from_sequences(seqs);
    double e2 = 0.0;
    for (double label : {0.0, 1.0}) {
      nn::ForwardState st;
      auto prob = nn::forward(params, batch, nn::Mode::Eval, nullptr, st);
      std::vector<double> labels{label};
      auto g = nn::backward(st, labels);
      e2 = std::max(e2, std::abs(g.flat()[static_cast<Eigen::Index>(params.layout().b_out)] - (prob[0] - label)));
    }
    return {e1 < 1e-12 && e2 < 1e-12,
            "|bce(0.5,1) - ln 2| = " + fmt("%.1e", e1) + ", |dL/db_out - (p - y)| = " + fmt("%.1e", e2)};
  }

  Outcome parser() {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fs::path(fixtures_) / "asm")) {
      if (e.path().extension() == ".s") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    bool has_listing = false;
    std::size_t golden_ok = 0, idempotent = 0;
    for (const auto& s : files) {
      has_listing = has_listing || s.filename() == "listing3.s";
      auto golden = s;
      golden.replace_extension(".golden");
      auto norm = asmpipe::normalize(asmpipe::load_asm(s));
      std::string text;
      for (const auto& l : norm.lines) text += l + "\n";
      if (fs::exists(golden) && text == slurp(golden)) ++golden_ok;
      if (asmpipe::normalize(norm).lines == norm.lines) ++idempotent;
    }
    auto tokens = asmpipe::tokenize_line("mov     QWORD PTR -104[rbp], rdi");
    std::multiset<std::string> got(tokens.begin(), tokens.end());
    std::multiset<std::string> want{"mov", "QWORD", "PTR", "-104", "[", "]", ",", "rbp", "rdi", "\n"};
    bool pass = files.size() >= 10 && has_listing && golden_ok == files.size() && idempotent == files.size() &&
                got == want;
    return {pass, std::to_string(golden_ok) + "/" + std::to_string(files.size()) + " golden matches, " +
                      std::to_string(idempotent) + " idempotent, listing fixture " + (has_listing ? "present" : "missing") +
                      ", token multiset " + (got == want ? "exact" : "differs")};
  }

  Outcome determinism() {
    auto a = work_ / "sim1-a";
    auto b = work_ / "sim1-b";
    if (!fs::exists(a / "model.bin")) {
      auto r = bofnet({"experiment", "Sim1-desk", "--best-only", "--quiet", "--out", a.string()}, work_ / "sim1-a.log");
      if (r.exit_code != 0) return {false, "first run exited with " + std::to_string(r.exit_code)};
    }
    fs::remove_all(b);
    auto r = bofnet({"experiment", "Sim1-desk", "--best-only", "--quiet", "--out", b.string()}, work_ / "sim1-b.log");
    if (r.exit_code != 0) return {false, "second run exited with " + std::to_string(r.exit_code)};
    bool metrics = slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl");
    bool model = slurp(a / "model.bin") == slurp(b / "model.bin");
    bool vocab = slurp(a / "vocab.txt") == slurp(b / "vocab.txt");
    return {metrics && model && vocab, std::string("metrics.jsonl ") + (metrics ? "identical" : "DIFFER") +
                                           ", model.bin " + (model ? "identical" : "DIFFER") + ", vocab.txt " +
                                           (vocab ? "identical" : "DIFFER")};
  }

  Outcome split_contract() {
    auto dir = work_ / "split";
    fs::remove_all(dir);
    corpus::CorpusSpec spec;
    spec.n_positive = 500;
    spec.n_negative = 500;
    spec.functions_per_program = 1;
    spec.seed = 8;
    corpus::write_corpus(dir / "corpus", corpus::generate_corpus(corpus::function_library(), spec));
    experiment::compile_corpus(dir / "corpus", dir / "asm");
    auto samples = experiment::tokenize_corpus(dir / "corpus", dir / "asm");

    std::vector<corpus::Label> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    train::SplitSpec split;
    split.seed = 8;
    auto part = train::split_dataset(labels, split);
    std::vector<int> owner(samples.size(), 0);
    bool disjoint = true;
    for (auto* p : {&part.train, &part.dev, &part.test}) {
      for (auto i : *p) disjoint = disjoint && ++owner[i] == 1;
    }
    bool exhaustive = std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; });
    auto near = [](std::size_t got, std::size_t want) { return got + 1 >= want && got <= want + 1; };
    bool sizes = near(part.train.size(), 720) && near(part.dev.size(), 80) && near(part.test.size(), 200);

    // Instrumentation: record every token seen per partition, then check the
    // vocabulary against the training set from the full pipeline.
    auto data = experiment::prepare(samples, split);
    std::set<std::string> train_tokens, other_tokens;
    for (const auto& s : data.train_tokens) train_tokens.insert(s.tokens.begin(), s.tokens.end());
    for (const auto* set : {&data.dev_tokens, &data.test_tokens}) {
      for (const auto& s : *set) other_tokens.insert(s.tokens.begin(), s.tokens.end());
    }
    std::size_t held_out_only = 0, leaked = 0;
    for (const auto& t : other_tokens) {
      if (train_tokens.count(t)) continue;
      ++held_out_only;
      if (data.vocab.find(t)) ++leaked;
    }
    std::size_t unseen = 0;
    for (asmpipe::TokenId id = 2; id < static_cast<asmpipe::TokenId>(data.vocab.size()); ++id) {
      if (!train_tokens.count(data.vocab.token(id))) ++unseen;
    }
    bool same_partition = data.train.size() == part.train.size() && data.test.size() == part.test.size();
    bool pass = disjoint && exhaustive && sizes && leaked == 0 && unseen == 0 && same_partition;
    fs::remove_all(dir);
    return {pass, "sizes " + std::to_string(part.train.size()) + "/" + std::to_string(part.dev.size()) + "/" +
                      std::to_string(part.test.size()) + ", " + (disjoint ? "disjoint" : "OVERLAP") + ", " +
                      (exhaustive ? "exhaustive" : "INCOMPLETE") + ", " + std::to_string(held_out_only) +
                      " held-out-only tokens, " + std::to_string(leaked) + " in vocabulary, " +
                      std::to_string(unseen) + " vocabulary entries absent from train"};
  }

  double sim1_seconds() const { return sim1_seconds_; }

 private:
  std::string cli_;
  fs::path work_;
  std::string fixtures_;
  double sim1_seconds_ = 0.0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-8"};
  std::string cli = BOFNET_CLI_PATH;
  fs::path work = fs::temp_directory_path() / "bofnet-acceptance";
  std::vector<int> only;
  app.add_option("--cli", cli, "bofnet executable");
  app.add_option("--work", work, "scratch directory for experiment runs");
  app.add_option("--only", only, "criteria to run (default all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = {4, 5, 6, 8, 1, 7, 2, 3};
  fs::create_directories(work);

  Acceptance acc(cli, work, BOFNET_FIXTURE_DIR);
  std::map<int, Outcome> results;
  bool all = true;
  for (int c : only) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      switch (c) {
        case 1: o = acc.sim1(); break;
        case 2: o = acc.sim2(); break;
        case 3: o = acc.sim3(); break;
        case 4: o = acc.gradients(); break;
        case 5: o = acc.losses(); break;
        case 6: o = acc.parser(); break;
        case 7: o = acc.determinism(); break;
        case 8: o = acc.split_contract(); break;
        default: o = {false, "unknown criterion"};
      }
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d: %s  %s  [%.0f s]\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
