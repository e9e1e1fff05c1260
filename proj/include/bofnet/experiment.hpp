// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bofnet/asm_pipeline.hpp"
#include "bofnet/corpus.hpp"
#include "bofnet/model.hpp"
#include "bofnet/training.hpp"
#include "bofnet/vocabulary.hpp"

namespace bofnet::experiment {

struct GridCell {
  std::size_t batch_size = 80;
  double learning_rate = 1e-3;
  bool caption_sourced = false;  // value taken from a figure caption rather than the stated grid

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// "b80-lr0.001"
std::string config_id(const GridCell& cell);
/// Parses "80:0.001,10:1.25e-4".
std::vector<GridCell> parse_grid(std::string_view text);
std::string format_grid(const std::vector<GridCell>& grid);

/// Model settings used by experiments. Every compiled program ends with
/// ~120 identical tokens (main and the property note), so the gates start
/// nearly closed on input and open on memory.
inline nn::ModelConfig default_model() {
  nn::ModelConfig m;
  m.forget_bias = 5.0;
  m.input_bias = -5.0;
  return m;
}

/// Training settings used by experiments. Dev CCR on a few dozen programs
/// sits on one value for many epochs before the next gain, so every epoch
/// runs and the earliest best-dev epoch is kept.
inline train::TrainConfig default_train() {
  train::TrainConfig t;
  t.early_stop_patience = 0;
  return t;
}

struct ExperimentSpec {
  std::string name = "Custom";
  corpus::CorpusSpec corpus;
  train::SplitSpec split;
  nn::ModelConfig model = default_model();
  train::TrainConfig train = default_train();  // batch size and learning rate are replaced per grid cell
  std::vector<GridCell> grid;
  std::optional<GridCell> best_known;
  std::vector<std::string> notes;  // reference values quoted in the report
};

std::vector<ExperimentSpec> experiment_presets();
std::optional<ExperimentSpec> find_preset(std::string_view name);

using LogFn = std::function<void(const std::string&)>;

struct CompileStats {
  std::size_t compiled = 0;
  std::size_t skipped = 0;
};

/// Compiles every manifest entry to `asm_dir/<id>.s`, skipping files that already exist.
CompileStats compile_corpus(const std::filesystem::path& corpus_dir, const std::filesystem::path& asm_dir,
                            std::string_view command_template = asmpipe::kDefaultCompileCommand,
                            const LogFn& log = {});

/// Normalizes and tokenizes `asm_dir/<id>.s` for every manifest entry, in manifest order.
std::vector<train::TokenSample> tokenize_corpus(const std::filesystem::path& corpus_dir,
                                                const std::filesystem::path& asm_dir);

struct PreparedData {
  std::vector<train::TokenSample> train_tokens;
  std::vector<train::TokenSample> dev_tokens;
  std::vector<train::TokenSample> test_tokens;
  asmpipe::Vocabulary vocab;
  std::vector<train::EncodedSample> train;
  std::vector<train::EncodedSample> dev;
  std::vector<train::EncodedSample> test;
};

/// Splits, builds the vocabulary from the training partition only, and encodes.
PreparedData prepare(std::vector<train::TokenSample> samples, const train::SplitSpec& split);

/// Token partitions under `dir`: train.tokens.jsonl, dev.tokens.jsonl, test.tokens.jsonl.
void write_token_partitions(const std::filesystem::path& dir, const PreparedData& data);
/// Encoded partitions under `dir`: train.ids.jsonl, dev.ids.jsonl, test.ids.jsonl.
void write_encoded_partitions(const std::filesystem::path& dir, const PreparedData& data);

inline constexpr std::string_view kMetricsFormat = "bofnet-metrics";
inline constexpr int kMetricsFormatVersion = 1;

std::string metrics_header_line();
std::string metrics_line(std::string_view experiment, std::string_view config, const train::MetricRecord& r);

struct CellResult {
  GridCell cell;
  std::string config_id;
  bool ok = false;
  std::string error;
  train::Metrics metrics;
};

struct Report {
  std::string experiment;
  std::vector<CellResult> cells;
  std::optional<std::size_t> best;  // index into cells
  train::Evaluation test;
  std::size_t n_train = 0;
  std::size_t n_dev = 0;
  std::size_t n_test = 0;
  std::size_t vocab_size = 0;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::string compile_command = std::string(asmpipe::kDefaultCompileCommand);
  LogFn log;
};

/// Runs the full pipeline into `out_dir`: corpus/, asm/, encoded/, vocab.txt,
/// metrics.jsonl, model.bin (best cell) and report.txt. A failing grid cell
/// is recorded and does not stop the others.
Report run_experiment(const ExperimentSpec& spec, const RunOptions& options);

std::string render_report(const ExperimentSpec& spec, const Report& report);

/// Best cell by dev CCR, then lower dev loss, then grid order.
std::optional<std::size_t> select_best(const std::vector<CellResult>& cells);

}  // namespace bofnet::experiment
