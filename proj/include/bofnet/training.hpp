// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bofnet/asm_pipeline.hpp"
#include "bofnet/corpus.hpp"
#include "bofnet/model.hpp"
#include "bofnet/vocabulary.hpp"

namespace bofnet::train {

/// Target value of a label: 1 for Positive (safe), 0 for Negative.
double target(corpus::Label label);
corpus::Label predicted_label(double probability);

inline constexpr double kThreshold = 0.5;

struct SplitSpec {
  double test_fraction = 0.20;
  double dev_fraction_of_train = 0.10;
  std::uint64_t seed = 0;
  bool stratify = true;

  void validate() const;
};

/// Indices into the sample list that was split.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

inline constexpr std::size_t kMinSplitSamples = 10;

Partition split_dataset(std::span<const corpus::Label> labels, const SplitSpec& spec);

struct EncodedSample {
  std::string source_id;
  corpus::Label label = corpus::Label::Positive;
  std::vector<asmpipe::TokenId> ids;
};

struct LabeledBatch {
  nn::Batch batch;
  std::vector<double> targets;
  std::vector<std::size_t> members;  // indices into the sample span
};

/// Shuffles with `rng` and cuts into batches of `batch_size` (last may be short).
std::vector<LabeledBatch> make_batches(std::span<const EncodedSample> samples, std::size_t batch_size,
                                       std::mt19937_64& rng);
/// Batches in input order, no shuffling.
std::vector<LabeledBatch> sequential_batches(std::span<const EncodedSample> samples, std::size_t batch_size);

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  std::size_t batch_size = 80;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 50;
  std::size_t early_stop_patience = 10;  // 0 disables early stopping
  std::optional<double> clip_norm = 5.0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t log_every_steps = 100;
  std::size_t eval_batch_size = 64;

  void validate() const;
};

/// One line of the metrics log. Step records carry the running training
/// loss/CCR since the previous step record; epoch records carry whole-epoch
/// training figures and the development evaluation.
struct MetricRecord {
  enum class Kind { Step, Epoch } kind = Kind::Epoch;
  std::size_t step = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_ccr = 0.0;
  std::optional<double> dev_ccr;
  std::optional<double> dev_loss;
  std::optional<double> best_dev_ccr;
};

struct Metrics {
  std::vector<MetricRecord> records;
  std::size_t steps = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_dev_ccr = 0.0;
  double best_dev_loss = 0.0;
  bool early_stopped = false;
};

struct Evaluation {
  double ccr = 0.0;
  double loss = 0.0;
  std::size_t count = 0;
};

Evaluation evaluate(const nn::ModelParams& params, std::span<const EncodedSample> samples,
                    std::size_t batch_size = 64);

struct TrainResult {
  nn::ModelParams params;
  Metrics metrics;
};

using RecordSink = std::function<void(const MetricRecord&)>;

/// Trains from `init_params(model_cfg)` and returns the parameters of the
/// epoch with the best development CCR (earliest on ties).
TrainResult train(std::span<const EncodedSample> train_set, std::span<const EncodedSample> dev_set,
                  const nn::ModelConfig& model_cfg, const TrainConfig& cfg, const RecordSink& sink = {});

// Dataset files: one JSON header line, then one record per sample.

inline constexpr int kDatasetFormatVersion = 1;

struct TokenSample {
  std::string source_id;
  corpus::Label label = corpus::Label::Positive;
  std::vector<std::string> tokens;
};

void write_token_dataset(const std::filesystem::path& path, std::string_view partition,
                         std::span<const TokenSample> samples);
std::vector<TokenSample> read_token_dataset(const std::filesystem::path& path);
void write_encoded_dataset(const std::filesystem::path& path, std::string_view partition,
                           std::span<const EncodedSample> samples);
std::vector<EncodedSample> read_encoded_dataset(const std::filesystem::path& path);

EncodedSample encode(const asmpipe::Vocabulary& vocab, const TokenSample& sample);
std::vector<EncodedSample> encode(const asmpipe::Vocabulary& vocab, std::span<const TokenSample> samples);
asmpipe::Vocabulary build_vocabulary(std::span<const TokenSample> train_samples);

}  // namespace bofnet::train
