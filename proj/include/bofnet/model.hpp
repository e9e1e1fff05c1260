// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace bofnet::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t embed_dim = 512;
  std::size_t hidden_dim = 128;
  std::size_t num_layers = 2;
  double dropout_rate = 0.5;
  std::uint64_t seed = 0;
  double forget_bias = 1.0;  // initial value of the forget-gate bias slice
  double input_bias = 0.0;   // initial value of the input-gate bias slice

  /// Throws InvalidArgument when a dimension is zero or the rate is outside [0, 1).
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Offsets of every parameter group inside one flat buffer. Gate rows are
/// ordered input, forget, cell, output.
struct ParamLayout {
  struct Layer {
    std::size_t in_dim = 0;
    std::size_t w_x = 0;  // 4H x in_dim, column-major
    std::size_t w_h = 0;  // 4H x H, column-major
    std::size_t bias = 0; // 4H
  };

  explicit ParamLayout(const ModelConfig& cfg);

  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;
  std::size_t embedding = 0;  // embed x vocab column-major, i.e. one contiguous row per token
  std::vector<Layer> layers;
  std::size_t w_out = 0;
  std::size_t b_out = 0;
  std::size_t total = 0;
};

/// Flat parameter storage with typed views; shared by parameters, gradients
/// and optimizer moments.
template <typename Tag>
class ParamTensors {
 public:
  explicit ParamTensors(const ModelConfig& cfg) : cfg_(cfg), layout_(cfg), data_(Vector::Zero(layout_.total)) {}

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  Vector& flat() { return data_; }
  const Vector& flat() const { return data_; }

  /// Column t holds the embedding of token t.
  MatrixMap embedding() { return {data_.data() + layout_.embedding, idx(layout_.embed), idx(layout_.vocab)}; }
  ConstMatrixMap embedding() const {
    return {data_.data() + layout_.embedding, idx(layout_.embed), idx(layout_.vocab)};
  }
  MatrixMap w_x(std::size_t l) { return {ptr(layout_.layers[l].w_x), gates(), idx(layout_.layers[l].in_dim)}; }
  ConstMatrixMap w_x(std::size_t l) const {
    return {ptr(layout_.layers[l].w_x), gates(), idx(layout_.layers[l].in_dim)};
  }
  MatrixMap w_h(std::size_t l) { return {ptr(layout_.layers[l].w_h), gates(), idx(layout_.hidden)}; }
  ConstMatrixMap w_h(std::size_t l) const { return {ptr(layout_.layers[l].w_h), gates(), idx(layout_.hidden)}; }
  VectorMap bias(std::size_t l) { return {ptr(layout_.layers[l].bias), gates()}; }
  ConstVectorMap bias(std::size_t l) const { return {ptr(layout_.layers[l].bias), gates()}; }
  VectorMap w_out() { return {ptr(layout_.w_out), idx(layout_.hidden)}; }
  ConstVectorMap w_out() const { return {ptr(layout_.w_out), idx(layout_.hidden)}; }
  double& b_out() { return data_[idx(layout_.b_out)]; }
  double b_out() const { return data_[idx(layout_.b_out)]; }

  std::size_t num_layers() const { return layout_.layers.size(); }

 private:
  static Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }
  Eigen::Index gates() const { return idx(4 * layout_.hidden); }
  double* ptr(std::size_t off) { return data_.data() + off; }
  const double* ptr(std::size_t off) const { return data_.data() + off; }

  ModelConfig cfg_;
  ParamLayout layout_;
  Vector data_;
};

struct ParamsTag {};
struct GradientsTag {};
using ModelParams = ParamTensors<ParamsTag>;
using Gradients = ParamTensors<GradientsTag>;

/// Uniform(-r, r) with r = 1/sqrt(fan_in) per group (one-hot fan-in of 1 for
/// the embedding), forget-gate bias cfg.forget_bias, other biases 0.
ModelParams init_params(const ModelConfig& cfg);

/// Right-padded token ids, row b holding sample b.
struct Batch {
  std::size_t width = 0;
  std::vector<std::int32_t> ids;     // batch_size * width, row-major
  std::vector<std::size_t> lengths;  // true lengths

  std::size_t size() const { return lengths.size(); }
  std::int32_t id(std::size_t sample, std::size_t t) const { return ids[sample * width + t]; }

  static Batch from_sequences(std::span<const std::vector<std::int32_t>> sequences, std::int32_t pad = 0);
};

enum class Mode { Train, Eval };

/// Activations needed by backward. Per-timestep gate activations and cell
/// states are kept for every segment when they fit in the cache budget;
/// otherwise only segment-boundary states are kept and the segment is
/// recomputed during backward.
struct ForwardState {
  struct StepCache {
    Matrix acts;  // 4H x active: i, f, g, o after their nonlinearities
    Matrix cell;  // H x active
  };
  struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<Matrix> h0;  // per layer, state entering the segment (H x active(begin))
    std::vector<Matrix> c0;
    std::vector<std::vector<StepCache>> steps;  // [layer][t - begin], empty if not cached
  };

  const ModelParams* params = nullptr;
  Mode mode = Mode::Eval;
  Batch batch;
  std::vector<std::size_t> order;   // sorted position -> batch index, longest first
  std::vector<std::size_t> active;  // samples still running at step t
  Matrix input_proj;                // 4H x vocab: W_x of layer 0 applied to every embedding
  std::vector<Segment> segments;
  Matrix h_last;      // H x B (sorted order), top layer at each sample's last true step
  Matrix mask;        // H x B (sorted order), dropout mask scaled by 1/(1-rate); ones in Eval
  Vector probabilities;  // batch order
};

struct ForwardOptions {
  /// Cache budget in bytes for per-step activations; beyond it BPTT recomputes segments.
  std::size_t cache_budget_bytes = std::size_t{1} << 30;
  /// Segment length used when recomputing; 0 picks roughly sqrt(width).
  std::size_t segment_length = 0;
  /// When false nothing is kept for backward (inference only).
  bool retain_for_backward = true;
};

/// Returns per-sample probabilities (batch order) and fills `state`.
/// `rng` supplies the dropout masks and is required in Train mode.
Vector forward(const ModelParams& params, const Batch& batch, Mode mode, std::mt19937_64* rng, ForwardState& state,
               const ForwardOptions& options = {});

/// Convenience Eval-mode forward without keeping the state.
Vector predict(const ModelParams& params, const Batch& batch);

inline constexpr double kProbabilityClamp = 1e-12;

double bce_loss(std::span<const double> probabilities, std::span<const double> labels);
double bce_loss(const Vector& probabilities, std::span<const double> labels);

/// Gradient of the mean BCE over the batch with respect to every parameter.
Gradients backward(const ForwardState& state, std::span<const double> labels);

double global_norm(const Gradients& g);
/// Scales g so its global L2 norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(Gradients& g, double max_norm);

struct AdamState {
  explicit AdamState(const ModelConfig& cfg) : m(cfg), v(cfg) {}

  Gradients m;
  Gradients v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void adam_step(ModelParams& params, const Gradients& g, AdamState& state, double learning_rate);
void sgd_step(ModelParams& params, const Gradients& g, double learning_rate);

inline constexpr int kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const ModelParams& params, std::uint64_t vocab_hash);

struct LoadedModel {
  ModelParams params;
  std::uint64_t vocab_hash = 0;
};

/// Reads a model file; when `expected_vocab_hash` is given a mismatch raises VocabMismatch.
LoadedModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash = {});

}  // namespace bofnet::nn
