// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "bofnet/error.hpp"
#include "bofnet/model.hpp"
#include "bofnet/random.hpp"

namespace bofnet::nn {

void ModelConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || num_layers < 1) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout_rate must be in [0, 1)");
  }
  if (!std::isfinite(forget_bias) || !std::isfinite(input_bias)) {
    throw Error(ErrorCode::InvalidArgument, "gate biases must be finite");
  }
}

ParamLayout::ParamLayout(const ModelConfig& cfg)
    : vocab(cfg.vocab_size), embed(cfg.embed_dim), hidden(cfg.hidden_dim) {
  std::size_t offset = 0;
  embedding = offset;
  offset += vocab * embed;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    Layer layer;
    layer.in_dim = l == 0 ? embed : hidden;
    layer.w_x = offset;
    offset += 4 * hidden * layer.in_dim;
    layer.w_h = offset;
    offset += 4 * hidden * hidden;
    layer.bias = offset;
    offset += 4 * hidden;
    layers.push_back(layer);
  }
  w_out = offset;
  offset += hidden;
  b_out = offset;
  offset += 1;
  total = offset;
}

namespace {

template <typename Block>
void fill_uniform(Block&& block, double radius, std::mt19937_64& rng) {
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = (2.0 * uniform_unit(rng) - 1.0) * radius;
  }
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p(cfg);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x1417));
  const auto h = static_cast<Eigen::Index>(cfg.hidden_dim);
  fill_uniform(p.embedding(), 1.0, rng);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    fill_uniform(p.w_x(l), 1.0 / std::sqrt(static_cast<double>(p.layout().layers[l].in_dim)), rng);
    fill_uniform(p.w_h(l), 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim)), rng);
    p.bias(l).setZero();
    p.bias(l).head(h).setConstant(cfg.input_bias);
    p.bias(l).segment(h, h).setConstant(cfg.forget_bias);
  }
  auto w_out = p.w_out();
  for (Eigen::Index i = 0; i < w_out.size(); ++i) {
    w_out[i] = (2.0 * uniform_unit(rng) - 1.0) / std::sqrt(static_cast<double>(cfg.hidden_dim));
  }
  p.b_out() = 0.0;
  return p;
}

Batch Batch::from_sequences(std::span<const std::vector<std::int32_t>> sequences, std::int32_t pad) {
  Batch batch;
  for (const auto& s : sequences) batch.width = std::max(batch.width, s.size());
  batch.ids.assign(sequences.size() * batch.width, pad);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(b * batch.width));
    batch.lengths.push_back(sequences[b].size());
  }
  return batch;
}

double bce_loss(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(ErrorCode::StateMismatch, "probabilities and labels differ in length");
  }
  if (probabilities.empty()) throw Error(ErrorCode::EmptyDataset, "loss over an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    double p = std::clamp(probabilities[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    double y = labels[i];
    total -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
  }
  return total / static_cast<double>(probabilities.size());
}

double bce_loss(const Vector& probabilities, std::span<const double> labels) {
  return bce_loss(std::span<const double>(probabilities.data(), static_cast<std::size_t>(probabilities.size())),
                  labels);
}

double global_norm(const Gradients& g) { return g.flat().norm(); }

double clip_global_norm(Gradients& g, double max_norm) {
  double norm = global_norm(g);
  if (max_norm > 0.0 && norm > max_norm) g.flat() *= max_norm / norm;
  return norm;
}

}  // namespace bofnet::nn
