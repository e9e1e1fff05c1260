// SPDX-License-Identifier: Apache-2.0
// Central finite-difference check shared by the unit tests and the acceptance run.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bofnet/model.hpp"
#include "bofnet/random.hpp"

namespace bofnet::testing {

struct GradCheckResult {
  std::map<std::string, double> max_rel_error;  // per parameter group
  double worst = 0.0;
};

// Group name for every flat index.
inline std::vector<std::string> group_names(const nn::ParamLayout& lay) {
  std::vector<std::string> names(lay.total);
  auto fill = [&](std::size_t from, std::size_t to, const std::string& n) {
    std::fill(names.begin() + static_cast<long>(from), names.begin() + static_cast<long>(to), n);
  };
  fill(lay.embedding, lay.embedding + lay.embed * lay.vocab, "embedding");
  for (std::size_t l = 0; l < lay.layers.size(); ++l) {
    const auto& L = lay.layers[l];
    auto suffix = std::to_string(l);
    fill(L.w_x, L.w_x + 4 * lay.hidden * L.in_dim, "w_x" + suffix);
    fill(L.w_h, L.w_h + 4 * lay.hidden * lay.hidden, "w_h" + suffix);
    fill(L.bias, L.bias + 4 * lay.hidden, "bias" + suffix);
  }
  fill(lay.w_out, lay.w_out + lay.hidden, "w_out");
  fill(lay.b_out, lay.b_out + 1, "b_out");
  return names;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// One random tiny model and batch. Parameters are jittered off the init so
// forget biases and zero biases do not sit at special points.
inline GradCheckResult gradient_check(std::uint64_t seed, nn::Mode mode, const nn::ForwardOptions& opt = {},
                                      double step = 1e-5) {
  nn::ModelConfig cfg;
  cfg.vocab_size = 7;
  cfg.embed_dim = 5;
  cfg.hidden_dim = 4;
  cfg.num_layers = 2;
  cfg.dropout_rate = 0.5;
  cfg.seed = seed;
  auto params = nn::init_params(cfg);
  std::mt19937_64 rng(derive_seed(seed, 0x6c));
  for (auto& v : params.flat()) v += 0.3 * (uniform_unit(rng) - 0.5);

  std::vector<std::vector<std::int32_t>> seqs;
  std::vector<double> labels;
  std::size_t batch_size = 2 + uniform_index(rng, 4);
  for (std::size_t b = 0; b < batch_size; ++b) {
    std::vector<std::int32_t> s(1 + uniform_index(rng, 6));
    for (auto& id : s) id = static_cast<std::int32_t>(1 + uniform_index(rng, 6));
    seqs.push_back(std::move(s));
    labels.push_back(static_cast<double>(uniform_index(rng, 2)));
  }
  auto batch = nn::Batch::from_sequences(seqs);
  const std::uint64_t dropout_seed = derive_seed(seed, 0xd0);

  auto loss = [&] {
    std::mt19937_64 d(dropout_seed);
    nn::ForwardState s;
    return nn::bce_loss(nn::forward(params, batch, mode, &d, s, opt), labels);
  };
  std::mt19937_64 d(dropout_seed);
  nn::ForwardState state;
  nn::forward(params, batch, mode, &d, state, opt);
  auto grads = nn::backward(state, labels);

  GradCheckResult out;
  auto names = group_names(params.layout());
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) {
    double original = params.flat()[i];
    params.flat()[i] = original + step;
    double plus = loss();
    params.flat()[i] = original - step;
    double minus = loss();
    params.flat()[i] = original;
    double rel = relative_error(grads.flat()[i], (plus - minus) / (2 * step));
    auto& slot = out.max_rel_error[names[static_cast<std::size_t>(i)]];
    slot = std::max(slot, rel);
    out.worst = std::max(out.worst, rel);
  }
  return out;
}

}  // namespace bofnet::testing
