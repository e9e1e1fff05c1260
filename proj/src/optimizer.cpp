// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "bofnet/error.hpp"
#include "bofnet/model.hpp"

namespace bofnet::nn {

void adam_step(ModelParams& params, const Gradients& g, AdamState& state, double learning_rate) {
  if (params.flat().size() != g.flat().size() || state.m.flat().size() != g.flat().size()) {
    throw Error(ErrorCode::StateMismatch, "parameter, gradient and optimizer shapes differ");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  auto& m = state.m.flat();
  auto& v = state.v.flat();
  const auto& grad = g.flat();
  m = state.beta1 * m + (1.0 - state.beta1) * grad;
  v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseAbs2();
  params.flat().array() -=
      learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + state.epsilon);
}

void sgd_step(ModelParams& params, const Gradients& g, double learning_rate) {
  if (params.flat().size() != g.flat().size()) {
    throw Error(ErrorCode::StateMismatch, "parameter and gradient shapes differ");
  }
  params.flat() -= learning_rate * g.flat();
}

}  // namespace bofnet::nn
