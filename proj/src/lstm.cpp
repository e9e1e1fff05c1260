// SPDX-License-Identifier: Apache-2.0
//
// Stacked LSTM forward pass and backpropagation through time.
//
// Samples are processed longest-first so that the samples still running at
// step t are always the leading `active[t]` columns; finished samples drop
// out of the matrices and padding is never read.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bofnet/error.hpp"
#include "bofnet/model.hpp"
#include "bofnet/random.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace bofnet::nn {

namespace {

using Eigen::Index;

Index ix(std::size_t v) { return static_cast<Index>(v); }

// Gradients decaying over thousands of steps hit subnormal range, which is
// very slow on x86; flush them to zero while the pass runs.
class FlushDenormals {
 public:
#if defined(__SSE__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

void sigmoid_inplace(Eigen::Block<Matrix> block) {
  block = (1.0 + (-block.array()).exp()).inverse().matrix();
}

// Eigen has no vectorized tanh for double and falls back to std::tanh per
// element, about 8x slower than exp. Saturates to exactly +-1.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

void validate_batch(const ModelParams& params, const Batch& batch) {
  if (batch.size() == 0) throw Error(ErrorCode::EmptyDataset, "forward on an empty batch");
  if (batch.ids.size() != batch.size() * batch.width) {
    throw Error(ErrorCode::LengthExceedsPadding, "id buffer does not match batch_size * width");
  }
  const auto vocab = static_cast<std::int64_t>(params.config().vocab_size);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch.lengths[b] == 0) throw Error(ErrorCode::InvalidArgument, "sample " + std::to_string(b) + " is empty");
    if (batch.lengths[b] > batch.width) {
      throw Error(ErrorCode::LengthExceedsPadding,
                  "sample " + std::to_string(b) + " length " + std::to_string(batch.lengths[b]) + " > width " +
                      std::to_string(batch.width));
    }
  }
  for (auto id : batch.ids) {
    if (id < 0 || id >= vocab) {
      throw Error(ErrorCode::IdOutOfRange, "token id " + std::to_string(id) + " outside vocabulary of " +
                                               std::to_string(vocab));
    }
  }
}

// One timestep of every layer. `h` and `c` hold the state entering step t and
// are replaced by the state leaving it (shrunk to active[t] columns).
void run_step(const ModelParams& p, const ForwardState& st, std::size_t t, std::vector<Matrix>& h,
              std::vector<Matrix>& c, std::vector<std::vector<ForwardState::StepCache>>* caches, Matrix* h_last) {
  const Index hd = ix(p.config().hidden_dim);
  const Index k = ix(st.active[t]);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    Matrix a(4 * hd, k);
    if (l == 0) {
      for (Index j = 0; j < k; ++j) {
        a.col(j) = st.input_proj.col(st.batch.id(st.order[static_cast<std::size_t>(j)], t));
      }
    } else {
      a.noalias() = p.w_x(l) * h[l - 1];
    }
    a.colwise() += p.bias(l);
    a.noalias() += p.w_h(l) * h[l].leftCols(k);
    sigmoid_inplace(a.topRows(2 * hd));
    a.middleRows(2 * hd, hd) = fast_tanh(a.middleRows(2 * hd, hd).array()).matrix();
    sigmoid_inplace(a.bottomRows(hd));

    Matrix cell = (a.middleRows(hd, hd).array() * c[l].leftCols(k).array() +
                   a.topRows(hd).array() * a.middleRows(2 * hd, hd).array())
                      .matrix();
    h[l] = (a.bottomRows(hd).array() * fast_tanh(cell.array())).matrix();
    if (caches) (*caches)[l].push_back({std::move(a), cell});
    c[l] = std::move(cell);
  }
  if (h_last) {
    const Index next = t + 1 < st.active.size() ? ix(st.active[t + 1]) : 0;
    if (k > next) h_last->middleCols(next, k - next) = h.back().middleCols(next, k - next);
  }
}

// Saturated logits would round to exactly 0 or 1; keep the result inside (0, 1).
double logistic(double z) {
  static const double kBelowOne = std::nextafter(1.0, 0.0);
  if (z >= 0) return std::min(1.0 / (1.0 + std::exp(-z)), kBelowOne);
  double e = std::exp(z);
  return std::max(e / (1.0 + e), std::numeric_limits<double>::min());
}

}  // namespace

Vector forward(const ModelParams& params, const Batch& batch, Mode mode, std::mt19937_64* rng, ForwardState& state,
               const ForwardOptions& options) {
  validate_batch(params, batch);
  FlushDenormals ftz;
  const auto& cfg = params.config();
  const Index hd = ix(cfg.hidden_dim);
  const std::size_t num_layers = params.num_layers();
  const std::size_t bsz = batch.size();

  state = ForwardState{};
  state.params = &params;
  state.mode = mode;
  state.batch = batch;
  state.order.resize(bsz);
  std::iota(state.order.begin(), state.order.end(), 0);
  std::stable_sort(state.order.begin(), state.order.end(),
                   [&](std::size_t a, std::size_t b) { return batch.lengths[a] > batch.lengths[b]; });
  const std::size_t steps = batch.lengths[state.order.front()];
  state.active.assign(steps, 0);
  for (std::size_t j = 0; j < bsz; ++j) {
    for (std::size_t t = 0; t < batch.lengths[state.order[j]]; ++t) ++state.active[t];
  }

  state.input_proj.noalias() = params.w_x(0) * params.embedding();

  std::size_t cache_bytes = 0;
  for (auto k : state.active) cache_bytes += k * 5 * cfg.hidden_dim * num_layers * sizeof(double);
  const bool retain = options.retain_for_backward;
  const bool cache_all = retain && cache_bytes <= options.cache_budget_bytes;
  std::size_t seg_len = steps;
  if (!cache_all) {
    seg_len = options.segment_length
                  ? options.segment_length
                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(steps)))));
  }

  std::vector<Matrix> h(num_layers, Matrix::Zero(hd, ix(bsz)));
  std::vector<Matrix> c(num_layers, Matrix::Zero(hd, ix(bsz)));
  state.h_last = Matrix::Zero(hd, ix(bsz));
  for (std::size_t begin = 0; begin < steps; begin += seg_len) {
    ForwardState::Segment seg;
    seg.begin = begin;
    seg.end = std::min(steps, begin + seg_len);
    if (retain) {
      seg.h0 = h;
      seg.c0 = c;
    }
    if (cache_all) seg.steps.resize(num_layers);
    for (std::size_t t = seg.begin; t < seg.end; ++t) {
      run_step(params, state, t, h, c, cache_all ? &seg.steps : nullptr, &state.h_last);
    }
    if (retain) state.segments.push_back(std::move(seg));
  }

  state.mask = Matrix::Ones(hd, ix(bsz));
  if (mode == Mode::Train && cfg.dropout_rate > 0.0) {
    if (!rng) throw Error(ErrorCode::InvalidArgument, "Train mode needs a random generator for dropout");
    const double keep = 1.0 - cfg.dropout_rate;
    Matrix mask_by_sample(hd, ix(bsz));
    for (Index b = 0; b < ix(bsz); ++b) {
      for (Index i = 0; i < hd; ++i) mask_by_sample(i, b) = uniform_unit(*rng) < keep ? 1.0 / keep : 0.0;
    }
    for (std::size_t j = 0; j < bsz; ++j) state.mask.col(ix(j)) = mask_by_sample.col(ix(state.order[j]));
  }

  state.probabilities.resize(ix(bsz));
  const Vector logits = (state.mask.array() * state.h_last.array()).matrix().transpose() * params.w_out();
  for (std::size_t j = 0; j < bsz; ++j) {
    state.probabilities[ix(state.order[j])] = logistic(logits[ix(j)] + params.b_out());
  }
  return state.probabilities;
}

Vector predict(const ModelParams& params, const Batch& batch) {
  ForwardState state;
  ForwardOptions options;
  options.retain_for_backward = false;
  return forward(params, batch, Mode::Eval, nullptr, state, options);
}

Gradients backward(const ForwardState& state, std::span<const double> labels) {
  if (!state.params) throw Error(ErrorCode::StateMismatch, "backward without a forward state");
  const std::size_t bsz = state.batch.size();
  if (labels.size() != bsz) {
    throw Error(ErrorCode::StateMismatch,
                "got " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(bsz));
  }
  if (state.segments.empty()) throw Error(ErrorCode::StateMismatch, "forward state was not retained for backward");

  FlushDenormals ftz;
  const ModelParams& p = *state.params;
  const auto& cfg = p.config();
  const Index hd = ix(cfg.hidden_dim);
  const std::size_t num_layers = p.num_layers();
  const std::size_t top = num_layers - 1;
  const std::size_t steps = state.active.size();
  Gradients g(cfg);

  // Output head, sorted order.
  Vector dz(ix(bsz));
  for (std::size_t j = 0; j < bsz; ++j) {
    auto b = state.order[j];
    dz[ix(j)] = (state.probabilities[ix(b)] - labels[b]) / static_cast<double>(bsz);
  }
  const Matrix dropped = (state.mask.array() * state.h_last.array()).matrix();
  g.w_out() = dropped * dz;
  g.b_out() = dz.sum();
  const Matrix dh_last = (state.mask.array() * (p.w_out() * dz.transpose()).array()).matrix();

  Matrix d_input_proj = Matrix::Zero(4 * hd, ix(cfg.vocab_size));
  std::vector<Matrix> dh_rec(num_layers, Matrix::Zero(hd, 0));
  std::vector<Matrix> dc_rec(num_layers, Matrix::Zero(hd, 0));

  std::vector<std::vector<ForwardState::StepCache>> recomputed;
  for (auto seg_it = state.segments.rbegin(); seg_it != state.segments.rend(); ++seg_it) {
    const auto& seg = *seg_it;
    const std::vector<std::vector<ForwardState::StepCache>>* caches = &seg.steps;
    if (seg.steps.empty()) {
      recomputed.assign(num_layers, {});
      std::vector<Matrix> h = seg.h0;
      std::vector<Matrix> c = seg.c0;
      for (std::size_t t = seg.begin; t < seg.end; ++t) run_step(p, state, t, h, c, &recomputed, nullptr);
      caches = &recomputed;
    }

    Matrix dx_above;
    for (std::size_t t = seg.end; t-- > seg.begin;) {
      const Index k = ix(state.active[t]);
      const Index next = t + 1 < steps ? ix(state.active[t + 1]) : 0;
      const std::size_t local = t - seg.begin;
      for (std::size_t l = num_layers; l-- > 0;) {
        const auto& sc = (*caches)[l][local];
        Matrix c_prev;
        Matrix h_prev;
        if (local == 0) {
          c_prev = seg.c0[l].leftCols(k);
          h_prev = seg.h0[l].leftCols(k);
        } else {
          const auto& prev = (*caches)[l][local - 1];
          c_prev = prev.cell.leftCols(k);
          h_prev = (prev.acts.bottomRows(hd).leftCols(k).array() * fast_tanh(c_prev.array())).matrix();
        }

        Matrix dh = Matrix::Zero(hd, k);
        Matrix dc = Matrix::Zero(hd, k);
        if (next > 0) {
          dh.leftCols(next) = dh_rec[l];
          dc.leftCols(next) = dc_rec[l];
        }
        if (l == top) {
          if (k > next) dh.middleCols(next, k - next) += dh_last.middleCols(next, k - next);
        } else {
          dh += dx_above;
        }

        const auto i_gate = sc.acts.topRows(hd).array();
        const auto f_gate = sc.acts.middleRows(hd, hd).array();
        const auto g_gate = sc.acts.middleRows(2 * hd, hd).array();
        const auto o_gate = sc.acts.bottomRows(hd).array();
        const Eigen::ArrayXXd tanh_c = fast_tanh(sc.cell.array());

        dc.array() += dh.array() * o_gate * (1.0 - tanh_c.square());
        Matrix da(4 * hd, k);
        da.topRows(hd) = (dc.array() * g_gate * i_gate * (1.0 - i_gate)).matrix();
        da.middleRows(hd, hd) = (dc.array() * c_prev.array() * f_gate * (1.0 - f_gate)).matrix();
        da.middleRows(2 * hd, hd) = (dc.array() * i_gate * (1.0 - g_gate.square())).matrix();
        da.bottomRows(hd) = (dh.array() * tanh_c * o_gate * (1.0 - o_gate)).matrix();

        dc_rec[l] = (dc.array() * f_gate).matrix();
        g.w_h(l).noalias() += da * h_prev.transpose();
        g.bias(l) += da.rowwise().sum();
        dh_rec[l].noalias() = p.w_h(l).transpose() * da;

        if (l > 0) {
          const auto& below = (*caches)[l - 1][local];
          const Matrix x = (below.acts.bottomRows(hd).array() * fast_tanh(below.cell.array())).matrix();
          g.w_x(l).noalias() += da * x.transpose();
          dx_above.noalias() = p.w_x(l).transpose() * da;
        } else {
          for (Index j = 0; j < k; ++j) {
            d_input_proj.col(state.batch.id(state.order[static_cast<std::size_t>(j)], t)) += da.col(j);
          }
        }
      }
    }
  }

  g.w_x(0).noalias() = d_input_proj * p.embedding().transpose();
  g.embedding().noalias() = p.w_x(0).transpose() * d_input_proj;
  return g;
}

}  // namespace bofnet::nn
