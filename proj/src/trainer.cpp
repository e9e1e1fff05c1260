// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <sstream>

#include "bofnet/error.hpp"
#include "bofnet/random.hpp"
#include "bofnet/training.hpp"

namespace bofnet::train {

void TrainConfig::validate() const {
  if (batch_size == 0 || eval_batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch sizes must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning_rate must be a finite non-negative number");
  }
  if (max_epochs == 0) throw Error(ErrorCode::InvalidArgument, "max_epochs must be >= 1");
  if (clip_norm && !(*clip_norm > 0.0)) throw Error(ErrorCode::InvalidArgument, "clip_norm must be positive");
  if (log_every_steps == 0) throw Error(ErrorCode::InvalidArgument, "log_every_steps must be >= 1");
}

Evaluation evaluate(const nn::ModelParams& params, std::span<const EncodedSample> samples, std::size_t batch_size) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "evaluation on an empty dataset");
  Evaluation ev;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (const auto& lb : sequential_batches(samples, batch_size)) {
    auto probs = nn::predict(params, lb.batch);
    loss_sum += nn::bce_loss(probs, lb.targets) * static_cast<double>(lb.targets.size());
    for (std::size_t j = 0; j < lb.targets.size(); ++j) {
      if (target(predicted_label(probs[static_cast<Eigen::Index>(j)])) == lb.targets[j]) ++correct;
    }
  }
  ev.count = samples.size();
  ev.ccr = static_cast<double>(correct) / static_cast<double>(ev.count);
  ev.loss = loss_sum / static_cast<double>(ev.count);
  return ev;
}

namespace {

struct Tally {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;

  void add(const nn::Vector& probs, const std::vector<double>& targets, double batch_loss) {
    loss_sum += batch_loss * static_cast<double>(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (target(predicted_label(probs[static_cast<Eigen::Index>(j)])) == targets[j]) ++correct;
    }
    count += targets.size();
  }
  double loss() const { return count ? loss_sum / static_cast<double>(count) : 0.0; }
  double ccr() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

[[noreturn]] void non_finite(std::string_view what, std::size_t epoch, std::size_t step, double value) {
  std::ostringstream msg;
  msg << what << " is " << value << " at epoch " << epoch << ", step " << step;
  throw Error(ErrorCode::NonFiniteLoss, msg.str());
}

}  // namespace

TrainResult train(std::span<const EncodedSample> train_set, std::span<const EncodedSample> dev_set,
                  const nn::ModelConfig& model_cfg, const TrainConfig& cfg, const RecordSink& sink) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "empty training set");
  if (dev_set.empty()) throw Error(ErrorCode::EmptyDataset, "empty development set");

  nn::ModelParams params = nn::init_params(model_cfg);
  nn::ModelParams best = params;
  nn::AdamState adam(model_cfg);
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 0xd0));
  Metrics metrics;
  std::size_t stale_epochs = 0;
  Tally window;

  auto emit = [&](const MetricRecord& r) {
    metrics.records.push_back(r);
    if (sink) sink(r);
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::mt19937_64 order_rng(derive_seed(cfg.seed, 0xba, epoch));
    Tally epoch_tally;
    for (const auto& lb : make_batches(train_set, cfg.batch_size, order_rng)) {
      nn::ForwardState state;
      auto probs = nn::forward(params, lb.batch, nn::Mode::Train, &dropout_rng, state);
      double loss = nn::bce_loss(probs, lb.targets);
      if (!std::isfinite(loss) || !probs.allFinite()) non_finite("training loss", epoch, metrics.steps + 1, loss);
      auto grads = nn::backward(state, lb.targets);
      double norm = nn::global_norm(grads);
      if (!std::isfinite(norm)) non_finite("gradient norm", epoch, metrics.steps + 1, norm);
      if (cfg.clip_norm) nn::clip_global_norm(grads, *cfg.clip_norm);
      if (cfg.optimizer == Optimizer::Adam) {
        nn::adam_step(params, grads, adam, cfg.learning_rate);
      } else {
        nn::sgd_step(params, grads, cfg.learning_rate);
      }
      // An overflowing update can leave the loss finite for a while; stop here instead.
      if (!params.flat().allFinite()) {
        non_finite("parameter update", epoch, metrics.steps + 1, std::numeric_limits<double>::infinity());
      }
      ++metrics.steps;
      epoch_tally.add(probs, lb.targets, loss);
      window.add(probs, lb.targets, loss);
      if (metrics.steps % cfg.log_every_steps == 0) {
        MetricRecord r;
        r.kind = MetricRecord::Kind::Step;
        r.step = metrics.steps;
        r.epoch = epoch;
        r.train_loss = window.loss();
        r.train_ccr = window.ccr();
        emit(r);
        window = {};
      }
    }

    auto dev = evaluate(params, dev_set, cfg.eval_batch_size);
    if (!std::isfinite(dev.loss)) non_finite("development loss", epoch, metrics.steps, dev.loss);
    metrics.epochs_run = epoch;
    if (epoch == 1 || dev.ccr > metrics.best_dev_ccr) {
      best = params;
      metrics.best_epoch = epoch;
      metrics.best_dev_ccr = dev.ccr;
      metrics.best_dev_loss = dev.loss;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }

    MetricRecord r;
    r.kind = MetricRecord::Kind::Epoch;
    r.step = metrics.steps;
    r.epoch = epoch;
    r.train_loss = epoch_tally.loss();
    r.train_ccr = epoch_tally.ccr();
    r.dev_ccr = dev.ccr;
    r.dev_loss = dev.loss;
    r.best_dev_ccr = metrics.best_dev_ccr;
    emit(r);

    if (cfg.early_stop_patience > 0 && stale_epochs >= cfg.early_stop_patience && epoch < cfg.max_epochs) {
      metrics.early_stopped = true;
      break;
    }
  }
  return {std::move(best), std::move(metrics)};
}

}  // namespace bofnet::train
