// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/nn/adam.hpp"
#include "aisguard/nn/model.hpp"
#include "aisguard/rng.hpp"

namespace aisguard::nn {

/// count sequences of timesteps x features values, back to back.
struct SequenceView {
  std::span<const double> data;
  std::size_t count = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;  // empty when there is no validation data
  double wall_seconds = 0.0;
};

using TrainingHistory = std::vector<EpochRecord>;

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 256;
  std::uint64_t seed = 42;
  LossOptions loss;
  std::size_t threads = 1;
  /// Called after every completed epoch with the updated model, e.g. to checkpoint.
  std::function<void(const EpochRecord&, const ModelParams&, const AdamState&)> on_epoch;
};

/// Eval-mode reconstruction loss over a whole set.
inline double evaluate_loss(const ModelParams& p, SequenceView set, const LossOptions& opt = {}) {
  const auto y = reconstruct(p, set.data, set.count);
  return mse_loss(y, set.data, opt);
}

/// Mini-batch Adam training of an autoencoder on its own inputs.
///
/// One Rng seeded with options.seed drives the per-epoch shuffle and the
/// dropout masks, so a fixed seed with threads == 1 reproduces the history
/// exactly. A non-finite loss or gradient restores params and state to the
/// end of the last completed epoch and throws NumericError.
inline TrainingHistory train(ModelParams& params, AdamState& adam, SequenceView train_set,
                             SequenceView val_set, const TrainOptions& opt) {
  const ModelConfig& c = params.config;
  c.validate();
  const std::size_t per = c.timesteps * c.features;
  if (opt.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (opt.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (train_set.count == 0) throw DataError("training set is empty");
  if (train_set.data.size() != train_set.count * per || val_set.data.size() != val_set.count * per) {
    throw ConfigError("training data does not match the model's timesteps x features");
  }

  Rng rng(opt.seed);
  std::vector<std::size_t> order(train_set.count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> batch;
  std::vector<DropoutMasks> masks;
  TrainingHistory history;

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const ModelParams snapshot = params;
    const AdamState adam_snapshot = adam;
    rng.shuffle(std::span(order));
    double weighted = 0.0;
    try {
      for (std::size_t lo = 0; lo < order.size(); lo += opt.batch_size) {
        const std::size_t hi = std::min(order.size(), lo + opt.batch_size);
        const std::size_t b = hi - lo;
        batch.resize(b * per);
        masks.clear();
        for (std::size_t k = 0; k < b; ++k) {
          const auto row = train_set.data.subspan(order[lo + k] * per, per);
          std::copy(row.begin(), row.end(), batch.begin() + static_cast<std::ptrdiff_t>(k * per));
          masks.push_back(sample_masks(c, rng));
        }
        const auto lg = backward(params, batch, b, masks, opt.loss, opt.threads);
        if (!std::isfinite(lg.loss)) throw NumericError("non-finite training loss");
        adam_update(params.values, lg.grad, adam);
        check_finite(params.values, "updated parameters");
        weighted += lg.loss * static_cast<double>(b);
      }
    } catch (const NumericError& e) {
      params = snapshot;
      adam = adam_snapshot;
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (" + e.what() +
                         "); model restored to the last completed epoch");
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = weighted / static_cast<double>(order.size());
    if (val_set.count > 0) rec.val_loss = evaluate_loss(params, val_set, opt.loss);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.push_back(rec);
    if (opt.on_epoch) opt.on_epoch(rec, params, adam);
  }
  return history;
}

inline void write_history_csv(std::ostream& os, const TrainingHistory& h) {
  os << "epoch,train_loss,val_loss,wall_seconds\n";
  char buf[128];
  for (const auto& r : h) {
    os << r.epoch << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.train_loss);
    os << buf << ',';
    if (r.val_loss) {
      std::snprintf(buf, sizeof(buf), "%.17g", *r.val_loss);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_seconds);
    os << ',' << buf << '\n';
  }
}

}  // namespace aisguard::nn
