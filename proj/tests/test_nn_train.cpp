// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "aisguard/nn/train.hpp"
#include "oracles.hpp"

namespace aisguard::nn {
namespace {

ModelConfig tiny(CellKind kind = CellKind::kGru) {
  ModelConfig c;
  c.cell = kind;
  c.bidirectional = false;
  c.layers = 1;
  c.hidden = 8;
  c.timesteps = 6;
  c.features = 4;
  c.dropout_rate = c.recurrent_dropout_rate = c.dense_dropout_rate = 0.0;
  return c;
}

std::vector<double> random_rows(std::uint64_t seed, std::size_t n, std::size_t per) {
  Rng rng(seed);
  std::vector<double> v(n * per);
  for (auto& x : v) x = rng.uniform();
  return v;
}

TEST(Adam, FirstStepMovesEachParameterByLearningRate) {
  // After one step m_hat = g and v_hat = g^2, so the update is lr * g / (|g| + eps).
  std::vector<double> p{1.0, -2.0, 0.5, 0.0};
  const std::vector<double> g{0.3, -4.0, 1e-3, 0.0};
  AdamState s;
  s.learning_rate = 0.01;
  adam_update(p, g, s);
  const std::vector<double> start{1.0, -2.0, 0.5, 0.0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double want = start[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[i], want, 1e-15);
  }
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, SecondStepMatchesHandComputation) {
  std::vector<double> p{0.0};
  AdamState s;
  adam_update(p, std::vector<double>{1.0}, s);
  adam_update(p, std::vector<double>{-2.0}, s);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * -2.0;
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 4.0;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  const double want = -1e-3 * 1.0 / (1.0 + 1e-8) - 1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(p[0], want, 1e-15);
}

TEST(Adam, QuadraticLossDecreasesMonotonically) {
  std::vector<double> p{3.0, -2.0, 1.5};
  const std::vector<double> target{0.5, 0.25, -1.0};
  AdamState s;
  s.learning_rate = 0.01;
  auto loss = [&] {
    double l = 0;
    for (std::size_t i = 0; i < p.size(); ++i) l += (p[i] - target[i]) * (p[i] - target[i]);
    return l;
  };
  double prev = loss();
  for (int step = 0; step < 100; ++step) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2 * (p[i] - target[i]);
    adam_update(p, g, s);
    const double cur = loss();
    EXPECT_LT(cur, prev) << "step " << step;
    prev = cur;
  }
}

TEST(Adam, RejectsMismatchedSizes) {
  std::vector<double> p(3);
  AdamState s;
  EXPECT_THROW(adam_update(p, std::vector<double>(2), s), ConfigError);
}

TEST(Train, OverfitsASingleSequence) {
  const auto c = tiny();
  auto p = ModelParams::initialized(c, 1);
  AdamState adam;
  adam.learning_rate = 0.01;
  const auto x = random_rows(5, 1, 24);
  TrainOptions opt;
  opt.epochs = 200;
  opt.batch_size = 1;
  const auto h = train(p, adam, {x, 1}, {x, 1}, opt);
  ASSERT_EQ(h.size(), 200u);
  EXPECT_LT(h.back().train_loss, 1e-3);
  EXPECT_LT(*h.back().val_loss, 1e-3);
}

TEST(Train, RejectsZeroEpochsAndEmptyData) {
  auto p = ModelParams::initialized(tiny(), 1);
  AdamState adam;
  const auto x = random_rows(1, 2, 24);
  TrainOptions opt;
  opt.epochs = 0;
  EXPECT_THROW(train(p, adam, {x, 2}, {}, opt), ConfigError);
  opt.epochs = 1;
  EXPECT_THROW(train(p, adam, {{}, 0}, {}, opt), DataError);
  EXPECT_THROW(train(p, adam, {std::span<const double>(x).first(20), 1}, {}, opt), ConfigError);
}

TEST(Train, FixedSeedReproducesHistoryAndWeights) {
  auto c = tiny();
  c.bidirectional = true;
  c.recurrent_dropout_rate = 0.2;
  c.dense_dropout_rate = 0.2;
  const auto x = random_rows(3, 10, 24);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 4;
  auto run = [&] {
    auto p = ModelParams::initialized(c, 9);
    AdamState adam;
    auto h = train(p, adam, {x, 10}, {std::span<const double>(x).first(48), 2}, opt);
    return std::pair{h, p.values};
  };
  const auto [h1, w1] = run();
  const auto [h2, w2] = run();
  ASSERT_EQ(h1.size(), h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) {
    EXPECT_EQ(h1[i].train_loss, h2[i].train_loss);
    EXPECT_EQ(h1[i].val_loss, h2[i].val_loss);
  }
  EXPECT_EQ(w1, w2);
}

TEST(Train, DivergenceRestoresLastCompletedEpoch) {
  const auto c = tiny();
  auto p = ModelParams::initialized(c, 2);
  AdamState adam;
  auto x = random_rows(4, 3, 24);
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch_size = 2;
  train(p, adam, {x, 3}, {}, opt);
  const auto params_after = p.values;
  const auto adam_after = adam;

  x[30] = std::numeric_limits<double>::infinity();
  try {
    train(p, adam, {x, 3}, {}, opt);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
  EXPECT_EQ(p.values, params_after);
  EXPECT_EQ(adam, adam_after);
}

TEST(Train, EpochCallbackSeesEveryEpoch) {
  auto p = ModelParams::initialized(tiny(CellKind::kSimpleRnn), 3);
  AdamState adam;
  const auto x = random_rows(6, 4, 24);
  TrainOptions opt;
  opt.epochs = 4;
  std::vector<std::size_t> seen;
  opt.on_epoch = [&](const EpochRecord& r, const ModelParams&, const AdamState& a) {
    seen.push_back(r.epoch);
    EXPECT_EQ(a.step, r.epoch);  // one batch per epoch
  };
  train(p, adam, {x, 4}, {}, opt);
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 2, 3, 4}));
}

TEST(Train, HistoryCsvHeaderAndRows) {
  TrainingHistory h{{1, 0.5, 0.25, 1.0}, {2, 0.125, std::nullopt, 2.5}};
  std::ostringstream os;
  write_history_csv(os, h);
  EXPECT_EQ(os.str(), "epoch,train_loss,val_loss,wall_seconds\n1,0.5,0.25,1.000\n2,0.125,,2.500\n");
}

}  // namespace
}  // namespace aisguard::nn
