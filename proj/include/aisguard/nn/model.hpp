// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/nn/cells.hpp"
#include "aisguard/nn/tensor.hpp"
#include "aisguard/rng.hpp"

namespace aisguard::nn {

enum class Direction { kForward, kBackward };
enum class Mode { kTrain, kEval };

/// Architecture of a recurrent sequence autoencoder: stacked (optionally
/// bidirectional) recurrent layers followed by a per-timestep tanh dense layer
/// that reconstructs the input features.
struct ModelConfig {
  CellKind cell = CellKind::kGru;
  bool bidirectional = true;
  std::size_t layers = 1;
  std::size_t hidden = 32;               // units per direction
  double dropout_rate = 0.0;             // on the input of every layer after the first
  double recurrent_dropout_rate = 0.2;   // on h_prev, one mask per sequence
  double dense_dropout_rate = 0.2;       // on the input of the dense layer
  std::size_t timesteps = 48;
  std::size_t features = 4;
  GruConvention gru_convention = GruConvention::kUpdateGatesCandidate;

  std::size_t directions() const { return bidirectional ? 2 : 1; }
  std::size_t layer_input(std::size_t layer) const {
    return layer == 0 ? features : hidden * directions();
  }
  std::size_t dense_input() const { return hidden * directions(); }

  void validate() const {
    if (layers < 1) throw ConfigError("model needs at least one recurrent layer");
    if (hidden < 1) throw ConfigError("hidden size must be positive");
    if (timesteps < 1 || features < 1) throw ConfigError("timesteps and features must be positive");
    auto rate_ok = [](double r) { return r >= 0.0 && r < 1.0; };
    if (!rate_ok(dropout_rate) || !rate_ok(recurrent_dropout_rate) || !rate_ok(dense_dropout_rate)) {
      throw ConfigError("dropout rates must lie in [0, 1)");
    }
  }

  /// Two stacked unidirectional layers of 64 units with 0.2 dropout between them.
  static ModelConfig stacked(CellKind kind) {
    ModelConfig c;
    c.cell = kind;
    c.bidirectional = false;
    c.layers = 2;
    c.hidden = 64;
    c.dropout_rate = 0.2;
    c.recurrent_dropout_rate = 0.0;
    c.dense_dropout_rate = 0.0;
    return c;
  }

  /// One bidirectional layer of 32 units per direction, recurrent dropout 0.2
  /// and 0.2 dropout in front of the dense layer.
  static ModelConfig bidirectional_recurrent(CellKind kind) {
    ModelConfig c;
    c.cell = kind;
    c.bidirectional = true;
    c.layers = 1;
    c.hidden = 32;
    c.dropout_rate = 0.0;
    c.recurrent_dropout_rate = 0.2;
    c.dense_dropout_rate = 0.2;
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// All trainable values in one flat vector.
///
/// Order: for each layer, for each direction (forward first), the cell's gate
/// blocks; then the dense kernel (dense_input x features) and bias (features).
struct ModelParams {
  ModelConfig config;
  std::vector<double> values;

  static std::size_t count(const ModelConfig& c) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < c.layers; ++l) {
      n += c.directions() * cell_param_count(c.cell, c.layer_input(l), c.hidden);
    }
    return n + c.dense_input() * c.features + c.features;
  }

  static ModelParams zeros(const ModelConfig& c) {
    c.validate();
    return ModelParams{c, std::vector<double>(count(c), 0.0)};
  }

  /// Glorot-uniform input and dense kernels, orthogonal recurrent kernels, zero biases.
  static ModelParams initialized(const ModelConfig& c, std::uint64_t seed);

  std::size_t cell_offset(std::size_t layer, std::size_t dir) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
      off += config.directions() * cell_param_count(config.cell, config.layer_input(l), config.hidden);
    }
    return off + dir * cell_param_count(config.cell, config.layer_input(layer), config.hidden);
  }

  std::size_t dense_offset() const { return cell_offset(config.layers, 0); }

  CellRef cell(std::size_t layer, std::size_t dir) const {
    return CellRef{config.cell, config.gru_convention, config.layer_input(layer), config.hidden,
                   values.data() + cell_offset(layer, dir)};
  }

  CellGradRef cell_grad(std::span<double> grad, std::size_t layer, std::size_t dir) const {
    return CellGradRef{config.cell, config.gru_convention, config.layer_input(layer), config.hidden,
                       grad.data() + cell_offset(layer, dir)};
  }

  const double* dense_w() const { return values.data() + dense_offset(); }
  const double* dense_b() const { return dense_w() + config.dense_input() * config.features; }
};

namespace detail {

inline void glorot_uniform(Rng& rng, double* w, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < fan_in * fan_out; ++i) w[i] = rng.uniform(-limit, limit);
}

/// Rows of a Gaussian matrix orthonormalised by modified Gram-Schmidt.
inline void orthogonal(Rng& rng, double* w, std::size_t n) {
  for (std::size_t i = 0; i < n * n; ++i) w[i] = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = w + i * n;
    for (std::size_t k = 0; k < i; ++k) {
      const double* prev = w + k * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += row[j] * prev[j];
      for (std::size_t j = 0; j < n; ++j) row[j] -= dot * prev[j];
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) norm += row[j] * row[j];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      for (std::size_t j = 0; j < n; ++j) row[j] = (i == j) ? 1.0 : 0.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= norm;
  }
}

}  // namespace detail

inline ModelParams ModelParams::initialized(const ModelConfig& c, std::uint64_t seed) {
  ModelParams p = zeros(c);
  Rng rng(seed);
  for (std::size_t l = 0; l < c.layers; ++l) {
    for (std::size_t d = 0; d < c.directions(); ++d) {
      CellGradRef cell = p.cell_grad(p.values, l, d);
      for (std::size_t g = 0; g < gate_count(c.cell); ++g) {
        detail::glorot_uniform(rng, cell.wx(g), cell.input, cell.hidden);
        detail::orthogonal(rng, cell.wh(g), cell.hidden);
      }
    }
  }
  detail::glorot_uniform(rng, p.values.data() + p.dense_offset(), c.dense_input(), c.features);
  return p;
}

// ---------------------------------------------------------------------------
// Dropout

/// Inverted-dropout multipliers (0 or 1/keep) for one sequence.
struct DropoutMasks {
  std::vector<std::vector<double>> layer_input;  // per layer, timesteps x layer_input, fresh per step
  std::vector<std::vector<double>> recurrent;    // per (layer, direction), hidden; same at every step
  std::vector<double> dense_input;               // timesteps x dense_input, fresh per step

  const std::vector<double>& recurrent_for(std::size_t layer, std::size_t dir,
                                           std::size_t directions) const {
    return recurrent[layer * directions + dir];
  }
};

namespace detail {

inline std::vector<double> bernoulli_mask(Rng& rng, std::size_t n, double rate) {
  std::vector<double> m(n, 1.0);
  if (rate <= 0.0) return m;
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  for (auto& v : m) v = rng.uniform() < keep ? scale : 0.0;
  return m;
}

}  // namespace detail

/// Samples every mask a training pass over one sequence needs.
inline DropoutMasks sample_masks(const ModelConfig& c, Rng& rng) {
  DropoutMasks m;
  for (std::size_t l = 0; l < c.layers; ++l) {
    const double rate = l == 0 ? 0.0 : c.dropout_rate;
    m.layer_input.push_back(detail::bernoulli_mask(rng, c.timesteps * c.layer_input(l), rate));
  }
  for (std::size_t l = 0; l < c.layers; ++l) {
    for (std::size_t d = 0; d < c.directions(); ++d) {
      m.recurrent.push_back(detail::bernoulli_mask(rng, c.hidden, c.recurrent_dropout_rate));
    }
  }
  m.dense_input = detail::bernoulli_mask(rng, c.timesteps * c.dense_input(), c.dense_dropout_rate);
  return m;
}

// ---------------------------------------------------------------------------
// Forward pass

/// What a recurrent step actually used; reported to a StepObserver.
struct StepEvent {
  std::size_t layer = 0;
  Direction direction = Direction::kForward;
  std::size_t t = 0;
  std::span<const double> recurrent_mask;  // empty in eval mode
  std::span<const double> input_mask;      // row t of the layer-input mask; empty in eval mode
};

using StepObserver = std::function<void(const StepEvent&)>;

/// Activations of one direction of one layer, in processing order.
struct DirectionTrace {
  std::vector<double> states;  // (T + 1) x H; row 0 is the zero initial state
  std::vector<double> gates;   // T x 3H for GRU (z | r | candidate), empty otherwise
};

struct SequenceTrace {
  std::vector<std::vector<double>> layer_inputs;  // masked inputs, T x D_l
  std::vector<DirectionTrace> directions;         // (layer, direction) major
  std::vector<double> dense_input;                // masked, T x dense_input
  std::vector<double> output;                     // T x F
};

namespace detail {

inline std::size_t time_index(Direction dir, std::size_t step, std::size_t T) {
  return dir == Direction::kForward ? step : T - 1 - step;
}

/// Runs one direction and writes H columns at col_offset of a T x out_stride output.
inline void run_direction(const CellRef& cell, std::span<const double> seq, std::size_t T,
                          const double* rec_mask, Direction dir, double* out,
                          std::size_t out_stride, std::size_t col_offset, DirectionTrace& trace,
                          const StepObserver* observer = nullptr, std::size_t layer = 0,
                          std::span<const double> input_mask = {}) {
  const std::size_t H = cell.hidden;
  const std::size_t D = cell.input;
  trace.states.assign((T + 1) * H, 0.0);
  if (cell.kind == CellKind::kGru) trace.gates.assign(T * 3 * H, 0.0);
  std::vector<double> scratch(2 * H);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = time_index(dir, s, T);
    kernel::StepSlots slots;
    if (cell.kind == CellKind::kGru) {
      double* g = trace.gates.data() + s * 3 * H;
      slots = {g, g + H, g + 2 * H};
    }
    double* h = trace.states.data() + (s + 1) * H;
    kernel::step_forward(cell, seq.data() + t * D, trace.states.data() + s * H, rec_mask, h, slots,
                         scratch.data());
    std::copy(h, h + H, out + t * out_stride + col_offset);
    if (observer && *observer) {
      StepEvent ev{layer, dir, t,
                   rec_mask ? std::span<const double>(rec_mask, H) : std::span<const double>{},
                   input_mask.empty() ? input_mask : input_mask.subspan(t * D, D)};
      (*observer)(ev);
    }
  }
}

}  // namespace detail

/// Runs a cell over a T x D sequence from a zero state. The backward direction
/// consumes t = T-1 .. 0 and its outputs are stored at their own time index.
inline std::vector<double> run_layer(std::span<const double> seq, std::size_t T, const CellRef& cell,
                                     std::span<const double> rec_mask, Direction dir) {
  if (seq.size() != T * cell.input) throw ConfigError("run_layer: sequence is not T x D");
  if (!rec_mask.empty() && rec_mask.size() != cell.hidden) {
    throw ConfigError("run_layer: recurrent mask size differs from hidden size");
  }
  std::vector<double> out(T * cell.hidden);
  DirectionTrace trace;
  detail::run_direction(cell, seq, T, rec_mask.empty() ? nullptr : rec_mask.data(), dir, out.data(),
                        cell.hidden, 0, trace);
  return out;
}

/// Per-timestep concatenation [forward_t | backward_t], T x 2H.
inline std::vector<double> bidirectional_layer(std::span<const double> seq, std::size_t T,
                                               const CellRef& fwd, const CellRef& bwd,
                                               std::span<const double> fwd_mask = {},
                                               std::span<const double> bwd_mask = {}) {
  if (fwd.hidden != bwd.hidden || fwd.input != bwd.input) {
    throw ConfigError("bidirectional_layer: cells must share input and hidden sizes");
  }
  const std::size_t H = fwd.hidden;
  if (seq.size() != T * fwd.input) throw ConfigError("bidirectional_layer: sequence is not T x D");
  std::vector<double> out(T * 2 * H);
  DirectionTrace trace;
  detail::run_direction(fwd, seq, T, fwd_mask.empty() ? nullptr : fwd_mask.data(),
                        Direction::kForward, out.data(), 2 * H, 0, trace);
  detail::run_direction(bwd, seq, T, bwd_mask.empty() ? nullptr : bwd_mask.data(),
                        Direction::kBackward, out.data(), 2 * H, H, trace);
  return out;
}

/// y_t = tanh(h_t W_o + b_o) for every timestep. W_o is D x F.
inline std::vector<double> dense_per_timestep(std::span<const double> hidden_seq, std::size_t T,
                                              std::span<const double> w_o,
                                              std::span<const double> b_o) {
  const std::size_t F = b_o.size();
  if (F == 0 || w_o.size() % F != 0) throw ConfigError("dense_per_timestep: bad kernel shape");
  const std::size_t D = w_o.size() / F;
  if (hidden_seq.size() != T * D) throw ConfigError("dense_per_timestep: input is not T x D");
  std::vector<double> y(T * F);
  for (std::size_t t = 0; t < T; ++t) {
    double* yt = y.data() + t * F;
    for (std::size_t f = 0; f < F; ++f) yt[f] = b_o[f];
    for (std::size_t i = 0; i < D; ++i) {
      const double hi = hidden_seq[t * D + i];
      for (std::size_t f = 0; f < F; ++f) yt[f] += hi * w_o[i * F + f];
    }
    for (std::size_t f = 0; f < F; ++f) yt[f] = std::tanh(yt[f]);
  }
  return y;
}

/// Forward pass of one T x F sequence. masks == nullptr means eval mode.
inline std::vector<double> forward_sequence(const ModelParams& p, std::span<const double> x,
                                            const DropoutMasks* masks, SequenceTrace& trace,
                                            const StepObserver* observer = nullptr) {
  const ModelConfig& c = p.config;
  const std::size_t T = c.timesteps;
  if (x.size() != T * c.features) throw ConfigError("forward: sequence is not timesteps x features");
  const std::size_t dirs = c.directions();
  const std::size_t H = c.hidden;
  trace.layer_inputs.resize(c.layers);
  trace.directions.resize(c.layers * dirs);

  std::vector<double> current(x.begin(), x.end());
  for (std::size_t l = 0; l < c.layers; ++l) {
    auto& in = trace.layer_inputs[l];
    in = std::move(current);
    std::span<const double> in_mask;
    if (masks) {
      in_mask = masks->layer_input[l];
      for (std::size_t i = 0; i < in.size(); ++i) in[i] *= in_mask[i];
    }
    std::vector<double> out(T * H * dirs);
    for (std::size_t d = 0; d < dirs; ++d) {
      const double* rm = masks ? masks->recurrent_for(l, d, dirs).data() : nullptr;
      detail::run_direction(p.cell(l, d), in, T, rm, d == 0 ? Direction::kForward : Direction::kBackward,
                            out.data(), H * dirs, d * H, trace.directions[l * dirs + d], observer, l,
                            in_mask);
    }
    for (double v : out) {
      if (!std::isfinite(v)) throw NumericError("non-finite activation in recurrent layer " + std::to_string(l));
    }
    current = std::move(out);
  }
  trace.dense_input = std::move(current);
  if (masks) {
    for (std::size_t i = 0; i < trace.dense_input.size(); ++i) trace.dense_input[i] *= masks->dense_input[i];
  }
  const std::size_t Dd = c.dense_input();
  trace.output = dense_per_timestep(trace.dense_input, T,
                                    std::span<const double>(p.dense_w(), Dd * c.features),
                                    std::span<const double>(p.dense_b(), c.features));
  for (double v : trace.output) {
    if (!std::isfinite(v)) throw NumericError("non-finite activation in dense output layer");
  }
  return trace.output;
}

/// Batched forward pass over B x T x F. Train mode samples fresh masks per
/// sequence from rng, in batch order.
inline Tensor forward(const ModelParams& p, std::span<const double> batch, std::size_t batch_size,
                      Mode mode, Rng* rng = nullptr, const StepObserver* observer = nullptr) {
  const ModelConfig& c = p.config;
  const std::size_t per = c.timesteps * c.features;
  if (batch.size() != batch_size * per) throw ConfigError("forward: batch is not B x T x F");
  if (mode == Mode::kTrain && !rng) throw ConfigError("forward: train mode needs a random source");
  Tensor out({batch_size, c.timesteps, c.features});
  SequenceTrace trace;
  for (std::size_t b = 0; b < batch_size; ++b) {
    DropoutMasks masks;
    if (mode == Mode::kTrain) masks = sample_masks(c, *rng);
    const auto y = forward_sequence(p, batch.subspan(b * per, per),
                                    mode == Mode::kTrain ? &masks : nullptr, trace, observer);
    std::copy(y.begin(), y.end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * per));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss and backward pass

struct LossOptions {
  /// Leave cells whose target is the -1 sentinel out of the mean.
  bool mask_sentinel = false;
};

inline bool counts_in_loss(double target, const LossOptions& opt) {
  return !opt.mask_sentinel || target != -1.0;
}

/// Mean squared error over all elements (or over non-sentinel targets).
inline double mse_loss(std::span<const double> pred, std::span<const double> target,
                       const LossOptions& opt = {}) {
  if (pred.size() != target.size()) throw ConfigError("mse_loss: shape mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!counts_in_loss(target[i], opt)) continue;
    const double d = pred[i] - target[i];
    sum += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// Accumulates d(loss)/d(params) for one traced sequence into grad, given
/// d(loss)/d(output) (T x F).
inline void backward_sequence(const ModelParams& p, const DropoutMasks* masks,
                              const SequenceTrace& trace, std::span<const double> d_out,
                              std::span<double> grad) {
  const ModelConfig& c = p.config;
  const std::size_t T = c.timesteps;
  const std::size_t F = c.features;
  const std::size_t H = c.hidden;
  const std::size_t dirs = c.directions();
  const std::size_t Dd = c.dense_input();

  // Dense layer.
  double* gw = grad.data() + p.dense_offset();
  double* gb = gw + Dd * F;
  const double* w = p.dense_w();
  std::vector<double> d_hidden(T * Dd, 0.0);
  std::vector<double> da(F);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      const double y = trace.output[t * F + f];
      da[f] = d_out[t * F + f] * (1.0 - y * y);
      gb[f] += da[f];
    }
    for (std::size_t i = 0; i < Dd; ++i) {
      const double hi = trace.dense_input[t * Dd + i];
      double acc = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        gw[i * F + f] += hi * da[f];
        acc += w[i * F + f] * da[f];
      }
      d_hidden[t * Dd + i] = acc;
    }
  }
  if (masks) {
    for (std::size_t i = 0; i < d_hidden.size(); ++i) d_hidden[i] *= masks->dense_input[i];
  }

  // Recurrent layers, last to first. d_hidden holds d(loss)/d(layer output).
  std::vector<double> dh(H), dh_prev(H), scratch(6 * H);
  for (std::size_t l = c.layers; l-- > 0;) {
    const std::size_t D = c.layer_input(l);
    const auto& in = trace.layer_inputs[l];
    std::vector<double> d_in(T * D, 0.0);
    for (std::size_t d = 0; d < dirs; ++d) {
      const Direction dir = d == 0 ? Direction::kForward : Direction::kBackward;
      const CellRef cell = p.cell(l, d);
      const CellGradRef gcell = p.cell_grad(grad, l, d);
      const DirectionTrace& tr = trace.directions[l * dirs + d];
      const double* rm = masks ? masks->recurrent_for(l, d, dirs).data() : nullptr;
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      for (std::size_t s = T; s-- > 0;) {
        const std::size_t t = detail::time_index(dir, s, T);
        for (std::size_t j = 0; j < H; ++j) dh[j] = d_hidden[t * H * dirs + d * H + j] + dh_prev[j];
        kernel::GateValues slots;
        if (c.cell == CellKind::kGru) {
          const double* g = tr.gates.data() + s * 3 * H;
          slots = {g, g + H, g + 2 * H};
        }
        kernel::step_backward(cell, gcell, in.data() + t * D, tr.states.data() + s * H, rm,
                              tr.states.data() + (s + 1) * H, slots, dh.data(), d_in.data() + t * D,
                              dh_prev.data(), scratch.data());
      }
    }
    if (l == 0) break;
    if (masks) {
      const auto& m = masks->layer_input[l];
      for (std::size_t i = 0; i < d_in.size(); ++i) d_in[i] *= m[i];
    }
    d_hidden = std::move(d_in);
  }
}

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Loss and exact gradient for a batch reconstructing itself.
///
/// masks holds one DropoutMasks per sequence (train mode) or is empty (eval
/// mode). With threads > 1 the batch is cut into contiguous chunks whose
/// partial gradients are summed in chunk order.
inline LossGradient backward(const ModelParams& p, std::span<const double> batch,
                             std::size_t batch_size, std::span<const DropoutMasks> masks = {},
                             const LossOptions& opt = {}, std::size_t threads = 1) {
  const ModelConfig& c = p.config;
  const std::size_t per = c.timesteps * c.features;
  if (batch.size() != batch_size * per) throw ConfigError("backward: batch is not B x T x F");
  if (!masks.empty() && masks.size() != batch_size) throw ConfigError("backward: one mask set per sequence");

  std::size_t counted = 0;
  for (double v : batch) counted += counts_in_loss(v, opt) ? 1 : 0;
  LossGradient result;
  result.grad.assign(p.values.size(), 0.0);
  if (counted == 0 || batch_size == 0) return result;
  const double scale = 1.0 / static_cast<double>(counted);

  auto run_chunk = [&](std::size_t lo, std::size_t hi, std::vector<double>& grad, double& sq_sum) {
    SequenceTrace trace;
    std::vector<double> d_out(per);
    for (std::size_t b = lo; b < hi; ++b) {
      const auto x = batch.subspan(b * per, per);
      const DropoutMasks* m = masks.empty() ? nullptr : &masks[b];
      const auto y = forward_sequence(p, x, m, trace);
      for (std::size_t i = 0; i < per; ++i) {
        if (!counts_in_loss(x[i], opt)) {
          d_out[i] = 0.0;
          continue;
        }
        const double diff = y[i] - x[i];
        sq_sum += diff * diff;
        d_out[i] = 2.0 * diff * scale;
      }
      backward_sequence(p, m, trace, d_out, grad);
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, batch_size));
  double sq_sum = 0.0;
  if (threads == 1) {
    run_chunk(0, batch_size, result.grad, sq_sum);
  } else {
    std::vector<std::vector<double>> grads(threads, std::vector<double>(p.values.size(), 0.0));
    std::vector<double> sums(threads, 0.0);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (batch_size + threads - 1) / threads;
    for (std::size_t k = 0; k < threads; ++k) {
      const std::size_t lo = std::min(batch_size, k * chunk);
      const std::size_t hi = std::min(batch_size, lo + chunk);
      pool.emplace_back([&, k, lo, hi] {
        try {
          run_chunk(lo, hi, grads[k], sums[k]);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t k = 0; k < threads; ++k) {
      sq_sum += sums[k];
      for (std::size_t i = 0; i < result.grad.size(); ++i) result.grad[i] += grads[k][i];
    }
  }
  result.loss = sq_sum * scale;
  for (std::size_t i = 0; i < result.grad.size(); ++i) {
    if (!std::isfinite(result.grad[i])) throw NumericError("non-finite gradient at parameter " + std::to_string(i));
  }
  return result;
}

/// Eval-mode reconstruction of B sequences; row b pairs with input row b.
inline std::vector<double> reconstruct(const ModelParams& p, std::span<const double> batch,
                                       std::size_t batch_size) {
  return forward(p, batch, batch_size, Mode::kEval).values();
}

}  // namespace aisguard::nn
