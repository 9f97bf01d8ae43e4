// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/nn/tensor.hpp"

namespace aisguard::nn {

enum class CellKind { kSimpleRnn, kGru };

/// Which side of the GRU interpolation the update gate z weights.
///   kUpdateGatesCandidate: h = (1 - z) * h_prev + z * candidate   (default)
///   kUpdateGatesPrevious:  h = z * h_prev + (1 - z) * candidate   (Keras)
enum class GruConvention { kUpdateGatesCandidate, kUpdateGatesPrevious };

inline constexpr std::size_t gate_count(CellKind k) { return k == CellKind::kGru ? 3 : 1; }

/// Gate block: input kernel (D x H), recurrent kernel (H x H), bias (H).
/// GRU gates are ordered update (z), reset (r), candidate.
inline constexpr std::size_t gate_block_size(std::size_t input, std::size_t hidden) {
  return input * hidden + hidden * hidden + hidden;
}

inline constexpr std::size_t cell_param_count(CellKind k, std::size_t input, std::size_t hidden) {
  return gate_count(k) * gate_block_size(input, hidden);
}

/// Non-owning view of one cell's parameters laid out as consecutive gate blocks.
template <typename T>
struct BasicCellRef {
  CellKind kind = CellKind::kGru;
  GruConvention convention = GruConvention::kUpdateGatesCandidate;
  std::size_t input = 0;
  std::size_t hidden = 0;
  T* data = nullptr;

  T* gate(std::size_t g) const { return data + g * gate_block_size(input, hidden); }
  T* wx(std::size_t g) const { return gate(g); }
  T* wh(std::size_t g) const { return gate(g) + input * hidden; }
  T* b(std::size_t g) const { return gate(g) + input * hidden + hidden * hidden; }
};

using CellRef = BasicCellRef<const double>;
using CellGradRef = BasicCellRef<double>;

namespace kernel {

inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

/// out = b + x W_x + h W_h
inline void affine(const CellRef& c, std::size_t g, const double* x, const double* h, double* out) {
  const std::size_t H = c.hidden;
  const double* b = c.b(g);
  for (std::size_t j = 0; j < H; ++j) out[j] = b[j];
  const double* wx = c.wx(g);
  for (std::size_t i = 0; i < c.input; ++i) {
    const double xi = x[i];
    const double* row = wx + i * H;
    for (std::size_t j = 0; j < H; ++j) out[j] += xi * row[j];
  }
  const double* wh = c.wh(g);
  for (std::size_t i = 0; i < H; ++i) {
    const double hi = h[i];
    const double* row = wh + i * H;
    for (std::size_t j = 0; j < H; ++j) out[j] += hi * row[j];
  }
}

/// Per-step activations kept for the backward pass.
struct StepSlots {
  double* z = nullptr;     // GRU update gate
  double* r = nullptr;     // GRU reset gate
  double* cand = nullptr;  // GRU candidate
};

/// One recurrent step. rec_mask may be null (no recurrent dropout).
/// scratch needs 2 * hidden doubles.
inline void step_forward(const CellRef& c, const double* x, const double* h_prev,
                         const double* rec_mask, double* h_out, StepSlots slots,
                         double* scratch) {
  const std::size_t H = c.hidden;
  double* hm = scratch;
  double* tmp = scratch + H;
  for (std::size_t j = 0; j < H; ++j) hm[j] = rec_mask ? h_prev[j] * rec_mask[j] : h_prev[j];
  if (c.kind == CellKind::kSimpleRnn) {
    affine(c, 0, x, hm, h_out);
    for (std::size_t j = 0; j < H; ++j) h_out[j] = std::tanh(h_out[j]);
    return;
  }
  affine(c, 0, x, hm, slots.z);
  for (std::size_t j = 0; j < H; ++j) slots.z[j] = sigmoid(slots.z[j]);
  affine(c, 1, x, hm, slots.r);
  for (std::size_t j = 0; j < H; ++j) {
    slots.r[j] = sigmoid(slots.r[j]);
    tmp[j] = slots.r[j] * hm[j];
  }
  affine(c, 2, x, tmp, slots.cand);
  for (std::size_t j = 0; j < H; ++j) slots.cand[j] = std::tanh(slots.cand[j]);
  for (std::size_t j = 0; j < H; ++j) {
    const double z = slots.z[j];
    h_out[j] = c.convention == GruConvention::kUpdateGatesCandidate
                   ? (1.0 - z) * h_prev[j] + z * slots.cand[j]
                   : z * h_prev[j] + (1.0 - z) * slots.cand[j];
  }
}

struct GateValues {
  const double* z = nullptr;
  const double* r = nullptr;
  const double* cand = nullptr;
};

/// Reverse of step_forward. Accumulates parameter gradients into grad and the
/// input gradient into dx; writes dh_prev. scratch needs 6 * hidden doubles.
inline void step_backward(const CellRef& c, const CellGradRef& grad, const double* x,
                          const double* h_prev, const double* rec_mask, const double* h,
                          GateValues slots, const double* dh, double* dx, double* dh_prev,
                          double* scratch) {
  const std::size_t H = c.hidden;
  const std::size_t D = c.input;
  double* hm = scratch;
  double* dhm = scratch + H;
  for (std::size_t j = 0; j < H; ++j) {
    hm[j] = rec_mask ? h_prev[j] * rec_mask[j] : h_prev[j];
    dhm[j] = 0.0;
  }

  // Adds outer products and propagates through one gate's affine map.
  auto through_gate = [&](std::size_t g, const double* da, const double* h_in, double* dh_in) {
    double* gwx = grad.wx(g);
    double* gwh = grad.wh(g);
    double* gb = grad.b(g);
    const double* wx = c.wx(g);
    const double* wh = c.wh(g);
    for (std::size_t j = 0; j < H; ++j) gb[j] += da[j];
    for (std::size_t i = 0; i < D; ++i) {
      const double xi = x[i];
      const double* wrow = wx + i * H;
      double* grow = gwx + i * H;
      double acc = 0.0;
      for (std::size_t j = 0; j < H; ++j) {
        grow[j] += xi * da[j];
        acc += wrow[j] * da[j];
      }
      dx[i] += acc;
    }
    for (std::size_t i = 0; i < H; ++i) {
      const double hi = h_in[i];
      const double* wrow = wh + i * H;
      double* grow = gwh + i * H;
      double acc = 0.0;
      for (std::size_t j = 0; j < H; ++j) {
        grow[j] += hi * da[j];
        acc += wrow[j] * da[j];
      }
      dh_in[i] += acc;
    }
  };

  if (c.kind == CellKind::kSimpleRnn) {
    double* da = scratch + 2 * H;
    for (std::size_t j = 0; j < H; ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);
    through_gate(0, da, hm, dhm);
    for (std::size_t j = 0; j < H; ++j) dh_prev[j] = rec_mask ? dhm[j] * rec_mask[j] : dhm[j];
    return;
  }

  double* daz = scratch + 2 * H;
  double* dar = scratch + 3 * H;
  double* dah = scratch + 4 * H;
  double* rh = scratch + 5 * H;
  const bool gate_cand = c.convention == GruConvention::kUpdateGatesCandidate;
  for (std::size_t j = 0; j < H; ++j) {
    const double z = slots.z[j];
    const double cand = slots.cand[j];
    const double dz = gate_cand ? dh[j] * (cand - h_prev[j]) : dh[j] * (h_prev[j] - cand);
    const double dc = gate_cand ? dh[j] * z : dh[j] * (1.0 - z);
    dh_prev[j] = gate_cand ? dh[j] * (1.0 - z) : dh[j] * z;
    daz[j] = dz * z * (1.0 - z);
    dah[j] = dc * (1.0 - cand * cand);
    rh[j] = slots.r[j] * hm[j];
    dar[j] = 0.0;  // reused below as d(r * hm)
  }
  // Candidate gate: recurrent input is r * hm.
  through_gate(2, dah, rh, dar);
  for (std::size_t j = 0; j < H; ++j) {
    const double r = slots.r[j];
    const double d_rh = dar[j];
    dhm[j] += d_rh * r;
    dar[j] = d_rh * hm[j] * r * (1.0 - r);
  }
  through_gate(1, dar, hm, dhm);
  through_gate(0, daz, hm, dhm);
  for (std::size_t j = 0; j < H; ++j) dh_prev[j] += rec_mask ? dhm[j] * rec_mask[j] : dhm[j];
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Owning single-cell parameter sets, used for standalone steps and tests.

struct SimpleRnnCellParams {
  Tensor w_x;  // D x H
  Tensor w_h;  // H x H
  Tensor b;    // H

  std::size_t input() const { return w_x.dim(0); }
  std::size_t hidden() const { return w_h.dim(0); }

  void validate() const {
    if (w_x.rank() != 2 || w_h.rank() != 2 || b.rank() != 1 || w_h.dim(1) != w_h.dim(0) ||
        w_x.dim(1) != w_h.dim(0) || b.dim(0) != w_h.dim(0)) {
      throw ConfigError("SimpleRNN cell parameter shapes are inconsistent");
    }
  }

  /// Packs into the engine's gate-block layout.
  std::vector<double> packed() const {
    std::vector<double> out(w_x.data().begin(), w_x.data().end());
    out.insert(out.end(), w_h.data().begin(), w_h.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    return out;
  }
};

struct GruCellParams {
  std::array<Tensor, 3> w_x;  // z, r, candidate; each D x H
  std::array<Tensor, 3> w_h;  // each H x H
  std::array<Tensor, 3> b;    // each H
  GruConvention convention = GruConvention::kUpdateGatesCandidate;

  std::size_t input() const { return w_x[0].dim(0); }
  std::size_t hidden() const { return w_h[0].dim(0); }

  void validate() const {
    for (std::size_t g = 0; g < 3; ++g) {
      if (w_x[g].rank() != 2 || w_h[g].rank() != 2 || b[g].rank() != 1) {
        throw ConfigError("GRU cell parameter ranks are inconsistent");
      }
      if (w_x[g].dim(0) != w_x[0].dim(0) || w_x[g].dim(1) != w_h[0].dim(0) ||
          w_h[g].dim(0) != w_h[0].dim(0) || w_h[g].dim(1) != w_h[0].dim(0) ||
          b[g].dim(0) != w_h[0].dim(0)) {
        throw ConfigError("GRU cell parameter shapes are inconsistent");
      }
    }
  }

  std::vector<double> packed() const {
    std::vector<double> out;
    for (std::size_t g = 0; g < 3; ++g) {
      out.insert(out.end(), w_x[g].data().begin(), w_x[g].data().end());
      out.insert(out.end(), w_h[g].data().begin(), w_h[g].data().end());
      out.insert(out.end(), b[g].data().begin(), b[g].data().end());
    }
    return out;
  }
};

namespace detail {

inline void check_step_shapes(std::span<const double> x, std::span<const double> h_prev,
                              std::size_t input, std::size_t hidden) {
  if (x.size() != input || h_prev.size() != hidden) {
    throw ConfigError("step input/state size does not match cell (" + std::to_string(input) + ", " +
                      std::to_string(hidden) + ")");
  }
}

}  // namespace detail

/// h_t = tanh(x W_x + h_prev W_h + b)
inline std::vector<double> simple_rnn_step(std::span<const double> x, std::span<const double> h_prev,
                                           const SimpleRnnCellParams& p) {
  p.validate();
  detail::check_step_shapes(x, h_prev, p.input(), p.hidden());
  const auto packed = p.packed();
  const CellRef ref{CellKind::kSimpleRnn, GruConvention::kUpdateGatesCandidate, p.input(),
                    p.hidden(), packed.data()};
  std::vector<double> h(p.hidden()), scratch(2 * p.hidden());
  kernel::step_forward(ref, x.data(), h_prev.data(), nullptr, h.data(), {}, scratch.data());
  return h;
}

/// z = sigmoid(x Wz + h Uz + bz), r = sigmoid(x Wr + h Ur + br),
/// c = tanh(x Wc + (r * h) Uc + bc), h_t mixes h_prev and c through z.
inline std::vector<double> gru_step(std::span<const double> x, std::span<const double> h_prev,
                                    const GruCellParams& p) {
  p.validate();
  detail::check_step_shapes(x, h_prev, p.input(), p.hidden());
  const auto packed = p.packed();
  const std::size_t H = p.hidden();
  const CellRef ref{CellKind::kGru, p.convention, p.input(), H, packed.data()};
  std::vector<double> h(H), gates(3 * H), scratch(2 * H);
  kernel::step_forward(ref, x.data(), h_prev.data(), nullptr, h.data(),
                       {gates.data(), gates.data() + H, gates.data() + 2 * H}, scratch.data());
  return h;
}

}  // namespace aisguard::nn
