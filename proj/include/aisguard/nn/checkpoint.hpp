// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/nn/adam.hpp"
#include "aisguard/nn/model.hpp"

namespace aisguard::nn {

// Layout (all integers and floats little-endian):
//   "AISGCKPT" | u32 version
//   u32 cell | u32 bidirectional | u32 gru_convention
//   u64 layers | u64 hidden | u64 timesteps | u64 features
//   f64 dropout | f64 recurrent_dropout | f64 dense_dropout
//   u64 n | f64[n] parameters (ModelParams order)
//   u8 has_optimizer [ f64 lr | f64 beta1 | f64 beta2 | f64 eps | u64 step | f64[n] m | f64[n] v ]
inline constexpr std::array<char, 8> kCheckpointMagic{'A', 'I', 'S', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams model;
  std::optional<AdamState> optimizer;
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}
  void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(v, 4); }
  void u64(std::uint64_t v) { raw(v, 8); }
  void f64(double v) { raw(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(const std::vector<double>& vs) {
    for (double v : vs) f64(v);
  }

 private:
  void raw(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(buf, n);
  }
  std::ostream& os_;
};

class LeReader {
 public:
  explicit LeReader(std::istream& is) : is_(is) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  double f64() { return std::bit_cast<double>(raw(8)); }
  std::vector<double> f64s(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }

 private:
  std::uint64_t raw(int n) {
    unsigned char buf[8];
    is_.read(reinterpret_cast<char*>(buf), n);
    if (is_.gcount() != n) throw DataError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& is_;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const ModelParams& p, const AdamState* adam = nullptr) {
  detail::LeWriter w(os);
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  const ModelConfig& c = p.config;
  w.u32(static_cast<std::uint32_t>(c.cell));
  w.u32(c.bidirectional ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.gru_convention));
  w.u64(c.layers);
  w.u64(c.hidden);
  w.u64(c.timesteps);
  w.u64(c.features);
  w.f64(c.dropout_rate);
  w.f64(c.recurrent_dropout_rate);
  w.f64(c.dense_dropout_rate);
  w.u64(p.values.size());
  w.f64s(p.values);
  w.u8(adam ? 1 : 0);
  if (adam) {
    w.f64(adam->learning_rate);
    w.f64(adam->beta1);
    w.f64(adam->beta2);
    w.f64(adam->epsilon);
    w.u64(adam->step);
    auto m = adam->m, v = adam->v;
    m.resize(p.values.size(), 0.0);
    v.resize(p.values.size(), 0.0);
    w.f64s(m);
    w.f64s(v);
  }
  if (!os) throw IoError("failed to write checkpoint");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (is.gcount() != 8 || magic != kCheckpointMagic) throw DataError("not a model checkpoint");
  detail::LeReader r(is);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  const auto cell = r.u32();
  if (cell > 1) throw DataError("checkpoint has unknown cell kind");
  c.cell = static_cast<CellKind>(cell);
  c.bidirectional = r.u32() != 0;
  const auto conv = r.u32();
  if (conv > 1) throw DataError("checkpoint has unknown GRU convention");
  c.gru_convention = static_cast<GruConvention>(conv);
  c.layers = r.u64();
  c.hidden = r.u64();
  c.timesteps = r.u64();
  c.features = r.u64();
  c.dropout_rate = r.f64();
  c.recurrent_dropout_rate = r.f64();
  c.dense_dropout_rate = r.f64();
  c.validate();
  const auto n = r.u64();
  if (n != ModelParams::count(c)) throw DataError("checkpoint parameter count does not match its config");
  Checkpoint ck{ModelParams{c, r.f64s(n)}, std::nullopt};
  if (r.u8() != 0) {
    AdamState a;
    a.learning_rate = r.f64();
    a.beta1 = r.f64();
    a.beta2 = r.f64();
    a.epsilon = r.f64();
    a.step = r.u64();
    a.m = r.f64s(n);
    a.v = r.f64s(n);
    ck.optimizer = std::move(a);
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& p,
                            const AdamState* adam = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, p, adam);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  return read_checkpoint(in);
}

inline const char* cell_name(CellKind k) { return k == CellKind::kGru ? "gru" : "simple_rnn"; }

inline const char* convention_name(GruConvention c) {
  return c == GruConvention::kUpdateGatesCandidate ? "update_gates_candidate" : "update_gates_previous";
}

/// Human-readable companion of a checkpoint.
inline void write_checkpoint_manifest(std::ostream& os, const ModelConfig& c, std::uint64_t seed,
                                      std::size_t epoch, double train_loss,
                                      std::optional<double> val_loss) {
  char buf[64];
  os << "cell=" << cell_name(c.cell) << '\n'
     << "bidirectional=" << (c.bidirectional ? 1 : 0) << '\n'
     << "layers=" << c.layers << '\n'
     << "hidden=" << c.hidden << '\n'
     << "timesteps=" << c.timesteps << '\n'
     << "features=" << c.features << '\n'
     << "dropout=" << c.dropout_rate << '\n'
     << "recurrent_dropout=" << c.recurrent_dropout_rate << '\n'
     << "dense_dropout=" << c.dense_dropout_rate << '\n'
     << "gru_convention=" << convention_name(c.gru_convention) << '\n'
     << "init=glorot_uniform_input,orthogonal_recurrent,zero_bias\n"
     << "seed=" << seed << '\n'
     << "epoch=" << epoch << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", train_loss);
  os << "train_loss=" << buf << '\n';
  if (val_loss) {
    std::snprintf(buf, sizeof(buf), "%.17g", *val_loss);
    os << "val_loss=" << buf << '\n';
  }
}

}  // namespace aisguard::nn
