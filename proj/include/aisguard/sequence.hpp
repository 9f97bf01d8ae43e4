// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/preprocess.hpp"
#include "aisguard/rng.hpp"

namespace aisguard {

struct DayId {
  Mmsi mmsi = 0;
  UtcDay day{};

  friend auto operator<=>(const DayId&, const DayId&) = default;
};

/// N vessel-days as an N x 48 x 4 tensor plus an (MMSI, day) sidecar.
/// The sidecar never enters the model.
struct SequenceSet {
  std::vector<double> tensor;
  std::vector<DayId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(tensor).subspan(i * kCellsPerDay, kCellsPerDay);
  }

  void push_back(const DayId& id, std::span<const double> cells) {
    if (cells.size() != kCellsPerDay) throw ConfigError("sequence row must have 192 cells");
    ids.push_back(id);
    tensor.insert(tensor.end(), cells.begin(), cells.end());
  }

  SequenceSet subset(std::span<const std::size_t> indices) const {
    SequenceSet out;
    out.ids.reserve(indices.size());
    out.tensor.reserve(indices.size() * kCellsPerDay);
    for (std::size_t i : indices) out.push_back(ids[i], row(i));
    return out;
  }
};

/// Stacks days ordered by MMSI then day.
inline SequenceSet assemble(std::span<const NormalizedDay> days) {
  std::vector<const NormalizedDay*> order;
  order.reserve(days.size());
  for (const auto& d : days) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](const NormalizedDay* a, const NormalizedDay* b) {
    return std::tie(a->mmsi, a->day) < std::tie(b->mmsi, b->day);
  });
  SequenceSet out;
  for (const auto* d : order) out.push_back(DayId{d->mmsi, d->day}, d->matrix);
  return out;
}

struct SplitSpec {
  double test_fraction = 0.20;
  double val_fraction_of_train = 0.20;
  std::uint64_t seed = 42;
  bool by_vessel = false;

  void validate() const {
    auto inside = [](double v) { return v > 0.0 && v < 1.0; };
    if (!inside(test_fraction) || !inside(val_fraction_of_train)) {
      throw ConfigError("split fractions must lie strictly inside (0, 1)");
    }
  }
};

struct SplitSets {
  SequenceSet train;
  SequenceSet validation;
  SequenceSet test;
};

/// Deterministic shuffled partition.
///
/// Record-level (default): test gets floor(N * test_fraction) records, then
/// validation gets floor(remaining * val_fraction_of_train). With by_vessel,
/// whole vessels are assigned until each target count is reached, so sizes
/// are approximate. Indices inside each part keep their input order.
inline SplitSets split(const SequenceSet& set, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = set.size();
  if (n < 5) throw DataError("split needs at least 5 sequences, got " + std::to_string(n));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(n - n_test) * spec.val_fraction_of_train));

  Rng rng(spec.seed);
  std::vector<std::size_t> test_idx, val_idx, train_idx;
  if (!spec.by_vessel) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));
    test_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    val_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    train_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
  } else {
    std::map<Mmsi, std::vector<std::size_t>> by_mmsi;
    for (std::size_t i = 0; i < n; ++i) by_mmsi[set.ids[i].mmsi].push_back(i);
    std::vector<Mmsi> vessels;
    for (const auto& [m, _] : by_mmsi) vessels.push_back(m);
    rng.shuffle(std::span(vessels));
    for (Mmsi m : vessels) {
      auto& rows = by_mmsi[m];
      auto& dst = test_idx.size() < n_test ? test_idx : (val_idx.size() < n_val ? val_idx : train_idx);
      dst.insert(dst.end(), rows.begin(), rows.end());
    }
  }
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return SplitSets{set.subset(train_idx), set.subset(val_idx), set.subset(test_idx)};
}

// ---------------------------------------------------------------------------
// Tensor file: little-endian float64 cells, row-major (record, slot, feature),
// with a sidecar CSV "record_index,mmsi,day".

inline void write_f64_le(std::ostream& os, std::span<const double> values) {
  std::vector<unsigned char> buf(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<double> read_f64_le(std::istream& is, std::size_t count) {
  std::vector<unsigned char> buf(count * 8);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) throw IoError("truncated float64 data");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension();
  p += "_ids.csv";
  return p;
}

inline void save_sequence_set(const std::filesystem::path& tensor_path, const SequenceSet& set) {
  {
    std::ofstream out(tensor_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + tensor_path.string());
    write_f64_le(out, set.tensor);
  }
  std::ofstream ids(sidecar_path(tensor_path));
  if (!ids) throw IoError("cannot write sidecar for " + tensor_path.string());
  ids << "record_index,mmsi,day\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    ids << i << ',' << set.ids[i].mmsi << ',' << format_day(set.ids[i].day) << '\n';
  }
}

inline SequenceSet load_sequence_set(const std::filesystem::path& tensor_path) {
  SequenceSet set;
  std::ifstream ids(sidecar_path(tensor_path));
  if (!ids) throw DataError("missing sidecar for " + tensor_path.string());
  std::string line;
  std::getline(ids, line);
  while (std::getline(ids, line)) {
    if (detail::trim(line).empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw DataError("bad sidecar line: " + line);
    auto mmsi = detail::parse_mmsi(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    auto day = parse_day(detail::trim(std::string_view(line).substr(c2 + 1)));
    if (!mmsi || !day) throw DataError("bad sidecar line: " + line);
    set.ids.push_back(DayId{*mmsi, *day});
  }
  std::ifstream in(tensor_path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("missing tensor file " + tensor_path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != set.size() * kCellsPerDay * 8) {
    throw DataError("tensor file size does not match sidecar: " + tensor_path.string());
  }
  in.seekg(0);
  set.tensor = read_f64_le(in, set.size() * kCellsPerDay);
  return set;
}

}  // namespace aisguard
