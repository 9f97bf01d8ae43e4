// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aisguard/errors.hpp"
#include "aisguard/nn/model.hpp"
#include "aisguard/preprocess.hpp"
#include "aisguard/sequence.hpp"

namespace aisguard {

struct ScoreRecord {
  Mmsi mmsi = 0;
  UtcDay day{};
  double rmse = 0.0;
  std::optional<std::array<double, kFeatureCount>> per_feature;
};

struct ScoreDistribution {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
  std::vector<double> bin_edges;  // bins + 1 edges over [0, max score]
  std::vector<std::size_t> bin_counts;
};

struct OutlierReport {
  double threshold = 0.0;
  double k = 6.0;
  std::vector<ScoreRecord> flagged;  // descending by rmse
};

struct OffenderReport {
  std::map<Mmsi, std::size_t> counts;
  std::vector<std::pair<Mmsi, std::size_t>> persistent;  // descending by count, then MMSI
  std::size_t min_appearances = 5;
};

struct ScoreOptions {
  bool mask_sentinel = false;
  bool per_feature = false;
};

/// Root mean squared difference over all cells of one sequence.
/// With mask_sentinel, cells whose truth is -1 are left out.
inline double rmse_per_sequence(std::span<const double> pred, std::span<const double> truth,
                                bool mask_sentinel = false) {
  if (pred.size() != truth.size()) throw ConfigError("rmse_per_sequence: shape mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask_sentinel && truth[i] == kMissingSentinel) continue;
    const double d = pred[i] - truth[i];
    sum += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
}

/// RMSE of each feature column of a slots x features sequence.
inline std::array<double, kFeatureCount> rmse_per_feature(std::span<const double> pred,
                                                          std::span<const double> truth,
                                                          bool mask_sentinel = false) {
  if (pred.size() != truth.size() || pred.size() % kFeatureCount != 0) {
    throw ConfigError("rmse_per_feature: shape mismatch");
  }
  std::array<double, kFeatureCount> sum{};
  std::array<std::size_t, kFeatureCount> n{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (mask_sentinel && truth[i] == kMissingSentinel) continue;
    const double d = pred[i] - truth[i];
    sum[i % kFeatureCount] += d * d;
    ++n[i % kFeatureCount];
  }
  std::array<double, kFeatureCount> out{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    out[f] = n[f] == 0 ? 0.0 : std::sqrt(sum[f] / static_cast<double>(n[f]));
  }
  return out;
}

/// One score per sequence, in input order.
inline std::vector<ScoreRecord> score_set(const nn::ModelParams& model, const SequenceSet& set,
                                          const ScoreOptions& opt = {}) {
  if (model.config.timesteps != kSlotsPerDay || model.config.features != kFeatureCount) {
    throw ConfigError("model is not configured for 48 x 4 vessel-day sequences");
  }
  std::vector<ScoreRecord> out;
  out.reserve(set.size());
  if (set.empty()) return out;
  const auto pred = nn::reconstruct(model, set.tensor, set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto p = std::span<const double>(pred).subspan(i * kCellsPerDay, kCellsPerDay);
    ScoreRecord r{set.ids[i].mmsi, set.ids[i].day, rmse_per_sequence(p, set.row(i), opt.mask_sentinel),
                  std::nullopt};
    if (opt.per_feature) r.per_feature = rmse_per_feature(p, set.row(i), opt.mask_sentinel);
    out.push_back(r);
  }
  return out;
}

/// Population mean and standard deviation plus an equal-width histogram over [0, max].
inline ScoreDistribution fit_distribution(std::span<const ScoreRecord> scores, std::size_t bins = 50) {
  if (scores.empty()) throw DataError("cannot fit a distribution to zero scores");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  ScoreDistribution d;
  d.count = scores.size();
  double sum = 0.0, max = 0.0;
  for (const auto& s : scores) {
    sum += s.rmse;
    max = std::max(max, s.rmse);
  }
  d.mean = sum / static_cast<double>(d.count);
  double sq = 0.0;
  for (const auto& s : scores) sq += (s.rmse - d.mean) * (s.rmse - d.mean);
  d.std = std::sqrt(sq / static_cast<double>(d.count));

  const double width = max / static_cast<double>(bins);
  d.bin_edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) d.bin_edges[b] = width * static_cast<double>(b);
  d.bin_edges[bins] = max;
  d.bin_counts.assign(bins, 0);
  for (const auto& s : scores) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>(s.rmse / width) : 0;
    ++d.bin_counts[std::min(b, bins - 1)];
  }
  return d;
}

/// Flags scores strictly above mean + k * std.
inline OutlierReport flag_outliers(std::span<const ScoreRecord> scores, const ScoreDistribution& dist,
                                   double k = 6.0) {
  if (!(k > 0.0)) throw ConfigError("sigma multiplier k must be positive");
  OutlierReport rep;
  rep.k = k;
  rep.threshold = dist.mean + k * dist.std;
  for (const auto& s : scores) {
    if (s.rmse > rep.threshold) rep.flagged.push_back(s);
  }
  std::stable_sort(rep.flagged.begin(), rep.flagged.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
    if (a.rmse != b.rmse) return a.rmse > b.rmse;
    if (a.mmsi != b.mmsi) return a.mmsi < b.mmsi;
    return a.day < b.day;
  });
  return rep;
}

/// Flag counts per vessel; vessels reaching min_appearances are persistent.
inline OffenderReport offender_frequency(const OutlierReport& report, std::size_t min_appearances = 5) {
  if (min_appearances < 1) throw ConfigError("min_appearances must be at least 1");
  OffenderReport out;
  out.min_appearances = min_appearances;
  for (const auto& s : report.flagged) ++out.counts[s.mmsi];
  for (const auto& [m, n] : out.counts) {
    if (n >= min_appearances) out.persistent.emplace_back(m, n);
  }
  std::stable_sort(out.persistent.begin(), out.persistent.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_scores_csv(std::ostream& os, std::span<const ScoreRecord> scores,
                             bool mask_sentinel = false) {
  const bool per_feature = !scores.empty() && scores.front().per_feature.has_value();
  const std::string col = mask_sentinel ? "rmse_masked_sentinel" : "rmse";
  os << "mmsi,day," << col;
  if (per_feature) {
    for (const char* f : kFeatureNames) os << ',' << col << '_' << f;
  }
  os << '\n';
  for (const auto& s : scores) {
    os << s.mmsi << ',' << format_day(s.day) << ',' << detail::g17(s.rmse);
    if (per_feature && s.per_feature) {
      for (double v : *s.per_feature) os << ',' << detail::g17(v);
    }
    os << '\n';
  }
}

/// Reads a file produced by write_scores_csv. Per-feature columns, when
/// present, are read back as well.
inline std::vector<ScoreRecord> read_scores_csv(std::istream& is) {
  std::vector<std::string> fields;
  if (!aisguard::detail::read_csv_record(is, fields) || fields.size() < 3 || fields[0] != "mmsi" ||
      fields[1] != "day") {
    throw DataError("scores file lacks the mmsi,day,rmse header");
  }
  const bool per_feature = fields.size() >= 3 + kFeatureCount;
  std::vector<ScoreRecord> out;
  while (aisguard::detail::read_csv_record(is, fields)) {
    if (fields.size() == 1 && aisguard::detail::trim(fields[0]).empty()) continue;
    if (fields.size() < (per_feature ? 3 + kFeatureCount : 3)) throw DataError("short row in scores file");
    ScoreRecord r;
    auto mmsi = aisguard::detail::parse_mmsi(fields[0]);
    auto day = parse_day(aisguard::detail::trim(fields[1]));
    auto rmse = aisguard::detail::parse_finite(fields[2]);
    if (!mmsi || !day || !rmse) throw DataError("malformed row in scores file");
    r.mmsi = *mmsi;
    r.day = *day;
    r.rmse = *rmse;
    if (per_feature) {
      std::array<double, kFeatureCount> pf{};
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        auto v = aisguard::detail::parse_finite(fields[3 + f]);
        if (!v) throw DataError("malformed per-feature value in scores file");
        pf[f] = *v;
      }
      r.per_feature = pf;
    }
    out.push_back(r);
  }
  return out;
}

inline void write_outliers_csv(std::ostream& os, const OutlierReport& rep) {
  os << "rank,mmsi,day,rmse,threshold,k\n";
  for (std::size_t i = 0; i < rep.flagged.size(); ++i) {
    const auto& s = rep.flagged[i];
    os << i + 1 << ',' << s.mmsi << ',' << format_day(s.day) << ',' << detail::g17(s.rmse) << ','
       << detail::g17(rep.threshold) << ',' << detail::g17(rep.k) << '\n';
  }
}

inline void write_histogram_csv(std::ostream& os, const ScoreDistribution& d) {
  os << "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < d.bin_counts.size(); ++b) {
    os << detail::g17(d.bin_edges[b]) << ',' << detail::g17(d.bin_edges[b + 1]) << ','
       << d.bin_counts[b] << '\n';
  }
}

/// Rows ordered by flag count descending, then MMSI.
inline void write_offenders_csv(std::ostream& os, const OffenderReport& rep) {
  std::vector<std::pair<Mmsi, std::size_t>> rows(rep.counts.begin(), rep.counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  os << "mmsi,flag_count,persistent\n";
  for (const auto& [m, n] : rows) {
    os << m << ',' << n << ',' << (n >= rep.min_appearances ? 1 : 0) << '\n';
  }
}

}  // namespace aisguard
