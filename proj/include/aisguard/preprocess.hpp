// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aisguard/ais_ingest.hpp"
#include "aisguard/errors.hpp"

namespace aisguard {

inline constexpr std::size_t kSlotsPerDay = 48;
inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::size_t kCellsPerDay = kSlotsPerDay * kFeatureCount;
inline constexpr std::chrono::seconds kSlotSpacing{1800};
inline constexpr double kMissingSentinel = -1.0;

/// Feature order used in every matrix, file and statistic.
enum class Feature : std::size_t { kLat = 0, kLon = 1, kSog = 2, kCog = 3 };

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames{"lat", "lon", "sog", "cog"};

inline const char* feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

/// LAT, LON, SOG, COG for one grid slot.
using FeatureTuple = std::array<double, kFeatureCount>;

inline FeatureTuple features_of(const AisRecord& r) { return {r.lat, r.lon, r.sog, r.cog}; }

/// One vessel-day on the 30-minute grid anchored at 00:00 UTC.
struct DailyGrid {
  Mmsi mmsi = 0;
  UtcDay day{};
  std::array<FeatureTuple, kSlotsPerDay> slots{};  // meaningful only where mask is set
  std::array<bool, kSlotsPerDay> mask{};

  std::size_t present_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  }
  std::size_t missing_count() const { return kSlotsPerDay - present_count(); }
  double missing_fraction() const {
    return static_cast<double>(missing_count()) / static_cast<double>(kSlotsPerDay);
  }
};

struct NormalizationStats {
  std::array<double, kFeatureCount> min{};
  std::array<double, kFeatureCount> max{};

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

/// One vessel-day as model input: every cell is in [0, 1] or exactly -1.
struct NormalizedDay {
  Mmsi mmsi = 0;
  UtcDay day{};
  std::array<double, kCellsPerDay> matrix{};  // slot-major, feature-minor
  std::size_t clamped_cells = 0;

  double at(std::size_t slot, Feature f) const {
    return matrix[slot * kFeatureCount + static_cast<std::size_t>(f)];
  }
};

// ---------------------------------------------------------------------------

/// Snaps each half-hour grid instant to the nearest record within tolerance.
///
/// Ties go to the earlier record. A record that already filled a slot is not
/// reused, which only matters for tolerances of 15 minutes or more.
inline DailyGrid resample_daily(const VesselTrack& track, UtcDay day,
                                std::chrono::seconds tolerance = std::chrono::seconds{60}) {
  DailyGrid grid;
  grid.mmsi = track.mmsi;
  grid.day = day;
  const auto& recs = track.records;
  std::size_t last_used = SIZE_MAX;
  for (std::size_t slot = 0; slot < kSlotsPerDay; ++slot) {
    const UtcSeconds target = UtcSeconds{day} + kSlotSpacing * static_cast<long>(slot);
    auto it = std::lower_bound(recs.begin(), recs.end(), target - tolerance,
                               [](const AisRecord& r, UtcSeconds t) { return r.timestamp < t; });
    std::size_t best = SIZE_MAX;
    std::chrono::seconds best_off{};
    for (; it != recs.end() && it->timestamp <= target + tolerance; ++it) {
      const auto idx = static_cast<std::size_t>(it - recs.begin());
      if (last_used != SIZE_MAX && idx <= last_used) continue;
      const auto off = it->timestamp > target ? it->timestamp - target : target - it->timestamp;
      if (best == SIZE_MAX || off < best_off) {
        best = idx;
        best_off = off;
      }
    }
    if (best != SIZE_MAX) {
      grid.slots[slot] = features_of(recs[best]);
      grid.mask[slot] = true;
      last_used = best;
    }
  }
  return grid;
}

/// UTC calendar days on which the track has at least one record, ascending.
inline std::vector<UtcDay> track_days(const VesselTrack& track) {
  std::vector<UtcDay> days;
  for (const auto& r : track.records) {
    const UtcDay d = std::chrono::floor<std::chrono::days>(r.timestamp);
    if (days.empty() || days.back() != d) days.push_back(d);
  }
  return days;
}

inline std::optional<DailyGrid> drop_sparse_day(const DailyGrid& grid, std::size_t min_entries = 20) {
  if (grid.present_count() < min_entries) return std::nullopt;
  return grid;
}

/// Fills interior runs of missing slots no longer than max_fill by linear
/// interpolation over slot index, feature by feature. Leading and trailing
/// runs are left missing.
inline DailyGrid interpolate_gaps(const DailyGrid& grid, std::size_t max_fill = 20) {
  DailyGrid out = grid;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
    if (!grid.mask[i]) continue;
    if (prev && i - *prev > 1) {
      const std::size_t a = *prev;
      const std::size_t run = i - a - 1;
      if (run <= max_fill) {
        const double span = static_cast<double>(i - a);
        for (std::size_t j = a + 1; j < i; ++j) {
          const double w = static_cast<double>(j - a) / span;
          for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const double lo = grid.slots[a][f];
            const double hi = grid.slots[i][f];
            out.slots[j][f] = lo + (hi - lo) * w;
          }
          out.mask[j] = true;
        }
      }
    }
    prev = i;
  }
  return out;
}

inline bool within_missing_limit(const DailyGrid& grid, double max_missing_fraction = 0.30) {
  return grid.missing_fraction() <= max_missing_fraction;
}

/// Per-feature extrema over every present cell.
inline NormalizationStats compute_global_stats(std::span<const DailyGrid> days) {
  NormalizationStats s;
  std::array<bool, kFeatureCount> seen{};
  for (const auto& g : days) {
    for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
      if (!g.mask[i]) continue;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const double v = g.slots[i][f];
        if (!seen[f]) {
          s.min[f] = s.max[f] = v;
          seen[f] = true;
        } else {
          s.min[f] = std::min(s.min[f], v);
          s.max[f] = std::max(s.max[f], v);
        }
      }
    }
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!seen[f]) throw DataError(std::string("no present values for feature ") + kFeatureNames[f]);
    if (!(s.max[f] > s.min[f])) {
      throw DataError(std::string("degenerate normalization range for feature ") + kFeatureNames[f]);
    }
  }
  return s;
}

inline void validate(const NormalizationStats& s) {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!std::isfinite(s.min[f]) || !std::isfinite(s.max[f]) || !(s.max[f] > s.min[f])) {
      throw DataError(std::string("invalid normalization range for feature ") + kFeatureNames[f]);
    }
  }
}

/// Min-max scaling of present cells (clamped into [0, 1]); missing cells become -1.
inline NormalizedDay normalize_day(const DailyGrid& grid, const NormalizationStats& stats,
                                   double max_missing_fraction = 0.30) {
  if (!within_missing_limit(grid, max_missing_fraction)) {
    throw DataError("day " + format_day(grid.day) + " of MMSI " + std::to_string(grid.mmsi) +
                    " exceeds the missing-value limit");
  }
  NormalizedDay out;
  out.mmsi = grid.mmsi;
  out.day = grid.day;
  for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      double& cell = out.matrix[i * kFeatureCount + f];
      if (!grid.mask[i]) {
        cell = kMissingSentinel;
        continue;
      }
      double v = (grid.slots[i][f] - stats.min[f]) / (stats.max[f] - stats.min[f]);
      if (v < 0.0 || v > 1.0) {
        ++out.clamped_cells;
        v = std::clamp(v, 0.0, 1.0);
      }
      cell = v;
    }
  }
  return out;
}

/// Inverse of the min-max scaling; the -1 sentinel passes through unchanged.
inline double denormalize(double value, Feature feature, const NormalizationStats& stats) {
  if (value == kMissingSentinel) return value;
  const auto f = static_cast<std::size_t>(feature);
  return stats.min[f] + value * (stats.max[f] - stats.min[f]);
}

// ---------------------------------------------------------------------------
// Stats file: eight key=value lines.

inline void write_stats(std::ostream& os, const NormalizationStats& s) {
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    os << kFeatureNames[f] << "_min=" << format_double(s.min[f]) << '\n';
    os << kFeatureNames[f] << "_max=" << format_double(s.max[f]) << '\n';
  }
}

inline NormalizationStats read_stats(std::istream& is) {
  std::map<std::string, double> kv;
  std::string line;
  while (std::getline(is, line)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw DataError("malformed stats line: " + std::string(t));
    auto v = detail::parse_finite(t.substr(eq + 1));
    if (!v) throw DataError("malformed stats value: " + std::string(t));
    kv[std::string(detail::trim(t.substr(0, eq)))] = *v;
  }
  NormalizationStats s;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const std::string lo = std::string(kFeatureNames[f]) + "_min";
    const std::string hi = std::string(kFeatureNames[f]) + "_max";
    if (!kv.contains(lo) || !kv.contains(hi)) throw DataError("stats file lacks " + lo + "/" + hi);
    s.min[f] = kv[lo];
    s.max[f] = kv[hi];
  }
  validate(s);
  return s;
}

inline NormalizationStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("normalization stats not found: " + path.string());
  return read_stats(in);
}

inline void save_stats(const std::filesystem::path& path, const NormalizationStats& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_stats(out, s);
}

// ---------------------------------------------------------------------------
// Whole-corpus driver

struct PreprocessConfig {
  std::chrono::seconds tolerance{60};
  std::size_t min_entries = 20;
  std::size_t max_fill = 20;
  double max_missing_fraction = 0.30;
};

struct PreprocessTally {
  std::size_t days_considered = 0;
  std::size_t dropped_sparse = 0;
  std::size_t dropped_missing = 0;
  std::size_t kept = 0;
  std::size_t clamped_cells = 0;
  std::array<std::size_t, kSlotsPerDay + 1> missing_slots_histogram{};  // after interpolation
};

/// Resample, drop sparse days, interpolate, then apply the missing-fraction rule.
/// Output is ordered by MMSI then day.
inline std::vector<DailyGrid> build_daily_grids(std::span<const VesselTrack> tracks,
                                                const PreprocessConfig& cfg,
                                                PreprocessTally& tally) {
  std::vector<DailyGrid> out;
  for (const auto& track : tracks) {
    for (UtcDay day : track_days(track)) {
      ++tally.days_considered;
      auto grid = drop_sparse_day(resample_daily(track, day, cfg.tolerance), cfg.min_entries);
      if (!grid) {
        ++tally.dropped_sparse;
        continue;
      }
      DailyGrid filled = interpolate_gaps(*grid, cfg.max_fill);
      ++tally.missing_slots_histogram[filled.missing_count()];
      if (!within_missing_limit(filled, cfg.max_missing_fraction)) {
        ++tally.dropped_missing;
        continue;
      }
      ++tally.kept;
      out.push_back(filled);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const DailyGrid& a, const DailyGrid& b) {
    return a.mmsi != b.mmsi ? a.mmsi < b.mmsi : a.day < b.day;
  });
  return out;
}

inline std::vector<NormalizedDay> normalize_all(std::span<const DailyGrid> grids,
                                                const NormalizationStats& stats,
                                                const PreprocessConfig& cfg,
                                                PreprocessTally* tally = nullptr) {
  std::vector<NormalizedDay> out;
  out.reserve(grids.size());
  for (const auto& g : grids) {
    out.push_back(normalize_day(g, stats, cfg.max_missing_fraction));
    if (tally) tally->clamped_cells += out.back().clamped_cells;
  }
  return out;
}

}  // namespace aisguard
