// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aisguard/detect.hpp"
#include "aisguard/errors.hpp"
#include "aisguard/preprocess.hpp"
#include "aisguard/sequence.hpp"

namespace aisguard {

/// RFC 7946 FeatureCollection with one LineString per selected vessel-day.
///
/// Positions are denormalized [lon, lat] pairs in slot order; slots holding the
/// missing sentinel are left out of the geometry. Properties carry mmsi, day,
/// rmse (null when no score is known) and the number of positions.
inline nlohmann::json export_geojson(const SequenceSet& set, const NormalizationStats& stats,
                                     std::span<const ScoreRecord> scores,
                                     std::span<const DayId> selection) {
  std::map<DayId, std::size_t> row_of;
  for (std::size_t i = 0; i < set.size(); ++i) row_of.emplace(set.ids[i], i);
  std::map<DayId, double> rmse_of;
  for (const auto& s : scores) rmse_of.emplace(DayId{s.mmsi, s.day}, s.rmse);

  nlohmann::json features = nlohmann::json::array();
  for (const auto& id : selection) {
    auto it = row_of.find(id);
    if (it == row_of.end()) {
      throw DataError("selected vessel-day not in the sequence set: MMSI " + std::to_string(id.mmsi) +
                      " on " + format_day(id.day));
    }
    const auto row = set.row(it->second);
    nlohmann::json coords = nlohmann::json::array();
    for (std::size_t slot = 0; slot < kSlotsPerDay; ++slot) {
      const double lat = row[slot * kFeatureCount + static_cast<std::size_t>(Feature::kLat)];
      const double lon = row[slot * kFeatureCount + static_cast<std::size_t>(Feature::kLon)];
      if (lat == kMissingSentinel || lon == kMissingSentinel) continue;
      coords.push_back({denormalize(lon, Feature::kLon, stats), denormalize(lat, Feature::kLat, stats)});
    }
    nlohmann::json props;
    props["mmsi"] = id.mmsi;
    props["day"] = format_day(id.day);
    auto r = rmse_of.find(id);
    props["rmse"] = r == rmse_of.end() ? nlohmann::json(nullptr) : nlohmann::json(r->second);
    props["positions"] = coords.size();
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                        {"properties", std::move(props)}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace aisguard
