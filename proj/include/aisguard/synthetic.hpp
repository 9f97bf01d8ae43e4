// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aisguard/ais_ingest.hpp"
#include "aisguard/errors.hpp"
#include "aisguard/preprocess.hpp"
#include "aisguard/rng.hpp"
#include "aisguard/sequence.hpp"

namespace aisguard {

/// Parameters of a synthetic AIS corpus of smooth routes with injected
/// teleport anomalies: for a few consecutive mid-day slots the reported
/// position jumps by at least min_jump_deg in both latitude and longitude.
struct SyntheticSpec {
  std::size_t vessels = 100;
  std::size_t days = 20;
  double anomaly_fraction = 0.02;
  double min_jump_deg = 5.0;
  double max_jump_deg = 8.0;
  std::uint64_t seed = 7;
  UtcDay start_day = std::chrono::sys_days{std::chrono::year{2019} / 3 / 6};
  int timestamp_jitter_s = 20;      // on-grid reports land within this many seconds
  double slot_dropout = 0.05;       // probability an on-grid report is absent
  double offgrid_probability = 0.5; // extra report 12 minutes after a slot
  // Box the daily starting points are drawn from; about one UTM zone wide.
  double lat_min = 28.0, lat_max = 34.0;
  double lon_min = -81.0, lon_max = -75.0;
};

struct SyntheticCorpus {
  std::vector<AisRecord> records;  // per day in shuffled order, days ascending
  std::set<DayId> anomalies;
};

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  using namespace std::chrono;
  Rng rng(spec.seed);
  const std::size_t total = spec.vessels * spec.days;
  const auto n_anom = static_cast<std::size_t>(std::llround(static_cast<double>(total) * spec.anomaly_fraction));
  std::vector<std::size_t> cells(total);
  for (std::size_t i = 0; i < total; ++i) cells[i] = i;
  rng.shuffle(std::span(cells));
  std::set<std::size_t> anomalous(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(n_anom));

  struct Vessel {
    Mmsi mmsi;
    double lat0, lon0, heading0, speed0, length;
  };
  std::vector<Vessel> fleet;
  for (std::size_t v = 0; v < spec.vessels; ++v) {
    Vessel ves;
    ves.mmsi = static_cast<Mmsi>(366000000 + 1000 * (v + 1) + rng.below(1000));
    ves.lat0 = rng.uniform(spec.lat_min, spec.lat_max);
    ves.lon0 = rng.uniform(spec.lon_min, spec.lon_max);
    ves.heading0 = rng.uniform() < 0.5 ? rng.uniform(40.0, 140.0) : rng.uniform(220.0, 320.0);
    ves.speed0 = rng.uniform(8.0, 18.0);
    ves.length = rng.uniform(30.0, 300.0);
    fleet.push_back(ves);
  }

  SyntheticCorpus out;
  for (std::size_t d = 0; d < spec.days; ++d) {
    const UtcDay day = spec.start_day + days{static_cast<int>(d)};
    std::vector<AisRecord> day_records;
    for (std::size_t v = 0; v < spec.vessels; ++v) {
      const Vessel& ves = fleet[v];
      const bool anomaly = anomalous.contains(d * spec.vessels + v);
      double lat = ves.lat0 + rng.uniform(-0.5, 0.5);
      double lon = ves.lon0 + rng.uniform(-0.5, 0.5);
      const double heading = ves.heading0 + rng.uniform(-10.0, 10.0);
      const double turn_amp = rng.uniform(5.0, 25.0);
      const double turn_period = rng.uniform(12.0, 48.0);
      const double turn_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double speed_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      std::size_t jump_from = 0, jump_to = 0;
      double jump_lat = 0.0, jump_lon = 0.0;
      if (anomaly) {
        jump_from = 16 + rng.below(13);
        jump_to = jump_from + 4 + rng.below(7);
        jump_lat = rng.uniform(spec.min_jump_deg, spec.max_jump_deg) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        jump_lon = rng.uniform(spec.min_jump_deg, spec.max_jump_deg) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        out.anomalies.insert(DayId{ves.mmsi, day});
      }
      for (std::size_t slot = 0; slot < kSlotsPerDay; ++slot) {
        const double ts = static_cast<double>(slot);
        const double hdg = heading + turn_amp * std::sin(2.0 * std::numbers::pi * ts / turn_period + turn_phase);
        const double sog = ves.speed0 + 1.5 * std::sin(2.0 * std::numbers::pi * ts / 24.0 + speed_phase);
        const bool jumped = anomaly && slot >= jump_from && slot < jump_to;
        auto emit = [&](seconds offset, double plat, double plon) {
          AisRecord r;
          r.mmsi = ves.mmsi;
          r.timestamp = UtcSeconds{day} + kSlotSpacing * static_cast<long>(slot) + offset;
          r.lat = plat + rng.uniform(-0.002, 0.002) + (jumped ? jump_lat : 0.0);
          r.lon = plon + rng.uniform(-0.002, 0.002) + (jumped ? jump_lon : 0.0);
          r.sog = std::max(0.0, sog + rng.uniform(-0.2, 0.2));
          r.cog = std::fmod(hdg + rng.uniform(-1.0, 1.0) + 360.0, 360.0);
          r.length = std::round(ves.length);
          day_records.push_back(r);
        };
        if (rng.uniform() >= spec.slot_dropout) {
          auto jitter = seconds{static_cast<long>(rng.below(2 * spec.timestamp_jitter_s + 1)) -
                                spec.timestamp_jitter_s};
          if (slot == 0 && jitter < seconds{0}) jitter = -jitter;  // stay inside the day
          emit(jitter, lat, lon);
        }
        // Advance half an hour along the current heading.
        const double nm = sog * 0.5;
        const double rad = hdg * std::numbers::pi / 180.0;
        const double next_lat = lat + nm * std::cos(rad) / 60.0;
        const double next_lon = lon + nm * std::sin(rad) / (60.0 * std::cos(lat * std::numbers::pi / 180.0));
        if (slot + 1 < kSlotsPerDay && rng.uniform() < spec.offgrid_probability) {
          const double w = 0.4;
          emit(minutes{12}, lat + w * (next_lat - lat), lon + w * (next_lon - lon));
        }
        lat = next_lat;
        lon = next_lon;
      }
    }
    rng.shuffle(std::span(day_records));
    out.records.insert(out.records.end(), day_records.begin(), day_records.end());
  }
  return out;
}

/// Writes one MarineCadastre-style CSV per day (AIS_YYYY_MM_DD.csv) plus
/// anomaly_labels.txt (CSV "mmsi,day") listing the injected vessel-days.
inline std::vector<std::filesystem::path> write_synthetic_csvs(const SyntheticCorpus& corpus,
                                                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  std::map<UtcDay, std::vector<const AisRecord*>> by_day;
  for (const auto& r : corpus.records) by_day[std::chrono::floor<std::chrono::days>(r.timestamp)].push_back(&r);
  for (const auto& [day, recs] : by_day) {
    std::string name = "AIS_" + format_day(day) + ".csv";
    std::replace(name.begin(), name.end(), '-', '_');
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "MMSI,BaseDateTime,LAT,LON,SOG,COG,Heading,VesselName,Length\n";
    for (const AisRecord* r : recs) {
      out << r->mmsi << ',' << format_timestamp(r->timestamp) << ',' << format_double(r->lat) << ','
          << format_double(r->lon) << ',' << format_double(r->sog) << ',' << format_double(r->cog)
          << ",511,\"SYNTH " << r->mmsi << "\"," << (r->length ? format_double(*r->length) : "") << '\n';
    }
    files.push_back(path);
  }
  std::ofstream labels(dir / "anomaly_labels.txt");
  labels << "mmsi,day\n";
  for (const auto& id : corpus.anomalies) labels << id.mmsi << ',' << format_day(id.day) << '\n';
  return files;
}

}  // namespace aisguard
