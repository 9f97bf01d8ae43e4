// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "aisguard/errors.hpp"

namespace aisguard {

using Mmsi = std::uint32_t;
using UtcSeconds = std::chrono::sys_seconds;
using UtcDay = std::chrono::sys_days;

/// One decoded AIS position report.
struct AisRecord {
  Mmsi mmsi = 0;
  UtcSeconds timestamp{};
  double lat = 0.0;
  double lon = 0.0;
  double sog = 0.0;
  double cog = 0.0;
  std::optional<double> length;  // metres; empty when the export left it blank

  friend bool operator==(const AisRecord&, const AisRecord&) = default;
};

/// All records of one vessel, ascending by timestamp, no repeated timestamps.
struct VesselTrack {
  Mmsi mmsi = 0;
  std::vector<AisRecord> records;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::map<std::string, std::size_t> reject_reasons;
  std::size_t vessels_kept = 0;
  std::size_t vessels_dropped_by_length = 0;
  std::size_t records_dropped_by_length = 0;
  std::size_t duplicate_timestamps = 0;

  std::size_t rows_accepted() const { return rows_read - rows_rejected; }

  void reject(const std::string& reason) {
    ++rows_rejected;
    ++reject_reasons[reason];
  }

  /// Adds another file's parse tallies into this one.
  void merge(const IngestReport& other) {
    rows_read += other.rows_read;
    rows_rejected += other.rows_rejected;
    for (const auto& [k, v] : other.reject_reasons) reject_reasons[k] += v;
    vessels_kept += other.vessels_kept;
    vessels_dropped_by_length += other.vessels_dropped_by_length;
    records_dropped_by_length += other.records_dropped_by_length;
    duplicate_timestamps += other.duplicate_timestamps;
  }

  std::vector<std::pair<std::string, std::string>> entries() const {
    std::vector<std::pair<std::string, std::string>> out{
        {"rows_read", std::to_string(rows_read)},
        {"rows_accepted", std::to_string(rows_accepted())},
        {"rows_rejected", std::to_string(rows_rejected)},
        {"vessels_kept", std::to_string(vessels_kept)},
        {"vessels_dropped_by_length", std::to_string(vessels_dropped_by_length)},
        {"records_dropped_by_length", std::to_string(records_dropped_by_length)},
        {"duplicate_timestamps", std::to_string(duplicate_timestamps)},
    };
    for (const auto& [k, v] : reject_reasons) out.emplace_back("reject." + k, std::to_string(v));
    return out;
  }

  void write_key_value(std::ostream& os) const {
    for (const auto& [k, v] : entries()) os << k << '=' << v << '\n';
  }

  void write_csv(std::ostream& os) const {
    os << "key,value\n";
    for (const auto& [k, v] : entries()) os << k << ',' << v << '\n';
  }
};

/// Maps logical fields onto header names. Defaults follow MarineCadastre exports.
struct CsvSchema {
  std::string mmsi = "MMSI";
  std::string timestamp = "BaseDateTime";
  std::string lat = "LAT";
  std::string lon = "LON";
  std::string sog = "SOG";
  std::string cog = "COG";
  std::string length = "Length";
};

// ---------------------------------------------------------------------------
// Time helpers

/// Parses "YYYY-MM-DDTHH:MM:SS" (UTC). A space separator is also accepted.
inline std::optional<UtcSeconds> parse_timestamp(std::string_view s) {
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc{} && p == s.data() + pos + len;
  };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!num(0, 4, y) || !num(5, 2, mo) || !num(8, 2, d) || !num(11, 2, h) || !num(14, 2, mi) ||
      !num(17, 2, sec)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_timestamp(UtcSeconds t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

inline std::string format_day(UtcDay d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::optional<UtcDay> parse_day(std::string_view s) {
  if (s.size() != 10) return std::nullopt;
  std::string full(s);
  full += "T00:00:00";
  auto t = parse_timestamp(full);
  if (!t) return std::nullopt;
  return std::chrono::floor<std::chrono::days>(*t);
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

/// Reads one RFC-4180 record (quoted fields may span lines). Returns false at EOF.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_finite(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<Mmsi> parse_mmsi(std::string_view s) {
  s = trim(s);
  if (s.empty() || s.size() > 9) return std::nullopt;
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || v == 0) return std::nullopt;
  return v;
}

}  // namespace detail

/// Result of parsing one CSV source.
struct ParsedAis {
  std::vector<AisRecord> records;
  IngestReport report;
};

/// Parses a MarineCadastre-style CSV stream.
///
/// Every data row is either returned as a validated record or tallied in the
/// report under a reject reason. A required column missing from the header is
/// a ConfigError; an unreadable stream is an IoError.
inline ParsedAis parse_ais_csv(std::istream& in, const CsvSchema& schema = {}) {
  if (!in) throw IoError("AIS source is not readable");
  ParsedAis out;
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) {
    throw ConfigError("AIS source has no header row");
  }
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);

  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (detail::trim(fields[i]) == name) return i;
    }
    throw ConfigError("missing required column: " + name);
  };
  const std::size_t c_mmsi = column(schema.mmsi);
  const std::size_t c_time = column(schema.timestamp);
  const std::size_t c_lat = column(schema.lat);
  const std::size_t c_lon = column(schema.lon);
  const std::size_t c_sog = column(schema.sog);
  const std::size_t c_cog = column(schema.cog);
  const std::size_t c_len = column(schema.length);
  const std::size_t needed = std::max({c_mmsi, c_time, c_lat, c_lon, c_sog, c_cog, c_len}) + 1;

  IngestReport& rep = out.report;
  while (detail::read_csv_record(in, fields)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;  // blank line
    ++rep.rows_read;
    if (fields.size() < needed) {
      rep.reject("short_row");
      continue;
    }
    AisRecord r;
    auto mmsi = detail::parse_mmsi(fields[c_mmsi]);
    if (!mmsi) {
      rep.reject("bad_mmsi");
      continue;
    }
    r.mmsi = *mmsi;
    auto ts = parse_timestamp(detail::trim(fields[c_time]));
    if (!ts) {
      rep.reject("bad_timestamp");
      continue;
    }
    r.timestamp = *ts;
    auto lat = detail::parse_finite(fields[c_lat]);
    if (!lat) {
      rep.reject("bad_lat");
      continue;
    }
    if (*lat < -90.0 || *lat > 90.0) {
      rep.reject("lat_out_of_range");
      continue;
    }
    auto lon = detail::parse_finite(fields[c_lon]);
    if (!lon) {
      rep.reject("bad_lon");
      continue;
    }
    if (*lon < -180.0 || *lon > 180.0) {
      rep.reject("lon_out_of_range");
      continue;
    }
    auto sog = detail::parse_finite(fields[c_sog]);
    if (!sog) {
      rep.reject("bad_sog");
      continue;
    }
    if (*sog < 0.0) {
      rep.reject("sog_out_of_range");
      continue;
    }
    auto cog = detail::parse_finite(fields[c_cog]);
    if (!cog) {
      rep.reject("bad_cog");
      continue;
    }
    if (*cog < 0.0 || *cog > 360.0) {
      rep.reject("cog_out_of_range");
      continue;
    }
    r.lat = *lat;
    r.lon = *lon;
    r.sog = *sog;
    r.cog = *cog == 360.0 ? 0.0 : *cog;
    if (!detail::trim(fields[c_len]).empty()) {
      auto len = detail::parse_finite(fields[c_len]);
      if (!len) {
        rep.reject("bad_length");
        continue;
      }
      if (*len < 0.0) {
        rep.reject("length_out_of_range");
        continue;
      }
      r.length = *len;
    }
    out.records.push_back(r);
  }
  if (in.bad()) throw IoError("read failure while parsing AIS source");
  return out;
}

inline ParsedAis parse_ais_csv(std::string_view text, const CsvSchema& schema = {}) {
  std::istringstream in{std::string(text)};
  return parse_ais_csv(in, schema);
}

/// Keeps records whose vessel is strictly longer than min_length metres.
/// Records without a length are dropped.
inline std::vector<AisRecord> filter_by_length(std::span<const AisRecord> records,
                                               double min_length = 20.0) {
  std::vector<AisRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.length && *r.length > min_length) out.push_back(r);
  }
  return out;
}

inline std::set<Mmsi> distinct_mmsis(std::span<const AisRecord> records) {
  std::set<Mmsi> out;
  for (const auto& r : records) out.insert(r.mmsi);
  return out;
}

struct GroupedTracks {
  std::vector<VesselTrack> tracks;  // ascending by MMSI
  std::size_t duplicate_timestamps = 0;
};

/// Groups records per vessel and sorts each vessel chronologically.
///
/// Of several records sharing (MMSI, timestamp), the first in input order is
/// kept; the others are counted as duplicates.
inline GroupedTracks group_and_sort(std::span<const AisRecord> records) {
  std::vector<AisRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const AisRecord& a, const AisRecord& b) {
    if (a.mmsi != b.mmsi) return a.mmsi < b.mmsi;
    return a.timestamp < b.timestamp;
  });
  GroupedTracks out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const AisRecord& r = sorted[i];
    if (out.tracks.empty() || out.tracks.back().mmsi != r.mmsi) {
      out.tracks.push_back(VesselTrack{r.mmsi, {}});
    }
    auto& recs = out.tracks.back().records;
    if (!recs.empty() && recs.back().timestamp == r.timestamp) {
      ++out.duplicate_timestamps;
      continue;
    }
    recs.push_back(r);
  }
  return out;
}

/// Writes tracks in the default input schema so the file can be re-ingested.
inline void write_tracks_csv(std::ostream& os, std::span<const VesselTrack> tracks) {
  os << "MMSI,BaseDateTime,LAT,LON,SOG,COG,Length\n";
  for (const auto& t : tracks) {
    for (const auto& r : t.records) {
      os << r.mmsi << ',' << format_timestamp(r.timestamp) << ',' << format_double(r.lat) << ','
         << format_double(r.lon) << ',' << format_double(r.sog) << ',' << format_double(r.cog)
         << ',' << (r.length ? format_double(*r.length) : std::string{}) << '\n';
    }
  }
}

}  // namespace aisguard
