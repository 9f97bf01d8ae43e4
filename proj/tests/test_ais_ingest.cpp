// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "aisguard/ais_ingest.hpp"

namespace aisguard {
namespace {

using namespace std::chrono;

constexpr const char* kHeader = "MMSI,BaseDateTime,LAT,LON,SOG,COG,Heading,VesselName,Length\n";

UtcSeconds at(int y, unsigned mo, unsigned d, int h, int mi, int s) {
  return sys_days{year{y} / month{mo} / day{d}} + hours{h} + minutes{mi} + seconds{s};
}

TEST(Timestamp, ParsesBothSeparators) {
  EXPECT_EQ(parse_timestamp("2019-03-06T00:29:20"), at(2019, 3, 6, 0, 29, 20));
  EXPECT_EQ(parse_timestamp("2019-03-06 23:59:59"), at(2019, 3, 6, 23, 59, 59));
  EXPECT_EQ(parse_timestamp("2020-02-29T12:00:00"), at(2020, 2, 29, 12, 0, 0));
}

TEST(Timestamp, RejectsMalformedInput) {
  for (const char* s : {"", "2019-03-06", "2019-13-01T00:00:00", "2019-02-30T00:00:00",
                        "2019-03-06T24:00:00", "2019-03-06T00:60:00", "2019/03/06T00:00:00",
                        "2019-03-06T00:00:0x", "2019-03-06T00:00:00Z"}) {
    EXPECT_FALSE(parse_timestamp(s).has_value()) << s;
  }
}

TEST(Timestamp, FormatRoundTrips) {
  const auto t = at(2019, 3, 6, 7, 5, 9);
  EXPECT_EQ(format_timestamp(t), "2019-03-06T07:05:09");
  EXPECT_EQ(parse_timestamp(format_timestamp(t)), t);
  EXPECT_EQ(format_day(floor<days>(t)), "2019-03-06");
  EXPECT_EQ(parse_day("2019-03-06"), floor<days>(t));
  EXPECT_FALSE(parse_day("2019-03-6").has_value());
}

TEST(CsvRecord, HandlesQuotesAndEmbeddedNewlines) {
  std::istringstream in("a,\"b,c\",\"he said \"\"hi\"\"\"\r\nx,\"multi\nline\",z\n");
  std::vector<std::string> f;
  ASSERT_TRUE(detail::read_csv_record(in, f));
  EXPECT_EQ(f, (std::vector<std::string>{"a", "b,c", "he said \"hi\""}));
  ASSERT_TRUE(detail::read_csv_record(in, f));
  EXPECT_EQ(f, (std::vector<std::string>{"x", "multi\nline", "z"}));
  EXPECT_FALSE(detail::read_csv_record(in, f));
}

TEST(Mmsi, AcceptsOneToNineDigits) {
  EXPECT_EQ(detail::parse_mmsi("366000001"), 366000001u);
  EXPECT_EQ(detail::parse_mmsi(" 7 "), 7u);
  EXPECT_FALSE(detail::parse_mmsi("0").has_value());
  EXPECT_FALSE(detail::parse_mmsi("1234567890").has_value());
  EXPECT_FALSE(detail::parse_mmsi("36600000a").has_value());
  EXPECT_FALSE(detail::parse_mmsi("-5").has_value());
  EXPECT_FALSE(detail::parse_mmsi("").has_value());
}

TEST(ParseAis, ReadsValidRowsAndIgnoresExtraColumns) {
  const std::string text = std::string(kHeader) +
                           "366000001,2019-03-06T00:00:10,30.5,-80.25,12.3,45.0,44,\"SEA, WITCH\",120\n"
                           "366000002,2019-03-06T00:30:00,31,-81,0,359.9,511,X,\n";
  const auto p = parse_ais_csv(text);
  ASSERT_EQ(p.records.size(), 2u);
  EXPECT_EQ(p.records[0], (AisRecord{366000001, at(2019, 3, 6, 0, 0, 10), 30.5, -80.25, 12.3, 45.0, 120.0}));
  EXPECT_EQ(p.records[1].length, std::nullopt);
  EXPECT_EQ(p.report.rows_read, 2u);
  EXPECT_EQ(p.report.rows_rejected, 0u);
}

TEST(ParseAis, TalliesEveryRejectReason) {
  const std::string text = std::string(kHeader) +
                           "1,2019-03-06T00:00:00,91,0,1,1,0,a,30\n"         // lat_out_of_range
                           "1,2019-03-06T00:00:00,0,-181,1,1,0,a,30\n"       // lon_out_of_range
                           "1,2019-03-06 25:00:00,0,0,1,1,0,a,30\n"          // bad_timestamp
                           "1,2019-03-06T00:00:00,0,0,-0.1,1,0,a,30\n"       // sog_out_of_range
                           "1,2019-03-06T00:00:00,0,0,1,400,0,a,30\n"        // cog_out_of_range
                           "1,2019-03-06T00:00:00,0,0,1,-1,0,a,30\n"         // cog_out_of_range
                           "abc,2019-03-06T00:00:00,0,0,1,1,0,a,30\n"        // bad_mmsi
                           "1,2019-03-06T00:00:00,north,0,1,1,0,a,30\n"      // bad_lat
                           "1,2019-03-06T00:00:00,0,nan,1,1,0,a,30\n"        // bad_lon
                           "1,2019-03-06T00:00:00,0,0,,1,0,a,30\n"           // bad_sog
                           "1,2019-03-06T00:00:00,0,0,1,x,0,a,30\n"          // bad_cog
                           "1,2019-03-06T00:00:00,0,0,1,1,0,a,long\n"        // bad_length
                           "1,2019-03-06T00:00:00,0,0,1,1,0,a,-3\n"          // length_out_of_range
                           "1,2019-03-06T00:00:00,0,0\n"                     // short_row
                           "\n"
                           "1,2019-03-06T00:00:00,-90,180,0,360,0,a,30\n";   // valid, COG 360 -> 0
  const auto p = parse_ais_csv(text);
  const auto& r = p.report;
  EXPECT_EQ(r.rows_read, 15u);
  EXPECT_EQ(r.rows_rejected, 14u);
  EXPECT_EQ(r.rows_accepted(), 1u);
  const std::map<std::string, std::size_t> want{
      {"bad_cog", 1},          {"bad_lat", 1},          {"bad_length", 1},       {"bad_lon", 1},
      {"bad_mmsi", 1},         {"bad_sog", 1},          {"bad_timestamp", 1},    {"cog_out_of_range", 2},
      {"lat_out_of_range", 1}, {"length_out_of_range", 1}, {"lon_out_of_range", 1}, {"short_row", 1},
      {"sog_out_of_range", 1}};
  EXPECT_EQ(r.reject_reasons, want);
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records[0].cog, 0.0);
}

TEST(ParseAis, HeaderProblems) {
  EXPECT_THROW(parse_ais_csv(std::string_view("MMSI,LAT,LON\n1,2,3\n")), ConfigError);
  EXPECT_THROW(parse_ais_csv(std::string_view("")), ConfigError);
  // A UTF-8 BOM in front of the first header name is tolerated.
  const auto p = parse_ais_csv(std::string("\xEF\xBB\xBF") + kHeader + "5,2019-03-06T00:00:00,1,2,3,4,0,a,25\n");
  EXPECT_EQ(p.records.size(), 1u);
}

TEST(ParseAis, CustomSchema) {
  CsvSchema s;
  s.mmsi = "id";
  s.timestamp = "time";
  s.length = "len_m";
  const auto p = parse_ais_csv(std::string_view("time,id,LAT,LON,SOG,COG,len_m\n2019-03-06T01:00:00,9,1,2,3,4,50\n"), s);
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records[0].mmsi, 9u);
  EXPECT_EQ(p.records[0].length, 50.0);
}

TEST(LengthFilter, StrictlyAboveThresholdAndKnown) {
  std::vector<AisRecord> recs(4);
  recs[0].length = 20.0;
  recs[1].length = 20.0000001;
  recs[2].length = std::nullopt;
  recs[3].length = 300.0;
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].mmsi = static_cast<Mmsi>(i + 1);
  const auto kept = filter_by_length(recs, 20.0);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].mmsi, 2u);
  EXPECT_EQ(kept[1].mmsi, 4u);
  EXPECT_EQ(distinct_mmsis(kept), (std::set<Mmsi>{2, 4}));
}

TEST(Grouping, SortsPerVesselAndKeepsFirstDuplicate) {
  std::vector<AisRecord> recs{
      {2, at(2019, 3, 6, 1, 0, 0), 1, 1, 1, 1, 30},
      {1, at(2019, 3, 6, 2, 0, 0), 2, 2, 2, 2, 30},
      {2, at(2019, 3, 6, 0, 0, 0), 3, 3, 3, 3, 30},
      {2, at(2019, 3, 6, 1, 0, 0), 9, 9, 9, 9, 30},  // duplicate, later in input
      {1, at(2019, 3, 6, 0, 30, 0), 4, 4, 4, 4, 30},
  };
  const auto g = group_and_sort(recs);
  EXPECT_EQ(g.duplicate_timestamps, 1u);
  ASSERT_EQ(g.tracks.size(), 2u);
  EXPECT_EQ(g.tracks[0].mmsi, 1u);
  EXPECT_EQ(g.tracks[0].records[0].lat, 4.0);
  EXPECT_EQ(g.tracks[0].records[1].lat, 2.0);
  ASSERT_EQ(g.tracks[1].records.size(), 2u);
  EXPECT_EQ(g.tracks[1].records[0].lat, 3.0);
  EXPECT_EQ(g.tracks[1].records[1].lat, 1.0);  // first of the duplicate pair
}

TEST(TracksCsv, RoundTripsThroughTheParser) {
  std::vector<AisRecord> recs{{7, at(2019, 3, 6, 0, 0, 1), 0.1, -170.123456789, 0.0, 359.5, 21.5},
                              {7, at(2019, 3, 6, 0, 30, 1), -45.5, 12.0, 102.3, 0.0, 21.5}};
  const auto g = group_and_sort(recs);
  std::ostringstream os;
  write_tracks_csv(os, g.tracks);
  const auto p = parse_ais_csv(os.str());
  EXPECT_EQ(p.records, recs);
}

TEST(Report, KeyValueAndMerge) {
  IngestReport a;
  a.rows_read = 10;
  a.reject("bad_lat");
  IngestReport b;
  b.rows_read = 5;
  b.reject("bad_lat");
  b.reject("short_row");
  a.merge(b);
  std::ostringstream os;
  a.write_key_value(os);
  EXPECT_NE(os.str().find("rows_read=15\n"), std::string::npos);
  EXPECT_NE(os.str().find("rows_accepted=12\n"), std::string::npos);
  EXPECT_NE(os.str().find("reject.bad_lat=2\n"), std::string::npos);
  EXPECT_NE(os.str().find("reject.short_row=1\n"), std::string::npos);
}

}  // namespace
}  // namespace aisguard
