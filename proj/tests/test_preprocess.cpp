// Copyright 2026 The aisguard Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "aisguard/preprocess.hpp"

namespace aisguard {
namespace {

using namespace std::chrono;

const UtcDay kDay = sys_days{year{2019} / 3 / 6};

AisRecord rec(Mmsi m, UtcSeconds t, double lat, double lon = 0.0, double sog = 0.0, double cog = 0.0) {
  return AisRecord{m, t, lat, lon, sog, cog, 100.0};
}

UtcSeconds slot_time(std::size_t slot, seconds offset = seconds{0}) {
  return UtcSeconds{kDay} + kSlotSpacing * static_cast<long>(slot) + offset;
}

/// Grid with the given slots present; feature f at slot i holds i + 100 f.
DailyGrid grid_with(const std::vector<std::size_t>& present) {
  DailyGrid g;
  g.mmsi = 1;
  g.day = kDay;
  for (std::size_t i : present) {
    g.mask[i] = true;
    for (std::size_t f = 0; f < kFeatureCount; ++f) g.slots[i][f] = static_cast<double>(i + 100 * f);
  }
  return g;
}

std::vector<std::size_t> all_but(std::initializer_list<std::pair<std::size_t, std::size_t>> gaps) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
    bool hole = false;
    for (auto [lo, hi] : gaps) hole |= (i >= lo && i < hi);
    if (!hole) out.push_back(i);
  }
  return out;
}

TEST(Resample, PrefersNearestRecordWithinTolerance) {
  VesselTrack t{1, {rec(1, slot_time(0, 29min + 20s), 1.0), rec(1, slot_time(1, 10s), 2.0)}};
  const auto g = resample_daily(t, kDay);
  EXPECT_FALSE(g.mask[0]);
  ASSERT_TRUE(g.mask[1]);
  EXPECT_EQ(g.slots[1][0], 2.0);
  EXPECT_EQ(g.present_count(), 1u);
}

TEST(Resample, TiesGoToTheEarlierRecord) {
  VesselTrack t{1, {rec(1, slot_time(3, -30s), 1.0), rec(1, slot_time(3, 30s), 2.0)}};
  const auto g = resample_daily(t, kDay);
  ASSERT_TRUE(g.mask[3]);
  EXPECT_EQ(g.slots[3][0], 1.0);
}

TEST(Resample, ToleranceBoundaryIsInclusive) {
  VesselTrack t{1, {rec(1, slot_time(2, -60s), 1.0), rec(1, slot_time(4, 61s), 2.0)}};
  const auto g = resample_daily(t, kDay);
  EXPECT_TRUE(g.mask[2]);
  EXPECT_FALSE(g.mask[4]);
}

TEST(Resample, IgnoresOtherDaysAndCopiesAllFeatures) {
  VesselTrack t{1,
                {rec(1, UtcSeconds{kDay} - 10s, 9.0), rec(1, slot_time(0, 5s), 1.5, -70.25, 11.0, 271.0),
                 rec(1, UtcSeconds{kDay + days{1}} + 5s, 9.0)}};
  const auto g = resample_daily(t, kDay);
  EXPECT_EQ(g.present_count(), 1u);
  EXPECT_EQ(g.slots[0], (FeatureTuple{1.5, -70.25, 11.0, 271.0}));
  EXPECT_EQ(track_days(t), (std::vector<UtcDay>{kDay - days{1}, kDay, kDay + days{1}}));
}

TEST(Resample, ARecordFillsAtMostOneSlot) {
  VesselTrack t{1, {rec(1, slot_time(5, 15min), 1.0)}};
  const auto g = resample_daily(t, kDay, 15min);
  EXPECT_TRUE(g.mask[5]);  // tie between slots 5 and 6 at equal distance; slot 5 comes first
  EXPECT_FALSE(g.mask[6]);
}

TEST(SparseDays, ExactlyMinEntriesIsKept) {
  std::vector<std::size_t> twenty, nineteen;
  for (std::size_t i = 0; i < 20; ++i) twenty.push_back(i * 2);
  for (std::size_t i = 0; i < 19; ++i) nineteen.push_back(i * 2);
  EXPECT_TRUE(drop_sparse_day(grid_with(twenty), 20).has_value());
  EXPECT_FALSE(drop_sparse_day(grid_with(nineteen), 20).has_value());
}

TEST(Interpolate, InteriorGapIsLinearInSlotIndex) {
  // Slots 10..14 missing between known slots 9 and 15, non-linear endpoints.
  auto g = grid_with(all_but({{10, 15}}));
  g.slots[9] = {30.0, -80.0, 10.0, 90.0};
  g.slots[15] = {36.0, -74.0, 16.0, 96.0};
  const auto out = interpolate_gaps(g, 20);
  for (std::size_t j = 10; j < 15; ++j) {
    ASSERT_TRUE(out.mask[j]);
    const double w = static_cast<double>(j - 9) / 6.0;
    EXPECT_DOUBLE_EQ(out.slots[j][0], 30.0 + 6.0 * w);
    EXPECT_DOUBLE_EQ(out.slots[j][1], -80.0 + 6.0 * w);
    EXPECT_DOUBLE_EQ(out.slots[j][3], 90.0 + 6.0 * w);
  }
  EXPECT_EQ(out.missing_count(), 0u);
}

TEST(Interpolate, RunLimitAppliesPerMaximalRun) {
  const auto twenty = interpolate_gaps(grid_with(all_but({{5, 25}})), 20);
  EXPECT_EQ(twenty.missing_count(), 0u);
  const auto twenty_one = interpolate_gaps(grid_with(all_but({{5, 26}})), 20);
  EXPECT_EQ(twenty_one.missing_count(), 21u);  // the whole run stays missing
  // Two separate runs of 15 are each short enough.
  const auto two = interpolate_gaps(grid_with(all_but({{2, 17}, {20, 35}})), 20);
  EXPECT_EQ(two.missing_count(), 0u);
}

TEST(Interpolate, NeverExtrapolatesAtTheEdges) {
  const auto out = interpolate_gaps(grid_with(all_but({{0, 4}, {20, 22}, {45, 48}})), 20);
  EXPECT_EQ(out.missing_count(), 7u);
  EXPECT_FALSE(out.mask[0]);
  EXPECT_FALSE(out.mask[47]);
  EXPECT_TRUE(out.mask[21]);
  EXPECT_DOUBLE_EQ(out.slots[21][0], 21.0);
}

TEST(MissingRule, FourteenPassFifteenFail) {
  EXPECT_TRUE(within_missing_limit(grid_with(all_but({{0, 14}})), 0.30));
  EXPECT_FALSE(within_missing_limit(grid_with(all_but({{0, 15}})), 0.30));
}

TEST(Normalize, MapsRangeToUnitIntervalAndMissingToSentinel) {
  auto g = grid_with(all_but({{0, 3}}));
  const NormalizationStats s{{3.0, 103.0, 203.0, 303.0}, {47.0, 147.0, 247.0, 347.0}};
  const auto n = normalize_day(g, s);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    EXPECT_EQ(n.at(0, static_cast<Feature>(f)), -1.0);
    EXPECT_EQ(n.at(3, static_cast<Feature>(f)), 0.0);
    EXPECT_EQ(n.at(47, static_cast<Feature>(f)), 1.0);
    EXPECT_DOUBLE_EQ(n.at(25, static_cast<Feature>(f)), 22.0 / 44.0);
  }
  EXPECT_EQ(n.clamped_cells, 0u);
}

TEST(Normalize, RoundTripsWithinTolerance) {
  auto g = grid_with(all_but({}));
  for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
    g.slots[i] = {25.0 + 0.37 * static_cast<double>(i), -120.0 + 1.1 * static_cast<double>(i),
                  0.3 * static_cast<double>(i), 7.5 * static_cast<double>(i)};
  }
  const std::vector<DailyGrid> days{g};
  const auto s = compute_global_stats(days);
  const auto n = normalize_day(g, s);
  for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      EXPECT_NEAR(denormalize(n.at(i, static_cast<Feature>(f)), static_cast<Feature>(f), s), g.slots[i][f], 1e-9);
    }
  }
  EXPECT_EQ(denormalize(-1.0, Feature::kLat, s), -1.0);
}

TEST(Normalize, ClampsAndCountsOutOfRangeCells) {
  auto g = grid_with(all_but({}));
  const NormalizationStats s{{5.0, 100.0, 200.0, 300.0}, {40.0, 147.0, 247.0, 347.0}};
  const auto n = normalize_day(g, s);
  EXPECT_EQ(n.clamped_cells, 5u + 7u);
  EXPECT_EQ(n.at(0, Feature::kLat), 0.0);
  EXPECT_EQ(n.at(47, Feature::kLat), 1.0);
}

TEST(Normalize, RefusesDaysOverTheMissingLimit) {
  const NormalizationStats s{{0, 0, 0, 0}, {1, 1, 1, 1}};
  EXPECT_THROW(normalize_day(grid_with(all_but({{0, 15}})), s), DataError);
}

TEST(Stats, DegenerateOrEmptyFeatureIsReported) {
  auto g = grid_with({1, 2});
  g.slots[2][static_cast<std::size_t>(Feature::kSog)] = g.slots[1][static_cast<std::size_t>(Feature::kSog)];
  const std::vector<DailyGrid> one{g};
  try {
    compute_global_stats(one);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sog"), std::string::npos);
  }
  EXPECT_THROW(compute_global_stats(std::vector<DailyGrid>{}), DataError);
}

TEST(Stats, FileRoundTripAndMissingFile) {
  const NormalizationStats s{{24.5, -125.0, 0.0, 0.0}, {45.123456789012345, -70.0, 30.2, 359.9}};
  std::stringstream buf;
  write_stats(buf, s);
  EXPECT_EQ(buf.str().substr(0, 12), "lat_min=24.5");
  EXPECT_EQ(read_stats(buf), s);

  std::stringstream partial("lat_min=0\nlat_max=1\n");
  EXPECT_THROW(read_stats(partial), DataError);
  EXPECT_THROW(load_stats(std::filesystem::temp_directory_path() / "aisguard_no_such_stats.txt"), DataError);
}

TEST(Driver, TalliesEachDropReason) {
  VesselTrack t{1, {}};
  // Day 1: 40 slots present then an 8-slot trailing gap -> kept.
  for (std::size_t i = 0; i < 40; ++i) t.records.push_back(rec(1, slot_time(i, 3s), static_cast<double>(i)));
  // Day 2: 19 slots -> sparse.
  for (std::size_t i = 0; i < 19; ++i) t.records.push_back(rec(1, slot_time(i) + days{1}, 1.0));
  // Day 3: 20 slots with a 28-slot trailing gap -> too many missing.
  for (std::size_t i = 0; i < 20; ++i) t.records.push_back(rec(1, slot_time(i) + days{2}, 1.0));
  const std::vector<VesselTrack> tracks{t};
  PreprocessTally tally;
  const auto grids = build_daily_grids(tracks, {}, tally);
  EXPECT_EQ(tally.days_considered, 3u);
  EXPECT_EQ(tally.kept, 1u);
  EXPECT_EQ(tally.dropped_sparse, 1u);
  EXPECT_EQ(tally.dropped_missing, 1u);
  EXPECT_EQ(tally.missing_slots_histogram[8], 1u);
  EXPECT_EQ(tally.missing_slots_histogram[28], 1u);
  ASSERT_EQ(grids.size(), 1u);
  EXPECT_EQ(grids[0].day, kDay);
}

}  // namespace
}  // namespace aisguard
