#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "seatrade/rgrid.hpp"
#include "tempdir.hpp"

using namespace seatrade;
using raster::RasterGrid;

TEST(Rgrid, ByteLayoutIsLittleEndian) {
  RasterGrid g(2, 1, {1.0, std::nan("")});
  auto bytes = rgrid::encode(g);
  ASSERT_EQ(bytes.size(), 12u + 8u);
  EXPECT_EQ(std::memcmp(bytes.data(), "RGRD", 4), 0);
  EXPECT_EQ(bytes[4], 2);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[8], 1);
  // 1.0f == 0x3F800000
  EXPECT_EQ(bytes[12], 0x00);
  EXPECT_EQ(bytes[13], 0x00);
  EXPECT_EQ(bytes[14], 0x80);
  EXPECT_EQ(bytes[15], 0x3F);
}

TEST(Rgrid, RoundTripPreservesFloatValuesAndMask) {
  std::vector<double> v = {0.0, 0.25, 1e-3, 123.5, -2.0, 7.0};
  RasterGrid g(3, 2, v, {0, 0, 0, 0, 0, 1});
  auto back = rgrid::decode(rgrid::encode(g), Date{2022, 1, 5});
  EXPECT_EQ(back.width(), 3u);
  EXPECT_EQ(back.height(), 2u);
  EXPECT_EQ(back.timestamp(), (Date{2022, 1, 5}));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(back.value(i), static_cast<double>(static_cast<float>(v[i])));
  EXPECT_TRUE(back.masked(5));
}

TEST(Rgrid, RejectsBadMagicAndTruncation) {
  auto bytes = rgrid::encode(RasterGrid(1, 1, {1.0}));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(rgrid::decode(bad), DataError);
  bytes.pop_back();
  EXPECT_THROW(rgrid::decode(bytes), DataError);
  EXPECT_THROW(rgrid::decode({}), DataError);
}

TEST(Extract, EmptyDirectoryIsAnError) {
  TempDir dir;
  EXPECT_THROW(rgrid::extract(dir.path()), DataError);
  EXPECT_THROW(rgrid::extract(dir / "absent"), DataError);
}

TEST(Extract, CountsObservationsPerBand) {
  TempDir dir;
  for (int d : {2, 10, 20})
    rgrid::write_file(rgrid::grid_path(dir.path(), "aoi1", "vv", {2023, 3, d}),
                      RasterGrid(2, 2, {0.1, 0.2, 0.3, 0.4 * d}, {}, Date{2023, 3, d}));
  rgrid::ExtractStats stats;
  auto rows = rgrid::extract(dir.path(), {}, 1, &stats);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].aoi_id, "aoi1");
  EXPECT_EQ(rows[0].year_month, (YearMonth{2023, 3}));
  EXPECT_EQ(rows[0].features.n_obs_vv, 3u);
  EXPECT_EQ(rows[0].features.n_obs_vh, 0u);
  EXPECT_TRUE(rows[0].features.sar_diff_median.has_value());
  EXPECT_FALSE(rows[0].features.ntl_mean.has_value());
  EXPECT_EQ(stats.files_read, 3u);
}

TEST(Extract, CorruptFileIsSkipped) {
  TempDir dir;
  rgrid::write_file(rgrid::grid_path(dir.path(), "a", "ntl", {2023, 3, 1}), RasterGrid(1, 1, {2.0}));
  auto corrupt = rgrid::grid_path(dir.path(), "a", "ntl", {2023, 3, 2});
  std::ofstream(corrupt, std::ios::binary) << "JUNKJUNKJUNKJUNK";
  rgrid::ExtractStats stats;
  auto rows = rgrid::extract(dir.path(), {}, 1, &stats);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].features.n_obs_ntl, 1u);
  EXPECT_EQ(stats.files_skipped, 1u);
}

TEST(Extract, ResultIndependentOfJobs) {
  TempDir dir;
  auto paths = fixture::write(dir.path());
  auto serial = rgrid::extract(paths.rasters, {}, 1);
  auto parallel = rgrid::extract(paths.rasters, {}, 4);
  std::ostringstream a, b;
  rgrid::write_features_csv(a, serial);
  rgrid::write_features_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(serial.size(), fixture::ports().size() * fixture::kMonths);
}

TEST(FeaturesCsv, HeaderAndRoundTrip) {
  rgrid::FeatureRow r{"p1", {2024, 2}, {}};
  r.features.ntl_mean = 0.5;
  r.features.lit_area_ratio = 0.25;
  r.features.n_obs_ntl = 4;
  std::ostringstream out;
  rgrid::write_features_csv(out, {r});
  EXPECT_EQ(out.str(),
            "aoi_id,year_month,sar_diff_median,vh_median_mean,ntl_mean,ntl_max,ntl_std,lit_area_ratio,"
            "n_obs_vv,n_obs_vh,n_obs_ntl\n"
            "p1,2024-02,,,0.5,,,0.25,0,0,4\n");
  std::istringstream in(out.str());
  auto back = rgrid::read_features_csv(csv::Table::read(in));
  std::ostringstream again;
  rgrid::write_features_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
}
