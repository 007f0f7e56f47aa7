#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/log.hpp"
#include "seatrade/parallel.hpp"
#include "seatrade/raster.hpp"

namespace seatrade::rgrid {

namespace fs = std::filesystem;

inline constexpr std::array<char, 4> kMagic = {'R', 'G', 'R', 'D'};
inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::array<const char*, 3> kBands = {"vv", "vh", "ntl"};

namespace detail {

inline std::uint32_t load_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

inline void store_u32_le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

}  // namespace detail

/// Decodes an RGRID byte buffer: "RGRD", u32 width, u32 height, f32 pixels, all little-endian.
inline raster::RasterGrid decode(const std::vector<unsigned char>& bytes, Date timestamp = {}) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    throw DataError("bad RGRID magic");
  std::uint32_t width = detail::load_u32_le(bytes.data() + 4);
  std::uint32_t height = detail::load_u32_le(bytes.data() + 8);
  std::uint64_t n = std::uint64_t{width} * height;
  if (width == 0 || height == 0) throw DataError("RGRID dimensions must be positive");
  if (bytes.size() != kHeaderBytes + 4 * n)
    throw DataError("RGRID payload is " + std::to_string(bytes.size() - kHeaderBytes) +
                    " bytes, expected " + std::to_string(4 * n));
  std::vector<double> values(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t bits = detail::load_u32_le(bytes.data() + kHeaderBytes + 4 * i);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return raster::RasterGrid(width, height, std::move(values), {}, timestamp);
}

/// Encodes a grid; masked pixels become NaN and values are narrowed to f32.
inline std::vector<unsigned char> encode(const raster::RasterGrid& grid) {
  std::vector<unsigned char> bytes(kHeaderBytes + 4 * grid.size());
  std::memcpy(bytes.data(), kMagic.data(), 4);
  detail::store_u32_le(bytes.data() + 4, static_cast<std::uint32_t>(grid.width()));
  detail::store_u32_le(bytes.data() + 8, static_cast<std::uint32_t>(grid.height()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    float v = grid.masked(i) ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(grid.value(i));
    detail::store_u32_le(bytes.data() + kHeaderBytes + 4 * i, std::bit_cast<std::uint32_t>(v));
  }
  return bytes;
}

inline raster::RasterGrid read_file(const fs::path& path, Date timestamp = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes, timestamp);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_file(const fs::path& path, const raster::RasterGrid& grid) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  auto bytes = encode(grid);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Path of one acquisition under a raster root: <aoi>/<band>/<YYYY-MM-DD>.rgrd
inline fs::path grid_path(const fs::path& root, const std::string& aoi_id, const std::string& band, Date date) {
  return root / aoi_id / band / (date.str() + ".rgrd");
}

/// One line of the features CSV.
struct FeatureRow {
  std::string aoi_id;
  YearMonth year_month;
  raster::SatFeatures features;
};

inline const std::vector<std::string>& feature_csv_header() {
  static const std::vector<std::string> header = {
      "aoi_id",  "year_month", "sar_diff_median", "vh_median_mean", "ntl_mean",  "ntl_max",
      "ntl_std", "lit_area_ratio", "n_obs_vv",    "n_obs_vh",       "n_obs_ntl"};
  return header;
}

inline void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  csv::write_record(out, feature_csv_header());
  for (const auto& r : rows) {
    const auto& f = r.features;
    csv::write_record(out, {r.aoi_id, r.year_month.str(), csv::format_optional(f.sar_diff_median),
                            csv::format_optional(f.vh_median_mean), csv::format_optional(f.ntl_mean),
                            csv::format_optional(f.ntl_max), csv::format_optional(f.ntl_std),
                            csv::format_optional(f.lit_area_ratio), std::to_string(f.n_obs_vv),
                            std::to_string(f.n_obs_vh), std::to_string(f.n_obs_ntl)});
  }
}

inline std::vector<FeatureRow> read_features_csv(const csv::Table& table) {
  std::vector<FeatureRow> rows;
  rows.reserve(table.size());
  auto count = [](const std::string& s) {
    return s.empty() ? std::size_t{0} : static_cast<std::size_t>(csv::parse_number(s));
  };
  for (std::size_t i = 0; i < table.size(); ++i) {
    FeatureRow r;
    r.aoi_id = table.at(i, "aoi_id");
    r.year_month = YearMonth::parse(table.at(i, "year_month"));
    auto& f = r.features;
    f.sar_diff_median = csv::parse_optional_number(table.at(i, "sar_diff_median"));
    f.vh_median_mean = csv::parse_optional_number(table.at(i, "vh_median_mean"));
    f.ntl_mean = csv::parse_optional_number(table.at(i, "ntl_mean"));
    f.ntl_max = csv::parse_optional_number(table.at(i, "ntl_max"));
    f.ntl_std = csv::parse_optional_number(table.at(i, "ntl_std"));
    f.lit_area_ratio = csv::parse_optional_number(table.at(i, "lit_area_ratio"));
    if (table.has("n_obs_vv")) f.n_obs_vv = count(table.at(i, "n_obs_vv"));
    if (table.has("n_obs_vh")) f.n_obs_vh = count(table.at(i, "n_obs_vh"));
    if (table.has("n_obs_ntl")) f.n_obs_ntl = count(table.at(i, "n_obs_ntl"));
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ExtractStats {
  std::size_t files_read = 0;
  std::size_t files_skipped = 0;
};

/// Walks <root>/<aoi>/<band>/<date>.rgrd, groups grids by AOI and month, and
/// reduces each group to one feature row. Unreadable files are skipped with a
/// warning. Rows come out sorted by (aoi_id, year_month).
inline std::vector<FeatureRow> extract(const fs::path& root, const raster::FeatureOptions& options = {},
                                       std::size_t jobs = 1, ExtractStats* stats = nullptr) {
  if (!fs::is_directory(root)) throw DataError("raster root is not a directory: " + root.string());

  using Key = std::pair<std::string, YearMonth>;
  std::map<Key, std::array<std::vector<raster::RasterGrid>, 3>> groups;
  ExtractStats local;

  std::vector<fs::path> aois;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) aois.push_back(entry.path());
  std::sort(aois.begin(), aois.end());

  for (const auto& aoi_dir : aois) {
    std::string aoi_id = aoi_dir.filename().string();
    for (std::size_t b = 0; b < kBands.size(); ++b) {
      fs::path band_dir = aoi_dir / kBands[b];
      if (!fs::is_directory(band_dir)) continue;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(band_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".rgrd") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        try {
          Date date = Date::parse(file.stem().string());
          auto grid = read_file(file, date);
          groups[{aoi_id, date.year_month()}][b].push_back(std::move(grid));
          ++local.files_read;
        } catch (const DataError& e) {
          log().warn("skipping {}: {}", file.string(), e.what());
          ++local.files_skipped;
        }
      }
    }
  }

  std::vector<std::pair<Key, std::array<std::vector<raster::RasterGrid>, 3>>> work(
      std::make_move_iterator(groups.begin()), std::make_move_iterator(groups.end()));
  std::vector<FeatureRow> rows(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    auto& [key, bands] = work[i];
    auto stack = [&](std::size_t b) -> raster::AoiMonthStack {
      try {
        return raster::AoiMonthStack(key.first, key.second, std::move(bands[b]));
      } catch (const DataError& e) {
        log().warn("{} {} {}: {}", key.first, key.second.str(), kBands[b], e.what());
        return raster::AoiMonthStack(key.first, key.second);
      }
    };
    auto vv = stack(0);
    auto vh = stack(1);
    auto ntl = stack(2);
    rows[i] = {key.first, key.second, raster::compute_features(vv, vh, ntl, options)};
  });

  if (stats) *stats = local;
  if (rows.empty()) throw DataError("no rasters found under " + root.string());
  return rows;
}

}  // namespace seatrade::rgrid
