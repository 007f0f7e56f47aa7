#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seatrade/calendar.hpp"
#include "seatrade/error.hpp"
#include "seatrade/log.hpp"

namespace seatrade::raster {

/// Offset added before the log so that zero radiance maps to -80 dB.
inline constexpr double kDbEpsilon = 1e-8;
/// Default lit-pixel radiance threshold.
inline constexpr double kDefaultLitThreshold = 0.5;

/// Single-band image over one AOI at one timestamp. NaN values are always masked.
class RasterGrid {
public:
  RasterGrid(std::size_t width, std::size_t height, std::vector<double> values,
             std::vector<std::uint8_t> mask = {}, Date timestamp = {})
      : width_(width), height_(height), values_(std::move(values)), mask_(std::move(mask)),
        timestamp_(timestamp) {
    if (width_ == 0 || height_ == 0) throw DataError("raster dimensions must be positive");
    if (values_.size() != width_ * height_)
      throw DataError("raster has " + std::to_string(values_.size()) + " values, expected " +
                      std::to_string(width_ * height_));
    if (mask_.empty()) mask_.assign(values_.size(), 0);
    if (mask_.size() != values_.size()) throw DataError("raster mask size mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (std::isnan(values_[i])) mask_[i] = 1;
  }

  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] Date timestamp() const { return timestamp_; }
  [[nodiscard]] double value(std::size_t i) const { return values_[i]; }
  [[nodiscard]] bool masked(std::size_t i) const { return mask_[i] != 0; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const std::uint8_t> mask() const { return mask_; }

  [[nodiscard]] std::size_t unmasked_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{0}));
  }

  [[nodiscard]] bool same_shape(const RasterGrid& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  Date timestamp_;
};

/// Time-ordered grids of one AOI within one calendar month. May be empty.
class AoiMonthStack {
public:
  AoiMonthStack(std::string aoi_id, YearMonth year_month, std::vector<RasterGrid> grids = {})
      : aoi_id_(std::move(aoi_id)), year_month_(year_month), grids_(std::move(grids)) {
    for (std::size_t i = 0; i < grids_.size(); ++i) {
      if (grids_[i].timestamp().year_month() != year_month_)
        throw DataError(aoi_id_ + ": grid dated " + grids_[i].timestamp().str() + " outside " +
                        year_month_.str());
      if (i > 0 && !(grids_[i - 1].timestamp() < grids_[i].timestamp()))
        throw DataError(aoi_id_ + ": grids not strictly ordered by timestamp");
      if (!grids_[i].same_shape(grids_.front()))
        throw DataError(aoi_id_ + ": grids in a stack must share dimensions");
    }
  }

  [[nodiscard]] const std::string& aoi_id() const { return aoi_id_; }
  [[nodiscard]] YearMonth year_month() const { return year_month_; }
  [[nodiscard]] const std::vector<RasterGrid>& grids() const { return grids_; }
  [[nodiscard]] std::size_t size() const { return grids_.size(); }
  [[nodiscard]] bool empty() const { return grids_.empty(); }

private:
  std::string aoi_id_;
  YearMonth year_month_;
  std::vector<RasterGrid> grids_;
};

/// Monthly satellite features of one AOI. Missing features are nullopt, never zero.
struct SatFeatures {
  std::optional<double> sar_diff_median;
  std::optional<double> vh_median_mean;
  std::optional<double> ntl_mean;
  std::optional<double> ntl_max;
  std::optional<double> ntl_std;
  std::optional<double> lit_area_ratio;
  std::size_t n_obs_vv = 0;
  std::size_t n_obs_vh = 0;
  std::size_t n_obs_ntl = 0;

  [[nodiscard]] bool all_missing() const {
    return !sar_diff_median && !vh_median_mean && !ntl_mean && !ntl_max && !ntl_std && !lit_area_ratio;
  }
};

/// Median of a sample; an even count yields the mean of the two central values.
inline double median(std::vector<double> sample) {
  if (sample.empty()) throw DataError("median of empty sample");
  auto mid = sample.begin() + static_cast<std::ptrdiff_t>(sample.size() / 2);
  std::nth_element(sample.begin(), mid, sample.end());
  if (sample.size() % 2 == 1) return *mid;
  double upper = *mid;
  double lower = *std::max_element(sample.begin(), mid);
  return 0.5 * (lower + upper);
}

inline RasterGrid to_db(const RasterGrid& grid) {
  std::vector<double> out(grid.size());
  std::vector<std::uint8_t> mask(grid.mask().begin(), grid.mask().end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.masked(i)) {
      out[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    if (grid.value(i) < 0.0) throw DataError("negative linear radiance");
    out[i] = 10.0 * std::log10(grid.value(i) + kDbEpsilon);
  }
  return RasterGrid(grid.width(), grid.height(), std::move(out), std::move(mask), grid.timestamp());
}

/// Sum of absolute pixel differences over pixels unmasked in both grids.
inline double abs_diff_sum(const RasterGrid& g1, const RasterGrid& g2) {
  if (!g1.same_shape(g2)) throw DataError("abs_diff_sum: dimension mismatch");
  double sum = 0.0;
  std::size_t joint = 0;
  for (std::size_t i = 0; i < g1.size(); ++i) {
    if (g1.masked(i) || g2.masked(i)) continue;
    sum += std::abs(g2.value(i) - g1.value(i));
    ++joint;
  }
  if (joint == 0) throw DataError("abs_diff_sum: no jointly unmasked pixels");
  return sum;
}

/// dB differences of consecutive grids. Pairs without overlapping valid pixels are skipped.
inline std::vector<double> consecutive_db_differences(const AoiMonthStack& stack) {
  std::vector<double> diffs;
  if (stack.size() < 2) return diffs;
  std::vector<RasterGrid> db;
  db.reserve(stack.size());
  for (const auto& g : stack.grids()) db.push_back(to_db(g));
  for (std::size_t t = 0; t + 1 < db.size(); ++t) {
    try {
      diffs.push_back(abs_diff_sum(db[t], db[t + 1]));
    } catch (const DataError& e) {
      log().debug("{} {}: skipping pair {}: {}", stack.aoi_id(), stack.year_month().str(), t, e.what());
    }
  }
  return diffs;
}

/// Monthly median of consecutive-pair VV differences; nullopt when no pair is available.
inline std::optional<double> vv_diff_median(const AoiMonthStack& stack) {
  auto diffs = consecutive_db_differences(stack);
  if (diffs.empty()) return std::nullopt;
  return median(std::move(diffs));
}

namespace detail {

template <typename Reduce>
RasterGrid pixelwise_reduce(const AoiMonthStack& stack, Reduce reduce) {
  if (stack.empty()) throw DataError("pixelwise composite of empty stack");
  const auto& first = stack.grids().front();
  std::vector<double> out(first.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> mask(first.size(), 1);
  std::vector<double> series;
  series.reserve(stack.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    series.clear();
    for (const auto& g : stack.grids())
      if (!g.masked(i)) series.push_back(g.value(i));
    if (series.empty()) continue;
    out[i] = reduce(series);
    mask[i] = 0;
  }
  return RasterGrid(first.width(), first.height(), std::move(out), std::move(mask), first.timestamp());
}

inline void require_unmasked(const RasterGrid& grid, const char* what) {
  if (grid.unmasked_count() == 0) throw DataError(std::string(what) + ": composite fully masked");
}

}  // namespace detail

/// Per-pixel temporal median over available observations.
inline RasterGrid pixelwise_median(const AoiMonthStack& stack) {
  return detail::pixelwise_reduce(stack, [](const std::vector<double>& s) { return median(s); });
}

/// Per-pixel temporal maximum over available observations.
inline RasterGrid pixelwise_max(const AoiMonthStack& stack) {
  return detail::pixelwise_reduce(stack, [](const std::vector<double>& s) {
    return *std::max_element(s.begin(), s.end());
  });
}

/// Spatial mean of the dB-converted monthly median composite. May be negative.
inline double vh_backscatter(const AoiMonthStack& stack) {
  auto composite = to_db(pixelwise_median(stack));
  detail::require_unmasked(composite, "vh_backscatter");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < composite.size(); ++i) {
    if (composite.masked(i)) continue;
    sum += composite.value(i);
    ++n;
  }
  return sum / static_cast<double>(n);
}

enum class NtlStdMode { spatial, temporal };

struct NtlStats {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_and_pop_std(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace detail

/// Mean, max and population std of the zero-floored monthly median composite.
/// In temporal mode the std is taken across the daily AOI means instead.
inline NtlStats ntl_stats(const AoiMonthStack& stack, NtlStdMode mode = NtlStdMode::spatial) {
  auto composite = pixelwise_median(stack);
  detail::require_unmasked(composite, "ntl_stats");
  std::vector<double> pixels;
  pixels.reserve(composite.size());
  for (std::size_t i = 0; i < composite.size(); ++i)
    if (!composite.masked(i)) pixels.push_back(std::max(composite.value(i), 0.0));

  NtlStats stats;
  auto [mean, spatial_std] = detail::mean_and_pop_std(pixels);
  stats.mean = mean;
  stats.max = *std::max_element(pixels.begin(), pixels.end());
  stats.std = spatial_std;

  if (mode == NtlStdMode::temporal) {
    std::vector<double> daily;
    for (const auto& g : stack.grids()) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.masked(i)) continue;
        sum += std::max(g.value(i), 0.0);
        ++n;
      }
      if (n > 0) daily.push_back(sum / static_cast<double>(n));
    }
    stats.std = detail::mean_and_pop_std(daily).second;
  }
  return stats;
}

/// Share of valid pixels whose monthly median radiance is strictly above tau.
inline double lit_area_ratio(const AoiMonthStack& stack, double tau = kDefaultLitThreshold) {
  if (!(tau >= 0.0)) throw ConfigError("lit threshold must be nonnegative");
  auto composite = pixelwise_median(stack);
  detail::require_unmasked(composite, "lit_area_ratio");
  std::size_t lit = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < composite.size(); ++i) {
    if (composite.masked(i)) continue;
    ++n;
    if (composite.value(i) > tau) ++lit;
  }
  return static_cast<double>(lit) / static_cast<double>(n);
}

struct FeatureOptions {
  double lit_threshold = kDefaultLitThreshold;
  NtlStdMode ntl_std_mode = NtlStdMode::spatial;
};

/// Reduces the three band stacks of one AOI-month. Any reduction whose
/// preconditions fail leaves its feature missing and logs a warning.
inline SatFeatures compute_features(const AoiMonthStack& vv, const AoiMonthStack& vh,
                                    const AoiMonthStack& ntl, const FeatureOptions& options = {}) {
  SatFeatures f;
  f.n_obs_vv = vv.size();
  f.n_obs_vh = vh.size();
  f.n_obs_ntl = ntl.size();
  auto guarded = [&](const AoiMonthStack& s, const char* name, auto&& fn) {
    if (s.empty()) return;
    try {
      fn();
    } catch (const DataError& e) {
      log().warn("{} {} {}: {}", s.aoi_id(), s.year_month().str(), name, e.what());
    }
  };
  guarded(vv, "vv", [&] { f.sar_diff_median = vv_diff_median(vv); });
  guarded(vh, "vh", [&] { f.vh_median_mean = vh_backscatter(vh); });
  guarded(ntl, "ntl", [&] {
    auto s = ntl_stats(ntl, options.ntl_std_mode);
    f.ntl_mean = s.mean;
    f.ntl_max = s.max;
    f.ntl_std = s.std;
  });
  guarded(ntl, "ntl", [&] { f.lit_area_ratio = lit_area_ratio(ntl, options.lit_threshold); });
  return f;
}

}  // namespace seatrade::raster
