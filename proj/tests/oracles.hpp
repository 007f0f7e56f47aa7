#pragma once

// Naive reference implementations used only by tests. They index pixels as
// (row, col) with explicit double loops and sort full samples for medians,
// sharing no code with the library kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "seatrade/raster.hpp"

namespace oracle {

using seatrade::raster::AoiMonthStack;
using seatrade::raster::RasterGrid;

inline double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double db(double v) { return 10.0 * std::log10(v + 1e-8); }

inline bool valid(const RasterGrid& g, std::size_t row, std::size_t col) {
  return !g.masked(row * g.width() + col);
}

inline double at(const RasterGrid& g, std::size_t row, std::size_t col) { return g.value(row * g.width() + col); }

inline std::optional<double> vv_diff_median(const AoiMonthStack& s) {
  std::vector<double> sums;
  const auto& g = s.grids();
  for (std::size_t t = 1; t < g.size(); ++t) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < g[t].height(); ++r)
      for (std::size_t c = 0; c < g[t].width(); ++c)
        if (valid(g[t - 1], r, c) && valid(g[t], r, c)) {
          sum += std::fabs(db(at(g[t], r, c)) - db(at(g[t - 1], r, c)));
          ++count;
        }
    if (count > 0) sums.push_back(sum);
  }
  if (sums.empty()) return std::nullopt;
  return sorted_median(sums);
}

/// Per-pixel temporal median; nullopt where every observation is masked.
inline std::vector<std::vector<std::optional<double>>> median_composite(const AoiMonthStack& s) {
  const auto& first = s.grids().front();
  std::vector<std::vector<std::optional<double>>> out(first.height(),
                                                      std::vector<std::optional<double>>(first.width()));
  for (std::size_t r = 0; r < first.height(); ++r)
    for (std::size_t c = 0; c < first.width(); ++c) {
      std::vector<double> series;
      for (const auto& g : s.grids())
        if (valid(g, r, c)) series.push_back(at(g, r, c));
      if (!series.empty()) out[r][c] = sorted_median(series);
    }
  return out;
}

inline double vh_backscatter(const AoiMonthStack& s) {
  auto comp = median_composite(s);
  double sum = 0.0;
  int n = 0;
  for (const auto& row : comp)
    for (const auto& v : row)
      if (v) {
        sum += db(*v);
        ++n;
      }
  return sum / n;
}

struct Ntl {
  double mean, max, std;
};

inline Ntl ntl_stats(const AoiMonthStack& s) {
  auto comp = median_composite(s);
  std::vector<double> px;
  for (const auto& row : comp)
    for (const auto& v : row)
      if (v) px.push_back(*v < 0.0 ? 0.0 : *v);
  double mean = 0.0;
  for (double v : px) mean += v;
  mean /= static_cast<double>(px.size());
  double var = 0.0;
  for (double v : px) var += (v - mean) * (v - mean);
  var /= static_cast<double>(px.size());
  return {mean, *std::max_element(px.begin(), px.end()), std::sqrt(var)};
}

inline double lit_area_ratio(const AoiMonthStack& s, double tau) {
  auto comp = median_composite(s);
  int lit = 0, n = 0;
  for (const auto& row : comp)
    for (const auto& v : row)
      if (v) {
        ++n;
        lit += *v > tau ? 1 : 0;
      }
  return static_cast<double>(lit) / n;
}

/// Random stack: up to max_side x max_side pixels and up to max_t grids,
/// values uniform in [lo, hi), each pixel masked with probability p_mask.
inline AoiMonthStack random_stack(std::mt19937_64& rng, std::size_t max_side, std::size_t max_t, double lo,
                                  double hi, double p_mask, std::size_t min_t = 1) {
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  std::uniform_int_distribution<std::size_t> count(min_t, max_t);
  std::uniform_real_distribution<double> value(lo, hi);
  std::bernoulli_distribution masked(p_mask);
  std::size_t w = side(rng), h = side(rng), t = count(rng);
  std::vector<RasterGrid> grids;
  for (std::size_t k = 0; k < t; ++k) {
    std::vector<double> v(w * h);
    std::vector<std::uint8_t> m(w * h);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = value(rng);
      m[i] = masked(rng) ? 1 : 0;
    }
    // Keep one pixel valid so composites are never fully masked.
    m[0] = 0;
    grids.emplace_back(w, h, std::move(v), std::move(m),
                       seatrade::Date{2021, 3, static_cast<int>(k) + 1});
  }
  return AoiMonthStack("rnd", {2021, 3}, std::move(grids));
}

}  // namespace oracle
