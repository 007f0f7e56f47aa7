#pragma once

// Synthetic 3-port x 24-month corpus in the published input layouts:
// RGRID rasters under <root>/rasters, wpi.csv with the full attribute schema,
// and trade.csv. Trade levels follow the simulated port activity so the
// pipeline has real signal to learn.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "seatrade/csv.hpp"
#include "seatrade/panel.hpp"
#include "seatrade/raster.hpp"
#include "seatrade/rgrid.hpp"

namespace fixture {

namespace fs = std::filesystem;

struct Port {
  std::string id;
  std::string region;
  std::string size;
  double base_activity;
};

inline const std::vector<Port>& ports() {
  static const std::vector<Port> p = {
      {"10010", "Mainland", "Medium", 1.0},
      {"10020", "Mainland", "Large", 2.0},
      {"10030", "Hawaii", "Medium", 0.6},
  };
  return p;
}

inline constexpr seatrade::YearMonth kStart{2021, 1};
inline constexpr int kMonths = 24;

struct Paths {
  fs::path root;
  fs::path rasters;
  fs::path wpi;
  fs::path trade;
};

inline std::string wpi_value(const seatrade::panel::AttributeSpec& spec, std::size_t port, std::size_t col) {
  using seatrade::panel::AttributeKind;
  switch (spec.kind) {
    case AttributeKind::numeric:
      if (spec.name == "harbor_use") return port == 2 ? "" : "1";
      return seatrade::csv::format_number(5.0 + 2.5 * static_cast<double>(port) + 0.25 * static_cast<double>(col % 7));
    case AttributeKind::flag: {
      static const char* kFlags[] = {"Y", "N", "U"};
      return kFlags[(port + col) % 3];
    }
    case AttributeKind::harbor_size:
      return ports()[port].size;
    case AttributeKind::coded:
      if (spec.name == "harbor_type") return port == 1 ? "CB" : "CN";
      if (spec.name == "shelter_afforded") return port == 2 ? "F" : "G";
      if (spec.name == "navarea") return port == 2 ? "XII" : "IV";
      if (spec.name == "repairs") return port == 1 ? "A" : "C";
      return port == 1 ? "L" : "M";
  }
  return "";
}

/// Writes the corpus under `root` and returns the input paths.
inline Paths write(const fs::path& root, std::uint64_t seed = 7) {
  using seatrade::Date;
  using seatrade::raster::RasterGrid;
  Paths paths{root, root / "rasters", root / "wpi.csv", root / "trade.csv"};
  fs::create_directories(paths.rasters);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr std::size_t kSide = 8;

  std::ofstream trade(paths.trade);
  seatrade::csv::write_record(trade, {"port_id", "year_month", "trade_value", "trade_weight"});

  for (std::size_t p = 0; p < ports().size(); ++p) {
    const auto& port = ports()[p];
    for (int m = 0; m < kMonths; ++m) {
      auto ym = kStart.plus(m);
      double season = 0.3 * std::sin(2.0 * 3.14159265358979 * m / 12.0);
      double activity = port.base_activity * (1.0 + season + 0.15 * z(rng));

      // VV: pixel backscatter churn grows with activity.
      for (int d : {3, 13, 23}) {
        std::vector<double> v(kSide * kSide);
        for (auto& x : v) x = 0.05 * std::exp(activity * 0.8 * z(rng));
        seatrade::rgrid::write_file(seatrade::rgrid::grid_path(paths.rasters, port.id, "vv", {ym.year, ym.month, d}),
                                    RasterGrid(kSide, kSide, std::move(v), {}, Date{ym.year, ym.month, d}));
      }
      // VH: share of bright metallic pixels grows with activity.
      for (int d : {5, 17}) {
        std::vector<double> v(kSide * kSide);
        for (auto& x : v) x = u(rng) < 0.2 * activity ? 0.5 + u(rng) : 0.01 + 0.02 * u(rng);
        seatrade::rgrid::write_file(seatrade::rgrid::grid_path(paths.rasters, port.id, "vh", {ym.year, ym.month, d}),
                                    RasterGrid(kSide, kSide, std::move(v), {}, Date{ym.year, ym.month, d}));
      }
      // NTL: radiance with a few negative artifacts and a masked cloud pixel.
      for (int d : {2, 9, 16, 24}) {
        std::vector<double> v(kSide * kSide);
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] = (i % kSide < 4 ? 1.5 * activity : 0.1) + 0.2 * z(rng);
        v[static_cast<std::size_t>(d) % v.size()] = std::nan("");
        seatrade::rgrid::write_file(seatrade::rgrid::grid_path(paths.rasters, port.id, "ntl", {ym.year, ym.month, d}),
                                    RasterGrid(kSide, kSide, std::move(v), {}, Date{ym.year, ym.month, d}));
      }

      double value = std::exp(16.0 + 1.5 * activity + 0.05 * z(rng));
      double weight = std::exp(12.0 + 1.2 * activity + 0.05 * z(rng));
      seatrade::csv::write_record(trade, {port.id, ym.str(), seatrade::csv::format_number(std::round(value)),
                                          seatrade::csv::format_number(std::round(weight))});
    }
  }

  std::ofstream wpi(paths.wpi);
  std::vector<std::string> header = {"port_id", "region"};
  for (const auto& spec : seatrade::panel::kWpiSchema) header.emplace_back(spec.name);
  seatrade::csv::write_record(wpi, header);
  for (std::size_t p = 0; p < ports().size(); ++p) {
    std::vector<std::string> row = {ports()[p].id, ports()[p].region};
    for (std::size_t c = 0; c < seatrade::panel::kWpiSchema.size(); ++c)
      row.push_back(wpi_value(seatrade::panel::kWpiSchema[c], p, c));
    seatrade::csv::write_record(wpi, row);
  }
  return paths;
}

}  // namespace fixture
