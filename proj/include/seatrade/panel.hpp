#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/feature_matrix.hpp"
#include "seatrade/log.hpp"
#include "seatrade/rgrid.hpp"

namespace seatrade::panel {

// ---------------------------------------------------------------------------
// World Port Index attributes

enum class HarborSize { very_small = 0, small = 1, medium = 2, large = 3 };

inline std::string to_string(HarborSize s) {
  switch (s) {
    case HarborSize::very_small: return "Very Small";
    case HarborSize::small: return "Small";
    case HarborSize::medium: return "Medium";
    case HarborSize::large: return "Large";
  }
  return "";
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Accepts full names ("Very Small") or WPI letter codes (V, S, M, L), case-insensitive.
inline HarborSize parse_harbor_size(std::string_view text) {
  auto t = detail::lower(detail::trim(text));
  if (t == "very small" || t == "very_small" || t == "v") return HarborSize::very_small;
  if (t == "small" || t == "s") return HarborSize::small;
  if (t == "medium" || t == "m") return HarborSize::medium;
  if (t == "large" || t == "l") return HarborSize::large;
  throw DataError("unknown harbor size '" + std::string(text) + "'");
}

enum class AttributeKind { numeric, flag, harbor_size, coded };

struct AttributeSpec {
  std::string_view name;
  AttributeKind kind;
  // For coded attributes: accepted labels, lower case, each mapping to its code value.
  std::span<const std::pair<std::string_view, double>> codes = {};
};

namespace detail {

using Code = std::pair<std::string_view, double>;

inline constexpr std::array<Code, 18> kHarborTypeCodes = {{
    {"cn", 0}, {"coastal natural", 0},   {"cb", 1}, {"coastal breakwater", 1}, {"ct", 2},
    {"coastal tide gates", 2},           {"rn", 3}, {"river natural", 3},      {"rb", 4},
    {"river basin", 4},                  {"rt", 5}, {"river tide gates", 5},   {"lc", 6},
    {"lake or canal", 6},                {"or", 7}, {"open roadstead", 7},     {"th", 8},
    {"typhoon harbor", 8},
}};

inline constexpr std::array<Code, 10> kShelterCodes = {{
    {"n", 0}, {"none", 0}, {"p", 1}, {"poor", 1}, {"f", 2},
    {"fair", 2}, {"g", 3}, {"good", 3}, {"e", 4}, {"excellent", 4},
}};

inline constexpr std::array<Code, 10> kRepairCodes = {{
    {"n", 0}, {"none", 0}, {"d", 1}, {"emergency only", 1}, {"c", 2},
    {"limited", 2}, {"b", 3}, {"moderate", 3}, {"a", 4}, {"major", 4},
}};

inline constexpr std::array<Code, 6> kDryDockCodes = {{
    {"s", 1}, {"small", 1}, {"m", 2}, {"medium", 2}, {"l", 3}, {"large", 3},
}};

inline constexpr std::array<Code, 21> kNavareaCodes = {{
    {"i", 1},     {"ii", 2},    {"iii", 3},  {"iv", 4},    {"v", 5},    {"vi", 6},    {"vii", 7},
    {"viii", 8},  {"ix", 9},    {"x", 10},   {"xi", 11},   {"xii", 12}, {"xiii", 13}, {"xiv", 14},
    {"xv", 15},   {"xvi", 16},  {"xvii", 17}, {"xviii", 18}, {"xix", 19}, {"xx", 20},  {"xxi", 21},
}};

constexpr AttributeSpec num(std::string_view n) { return {n, AttributeKind::numeric}; }
constexpr AttributeSpec flag(std::string_view n) { return {n, AttributeKind::flag}; }

}  // namespace detail

/// The 91 port characteristics used as model features, in output column order.
inline constexpr std::array<AttributeSpec, 91> kWpiSchema = {{
    detail::num("tidal_range_m"),
    detail::num("entrance_width_m"),
    detail::num("channel_depth_m"),
    detail::num("anchorage_depth_m"),
    detail::num("cargo_pier_depth_m"),
    detail::num("oil_terminal_depth_m"),
    detail::num("lng_terminal_depth_m"),
    detail::num("max_vessel_length_m"),
    detail::num("max_vessel_beam_m"),
    detail::num("max_vessel_draft_m"),
    detail::num("offshore_max_length_m"),
    detail::num("offshore_max_beam_m"),
    detail::num("offshore_max_draft_m"),
    {"harbor_size", AttributeKind::harbor_size},
    {"harbor_type", AttributeKind::coded, detail::kHarborTypeCodes},
    detail::num("harbor_use"),
    {"shelter_afforded", AttributeKind::coded, detail::kShelterCodes},
    detail::flag("ent_restr_tide"),
    detail::flag("ent_restr_swell"),
    detail::flag("ent_restr_ice"),
    detail::flag("ent_restr_other"),
    detail::flag("overhead_limits"),
    detail::flag("underkeel_clearance"),
    detail::flag("good_holding_ground"),
    detail::flag("turning_area"),
    detail::flag("traffic_sep_scheme"),
    detail::flag("vessel_traffic_service"),
    {"navarea", AttributeKind::coded, detail::kNavareaCodes},
    detail::flag("search_and_rescue"),
    detail::flag("port_security"),
    detail::flag("eta_message"),
    detail::flag("quarantine_pratique"),
    detail::flag("quarantine_sanitation"),
    detail::flag("quarantine_other"),
    detail::flag("first_port_entry"),
    detail::flag("us_representative"),
    detail::flag("pilotage_compulsory"),
    detail::flag("pilotage_available"),
    detail::flag("pilotage_local_assist"),
    detail::flag("pilotage_advisable"),
    detail::flag("tugs_salvage"),
    detail::flag("tugs_assistance"),
    detail::flag("comm_telephone"),
    detail::flag("comm_telefax"),
    detail::flag("comm_radio"),
    detail::flag("comm_radio_tel"),
    detail::flag("comm_airport"),
    detail::flag("comm_rail"),
    detail::flag("wharves"),
    detail::flag("anchorage"),
    detail::flag("dang_cargo_anchorage"),
    detail::flag("med_mooring"),
    detail::flag("beach_mooring"),
    detail::flag("ice_mooring"),
    detail::flag("ro_ro"),
    detail::flag("solid_bulk"),
    detail::flag("liquid_bulk"),
    detail::flag("container"),
    detail::flag("breakbulk"),
    detail::flag("oil_terminal"),
    detail::flag("lng_terminal"),
    detail::flag("other_facilities"),
    detail::flag("medical_facilities"),
    detail::flag("garbage_disposal"),
    detail::flag("chemical_tank_disposal"),
    detail::flag("dirty_ballast_disposal"),
    detail::flag("degaussing"),
    detail::flag("cranes_fixed"),
    detail::flag("cranes_mobile"),
    detail::flag("cranes_floating"),
    detail::flag("cranes_container"),
    detail::flag("lifts_100_tons"),
    detail::flag("lifts_50_100_tons"),
    detail::flag("lifts_25_49_tons"),
    detail::flag("lifts_0_24_tons"),
    detail::flag("svc_longshoremen"),
    detail::flag("svc_electricity"),
    detail::flag("svc_steam"),
    detail::flag("svc_nav_equip"),
    detail::flag("svc_elec_repair"),
    detail::flag("svc_ice_breaking"),
    detail::flag("svc_diving"),
    detail::flag("sup_provisions"),
    detail::flag("sup_potable_water"),
    detail::flag("sup_fuel_oil"),
    detail::flag("sup_diesel_oil"),
    detail::flag("sup_aviation_fuel"),
    detail::flag("sup_deck"),
    detail::flag("sup_engine"),
    {"repairs", AttributeKind::coded, detail::kRepairCodes},
    {"dry_dock", AttributeKind::coded, detail::kDryDockCodes},
}};

/// Schema position of an attribute, or nullopt if the name is not a WPI feature.
inline std::optional<std::size_t> schema_index(std::string_view name) {
  for (std::size_t i = 0; i < kWpiSchema.size(); ++i)
    if (kWpiSchema[i].name == name) return i;
  return std::nullopt;
}

/// Encodes one raw attribute value. Empty and "unknown" are missing for every kind.
inline double encode_attribute(const AttributeSpec& spec, std::string_view raw) {
  auto t = detail::lower(detail::trim(raw));
  if (t.empty() || t == "u" || t == "unknown") return kMissing;
  auto fail = [&]() -> double {
    throw DataError("invalid value '" + std::string(raw) + "' for attribute " + std::string(spec.name));
  };
  auto as_number = [&]() -> std::optional<double> {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
  };
  switch (spec.kind) {
    case AttributeKind::numeric:
      if (auto v = as_number()) return *v;
      return fail();
    case AttributeKind::flag:
      if (t == "y" || t == "yes" || t == "1" || t == "true") return 1.0;
      if (t == "n" || t == "no" || t == "0" || t == "false") return 0.0;
      return fail();
    case AttributeKind::harbor_size:
      return static_cast<double>(parse_harbor_size(t));
    case AttributeKind::coded:
      for (const auto& [label, code] : spec.codes)
        if (label == t) return code;
      if (auto v = as_number()) return *v;
      return fail();
  }
  return fail();
}

struct WpiRecord {
  std::string port_id;
  HarborSize harbor_size = HarborSize::small;
  std::string region;
  /// Raw attribute values keyed by schema name (harbor_size is taken from the field above).
  std::map<std::string, std::string> attributes;
};

struct WpiFeature {
  std::string name;
  double value;
};

/// Encodes a record into its feature vector in schema order. Only attributes
/// present in the record are emitted; harbor_size is always emitted.
/// port_id and region never appear in the output.
inline std::vector<WpiFeature> encode_wpi(const WpiRecord& record) {
  for (const auto& [name, _] : record.attributes)
    if (!schema_index(name)) throw SchemaError("unknown WPI attribute '" + name + "'");
  std::vector<WpiFeature> out;
  for (const auto& spec : kWpiSchema) {
    std::string name(spec.name);
    if (spec.kind == AttributeKind::harbor_size) {
      out.push_back({name, static_cast<double>(record.harbor_size)});
      continue;
    }
    auto it = record.attributes.find(name);
    if (it == record.attributes.end()) continue;
    out.push_back({name, encode_attribute(spec, it->second)});
  }
  return out;
}

/// WPI table keyed by port id. All records share the attribute column set.
struct WpiTable {
  std::vector<std::string> columns;  // encoded feature names, schema order
  std::map<std::string, WpiRecord> records;
  std::map<std::string, std::vector<double>> encoded;

  [[nodiscard]] const WpiRecord* find(const std::string& port_id) const {
    auto it = records.find(port_id);
    return it == records.end() ? nullptr : &it->second;
  }
};

inline WpiTable make_wpi_table(std::vector<WpiRecord> records) {
  WpiTable table;
  bool first = true;
  for (auto& r : records) {
    auto features = encode_wpi(r);
    std::vector<std::string> names;
    std::vector<double> values;
    for (auto& f : features) {
      names.push_back(std::move(f.name));
      values.push_back(f.value);
    }
    if (first) {
      table.columns = names;
      first = false;
    } else if (names != table.columns) {
      throw SchemaError("WPI record " + r.port_id + " has a different attribute set");
    }
    if (table.records.contains(r.port_id)) throw DataError("duplicate WPI port_id " + r.port_id);
    table.encoded.emplace(r.port_id, std::move(values));
    table.records.emplace(r.port_id, std::move(r));
  }
  return table;
}

/// Reads wpi.csv: port_id, harbor_size, region and any subset of the schema columns.
inline WpiTable read_wpi_csv(const csv::Table& csv) {
  for (const char* required : {"port_id", "harbor_size", "region"})
    if (!csv.has(required)) throw SchemaError(std::string("wpi.csv missing column '") + required + "'");
  std::vector<WpiRecord> records;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    WpiRecord r;
    r.port_id = csv.at(i, "port_id");
    r.region = csv.at(i, "region");
    r.harbor_size = parse_harbor_size(csv.at(i, "harbor_size"));
    for (std::size_t c = 0; c < csv.header().size(); ++c) {
      const auto& name = csv.header()[c];
      if (name == "port_id" || name == "region" || name == "harbor_size") continue;
      r.attributes.emplace(name, csv.row(i)[c]);
    }
    records.push_back(std::move(r));
  }
  return make_wpi_table(std::move(records));
}

// ---------------------------------------------------------------------------
// Trade records

struct TradeRecord {
  std::string port_id;
  YearMonth year_month;
  double trade_value = 0.0;
  double trade_weight = 0.0;
};

/// Natural log of (1 + x) for nonnegative x.
inline double log1p(double x) {
  if (!(x >= 0.0)) throw DataError("log1p: negative input");
  return std::log1p(x);
}

inline std::vector<TradeRecord> read_trade_csv(const csv::Table& csv) {
  std::vector<TradeRecord> out;
  std::set<std::pair<std::string, YearMonth>> seen;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    TradeRecord r{csv.at(i, "port_id"), YearMonth::parse(csv.at(i, "year_month")),
                  csv::parse_number(csv.at(i, "trade_value")), csv::parse_number(csv.at(i, "trade_weight"))};
    if (!(r.trade_value >= 0.0) || !(r.trade_weight >= 0.0))
      throw DataError("negative trade for " + r.port_id + " " + r.year_month.str());
    if (!seen.emplace(r.port_id, r.year_month).second)
      throw DataError("duplicate trade record for " + r.port_id + " " + r.year_month.str());
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Panel

enum class FeatureSpec { satellite, port_only, satellite_port };

inline FeatureSpec parse_feature_spec(std::string_view text) {
  if (text == "sat") return FeatureSpec::satellite;
  if (text == "port") return FeatureSpec::port_only;
  if (text == "sat+port") return FeatureSpec::satellite_port;
  throw ConfigError("unknown feature spec '" + std::string(text) + "' (expected sat, port or sat+port)");
}

inline std::string to_string(FeatureSpec s) {
  switch (s) {
    case FeatureSpec::satellite: return "sat";
    case FeatureSpec::port_only: return "port";
    case FeatureSpec::satellite_port: return "sat+port";
  }
  return "";
}

inline bool uses_satellite(FeatureSpec s) { return s != FeatureSpec::port_only; }
inline bool uses_port(FeatureSpec s) { return s != FeatureSpec::satellite; }

inline const std::vector<std::string>& satellite_columns() {
  static const std::vector<std::string> cols = {"sar_diff_median", "vh_median_mean", "ntl_mean",
                                                "ntl_max",         "ntl_std",        "lit_area_ratio"};
  return cols;
}

enum class Target { value, weight };

inline Target parse_target(std::string_view text) {
  if (text == "value") return Target::value;
  if (text == "weight") return Target::weight;
  throw ConfigError("unknown target '" + std::string(text) + "' (expected value or weight)");
}

inline std::string to_string(Target t) { return t == Target::value ? "value" : "weight"; }

struct PanelRow {
  std::string port_id;
  YearMonth year_month;
  std::string region;
  std::optional<HarborSize> harbor_size;
  std::optional<double> y_value_log;
  std::optional<double> y_weight_log;
  std::vector<double> features;  // satellite block then WPI block; NaN = missing

  [[nodiscard]] std::optional<double> target(Target t) const {
    return t == Target::value ? y_value_log : y_weight_log;
  }
};

/// Port-month analysis table. Immutable once assembled.
struct Panel {
  std::vector<std::string> sat_columns;
  std::vector<std::string> wpi_columns;
  std::vector<PanelRow> rows;

  [[nodiscard]] std::vector<std::string> feature_names() const {
    auto names = sat_columns;
    names.insert(names.end(), wpi_columns.begin(), wpi_columns.end());
    return names;
  }

  [[nodiscard]] std::size_t feature_index(const std::string& name) const {
    auto names = feature_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaError("panel has no feature column '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  }

  /// Same columns, no rows.
  [[nodiscard]] Panel empty_like() const { return Panel{sat_columns, wpi_columns, {}}; }

  [[nodiscard]] std::vector<YearMonth> months() const {
    std::set<YearMonth> s;
    for (const auto& r : rows) s.insert(r.year_month);
    return {s.begin(), s.end()};
  }

  [[nodiscard]] std::set<std::string> ports() const {
    std::set<std::string> s;
    for (const auto& r : rows) s.insert(r.port_id);
    return s;
  }
};

namespace detail {

inline std::vector<double> sat_values(const raster::SatFeatures& f) {
  auto v = [](const std::optional<double>& x) { return x.value_or(kMissing); };
  return {v(f.sar_diff_median), v(f.vh_median_mean), v(f.ntl_mean),
          v(f.ntl_max),         v(f.ntl_std),        v(f.lit_area_ratio)};
}

inline void sort_rows(std::vector<PanelRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const PanelRow& a, const PanelRow& b) {
    return std::tie(a.port_id, a.year_month) < std::tie(b.port_id, b.year_month);
  });
}

}  // namespace detail

struct AssembleCounts {
  std::size_t trade_rows = 0;
  std::size_t dropped_no_wpi = 0;
  std::size_t dropped_no_satellite = 0;
  std::size_t kept = 0;
};

/// Joins trade records with the feature blocks of `spec` on (port_id, year_month).
/// Satellite AOIs are identified by the WPI port id. Rows without any satellite
/// feature are dropped in satellite-bearing specs; rows without a WPI record are
/// dropped in port-bearing specs. `wpi` may be null for the satellite spec.
inline Panel assemble_panel(const std::vector<rgrid::FeatureRow>& sat_rows, const WpiTable* wpi,
                            const std::vector<TradeRecord>& trade, FeatureSpec spec,
                            AssembleCounts* counts = nullptr) {
  if (uses_port(spec) && !wpi) throw ConfigError("spec " + to_string(spec) + " requires a WPI table");
  std::map<std::pair<std::string, YearMonth>, const raster::SatFeatures*> sat_index;
  for (const auto& r : sat_rows) sat_index[{r.aoi_id, r.year_month}] = &r.features;

  Panel panel;
  if (uses_satellite(spec)) panel.sat_columns = satellite_columns();
  if (uses_port(spec)) panel.wpi_columns = wpi->columns;

  AssembleCounts c;
  c.trade_rows = trade.size();
  for (const auto& t : trade) {
    const WpiRecord* rec = wpi ? wpi->find(t.port_id) : nullptr;
    if (uses_port(spec) && !rec) {
      ++c.dropped_no_wpi;
      continue;
    }
    PanelRow row;
    row.port_id = t.port_id;
    row.year_month = t.year_month;
    if (rec) {
      row.region = rec->region;
      row.harbor_size = rec->harbor_size;
    }
    row.y_value_log = log1p(t.trade_value);
    row.y_weight_log = log1p(t.trade_weight);
    if (uses_satellite(spec)) {
      auto it = sat_index.find({t.port_id, t.year_month});
      if (it == sat_index.end() || it->second->all_missing()) {
        ++c.dropped_no_satellite;
        continue;
      }
      row.features = detail::sat_values(*it->second);
    }
    if (uses_port(spec)) {
      const auto& enc = wpi->encoded.at(t.port_id);
      row.features.insert(row.features.end(), enc.begin(), enc.end());
    }
    panel.rows.push_back(std::move(row));
  }
  c.kept = panel.rows.size();
  log().info("panel {}: {} trade rows, dropped {} without WPI, {} without satellite, kept {}",
             to_string(spec), c.trade_rows, c.dropped_no_wpi, c.dropped_no_satellite, c.kept);
  if (counts) *counts = c;
  if (panel.rows.empty()) throw DataError("panel join produced no rows");
  detail::sort_rows(panel.rows);
  return panel;
}

/// Builds an unlabeled panel (targets absent) for ports without trade data,
/// one row per satellite feature row that has any feature.
inline Panel assemble_unlabeled(const std::vector<rgrid::FeatureRow>& sat_rows, const WpiTable* wpi,
                                FeatureSpec spec) {
  if (!uses_satellite(spec)) throw ConfigError("unlabeled panels need a satellite-bearing spec");
  if (uses_port(spec) && !wpi) throw ConfigError("spec " + to_string(spec) + " requires a WPI table");
  Panel panel;
  panel.sat_columns = satellite_columns();
  if (uses_port(spec)) panel.wpi_columns = wpi->columns;
  for (const auto& s : sat_rows) {
    if (s.features.all_missing()) continue;
    const WpiRecord* rec = wpi ? wpi->find(s.aoi_id) : nullptr;
    if (uses_port(spec) && !rec) continue;
    PanelRow row;
    row.port_id = s.aoi_id;
    row.year_month = s.year_month;
    if (rec) {
      row.region = rec->region;
      row.harbor_size = rec->harbor_size;
    }
    row.features = detail::sat_values(s.features);
    if (uses_port(spec)) {
      const auto& enc = wpi->encoded.at(s.aoi_id);
      row.features.insert(row.features.end(), enc.begin(), enc.end());
    }
    panel.rows.push_back(std::move(row));
  }
  if (panel.rows.empty()) throw DataError("no satellite rows to predict");
  detail::sort_rows(panel.rows);
  return panel;
}

// ---------------------------------------------------------------------------
// Splits and filters

struct Split {
  Panel train;
  Panel test;
};

/// Splits at a given first test month: rows before it train, the rest test.
inline Split chrono_split_at(const Panel& panel, YearMonth first_test_month) {
  Split s{panel.empty_like(), panel.empty_like()};
  for (const auto& r : panel.rows) (r.year_month < first_test_month ? s.train : s.test).rows.push_back(r);
  if (s.train.rows.empty() || s.test.rows.empty())
    throw DataError("split at " + first_test_month.str() + " leaves an empty side");
  return s;
}

/// Temporal split over distinct months: the first ceil(fraction * M) months train.
inline Split chrono_split(const Panel& panel, double train_fraction = 0.70) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0,1)");
  auto months = panel.months();
  if (months.size() < 2) throw DataError("chrono_split needs at least 2 distinct months");
  auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(months.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, months.size() - 1);
  return chrono_split_at(panel, months[n_train]);
}

/// Parses "Small,Medium" style lists; "all" selects every size.
inline std::set<HarborSize> parse_sizes(std::string_view text) {
  std::set<HarborSize> sizes;
  if (detail::lower(detail::trim(text)) == "all") {
    return {HarborSize::very_small, HarborSize::small, HarborSize::medium, HarborSize::large};
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto item = detail::trim(text.substr(start, end - start));
    if (!item.empty()) sizes.insert(parse_harbor_size(item));
    start = end + 1;
  }
  if (sizes.empty()) throw ConfigError("empty harbor size list");
  return sizes;
}

/// Keeps rows whose port harbor size is in `sizes`. Rows with unknown size are dropped.
inline Panel filter_size(const Panel& panel, const std::set<HarborSize>& sizes) {
  Panel out = panel.empty_like();
  for (const auto& r : panel.rows)
    if (r.harbor_size && sizes.contains(*r.harbor_size)) out.rows.push_back(r);
  if (out.rows.empty()) throw DataError("size filter left no rows");
  return out;
}

/// Keeps rows whose port is in `ports`.
inline Panel filter_ports(const Panel& panel, const std::set<std::string>& ports) {
  Panel out = panel.empty_like();
  for (const auto& r : panel.rows)
    if (ports.contains(r.port_id)) out.rows.push_back(r);
  return out;
}

/// Train on every region but `region_key`, test on that region.
inline Split leave_region_out(const Panel& panel, const std::string& region_key) {
  Split s{panel.empty_like(), panel.empty_like()};
  for (const auto& r : panel.rows) (r.region == region_key ? s.test : s.train).rows.push_back(r);
  if (s.test.rows.empty()) throw DataError("region '" + region_key + "' not present in panel");
  auto train_ports = s.train.ports();
  for (const auto& p : s.test.ports())
    if (train_ports.contains(p)) throw DataError("port " + p + " appears on both sides of the region split");
  return s;
}

// ---------------------------------------------------------------------------
// Model inputs

inline FeatureMatrix design_matrix(const Panel& panel) {
  auto names = panel.feature_names();
  FeatureMatrix m(names, panel.rows.size());
  for (std::size_t r = 0; r < panel.rows.size(); ++r) {
    const auto& f = panel.rows[r].features;
    if (f.size() != names.size()) throw DataError("panel row width mismatch");
    for (std::size_t c = 0; c < f.size(); ++c) m(r, c) = f[c];
  }
  return m;
}

inline std::vector<double> targets(const Panel& panel, Target target) {
  std::vector<double> y;
  y.reserve(panel.rows.size());
  for (const auto& r : panel.rows) {
    auto v = r.target(target);
    if (!v) throw DataError("row " + r.port_id + " " + r.year_month.str() + " has no target");
    y.push_back(*v);
  }
  return y;
}

// ---------------------------------------------------------------------------
// panel.csv

inline constexpr std::array<const char*, 6> kPanelKeyColumns = {
    "port_id", "year_month", "region", "size_class", "y_value_log", "y_weight_log"};

/// Column order: keys, targets, satellite block, WPI block.
inline void write_panel_csv(std::ostream& out, const Panel& panel) {
  std::vector<std::string> header(kPanelKeyColumns.begin(), kPanelKeyColumns.end());
  for (const auto& n : panel.feature_names()) header.push_back(n);
  csv::write_record(out, header);
  for (const auto& r : panel.rows) {
    std::vector<std::string> fields = {r.port_id,
                                       r.year_month.str(),
                                       r.region,
                                       r.harbor_size ? to_string(*r.harbor_size) : std::string{},
                                       csv::format_optional(r.y_value_log),
                                       csv::format_optional(r.y_weight_log)};
    for (double v : r.features) fields.push_back(csv::format_optional(v));
    csv::write_record(out, fields);
  }
}

inline Panel read_panel_csv(const csv::Table& table) {
  const auto& header = table.header();
  if (header.size() < kPanelKeyColumns.size()) throw SchemaError("panel.csv: too few columns");
  for (std::size_t i = 0; i < kPanelKeyColumns.size(); ++i)
    if (header[i] != kPanelKeyColumns[i])
      throw SchemaError(std::string("panel.csv: expected column '") + kPanelKeyColumns[i] + "' at position " +
                        std::to_string(i));
  Panel panel;
  const auto& sat = satellite_columns();
  bool in_wpi = false;
  for (std::size_t c = kPanelKeyColumns.size(); c < header.size(); ++c) {
    const auto& name = header[c];
    bool is_sat = std::find(sat.begin(), sat.end(), name) != sat.end();
    if (is_sat && !in_wpi) {
      panel.sat_columns.push_back(name);
    } else if (!is_sat && schema_index(name)) {
      in_wpi = true;
      panel.wpi_columns.push_back(name);
    } else {
      throw SchemaError("panel.csv: unexpected feature column '" + name + "'");
    }
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& rec = table.row(i);
    PanelRow r;
    r.port_id = rec[0];
    r.year_month = YearMonth::parse(rec[1]);
    r.region = rec[2];
    if (!rec[3].empty()) r.harbor_size = parse_harbor_size(rec[3]);
    r.y_value_log = csv::parse_optional_number(rec[4]);
    r.y_weight_log = csv::parse_optional_number(rec[5]);
    for (std::size_t c = kPanelKeyColumns.size(); c < rec.size(); ++c)
      r.features.push_back(csv::parse_optional_number(rec[c]).value_or(kMissing));
    panel.rows.push_back(std::move(r));
  }
  return panel;
}

}  // namespace seatrade::panel
