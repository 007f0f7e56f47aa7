#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/gbt.hpp"
#include "seatrade/panel.hpp"

namespace seatrade::eval {

struct Metrics {
  std::optional<double> r2;       // undefined for zero-variance actuals
  std::optional<double> pearson;  // undefined if either series is constant
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape_pct;  // rows with actual == 0 are excluded
  std::size_t n = 0;
};

inline Metrics metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw DataError("metrics: length mismatch");
  if (actual.empty()) throw DataError("metrics: empty input");
  const auto n = static_cast<double>(actual.size());
  Metrics m;
  m.n = actual.size();

  double mean_a = std::accumulate(actual.begin(), actual.end(), 0.0) / n;
  double mean_p = std::accumulate(predicted.begin(), predicted.end(), 0.0) / n;
  double sse = 0.0, sae = 0.0, sst = 0.0, spp = 0.0, sap = 0.0, ape = 0.0;
  std::size_t n_ape = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double a = actual[i], p = predicted[i];
    double e = a - p;
    sse += e * e;
    sae += std::abs(e);
    sst += (a - mean_a) * (a - mean_a);
    spp += (p - mean_p) * (p - mean_p);
    sap += (a - mean_a) * (p - mean_p);
    if (a != 0.0) {
      ape += std::abs(e) / std::abs(a);
      ++n_ape;
    }
  }
  m.mae = sae / n;
  m.rmse = std::sqrt(sse / n);
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  if (sst > 0.0 && spp > 0.0) m.pearson = std::clamp(sap / std::sqrt(sst * spp), -1.0, 1.0);
  if (n_ape > 0) m.mape_pct = 100.0 * ape / static_cast<double>(n_ape);
  return m;
}

/// Applies one seeded row permutation to the given feature columns only:
/// row i receives the values of row perm[i]. Targets and other columns stay put.
inline panel::Panel placebo_shuffle(const panel::Panel& input, const std::vector<std::string>& columns,
                                    std::uint64_t seed, std::vector<std::size_t>* permutation = nullptr) {
  std::vector<std::size_t> cols;
  for (const auto& c : columns) cols.push_back(input.feature_index(c));
  std::vector<std::size_t> perm(input.rows.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  panel::Panel out = input;
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (auto c : cols) out.rows[i].features[c] = input.rows[perm[i]].features[c];
  if (permutation) *permutation = std::move(perm);
  return out;
}

// ---------------------------------------------------------------------------
// Predictions

struct Prediction {
  std::string port_id;
  YearMonth year_month;
  std::optional<double> actual;  // log scale; absent for unobserved ports
  double predicted = 0.0;
};

inline std::vector<Prediction> make_predictions(const panel::Panel& p, std::span<const double> predicted,
                                                panel::Target target) {
  if (predicted.size() != p.rows.size()) throw DataError("prediction count mismatch");
  std::vector<Prediction> out;
  out.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    out.push_back({p.rows[i].port_id, p.rows[i].year_month, p.rows[i].target(target), predicted[i]});
  return out;
}

inline void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& preds) {
  csv::write_record(out, {"port_id", "year_month", "actual", "predicted"});
  for (const auto& p : preds)
    csv::write_record(out, {p.port_id, p.year_month.str(), csv::format_optional(p.actual),
                            csv::format_number(p.predicted)});
}

inline std::vector<Prediction> read_predictions_csv(const csv::Table& t) {
  std::vector<Prediction> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    out.push_back({t.at(i, "port_id"), YearMonth::parse(t.at(i, "year_month")),
                   csv::parse_optional_number(t.at(i, "actual")), csv::parse_number(t.at(i, "predicted"))});
  return out;
}

/// Metrics over predictions that have an observed actual.
inline Metrics metrics(const std::vector<Prediction>& preds) {
  std::vector<double> a, p;
  for (const auto& x : preds) {
    if (!x.actual) continue;
    a.push_back(*x.actual);
    p.push_back(x.predicted);
  }
  return metrics(a, p);
}

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
  std::string spec;
  std::string target;
  Metrics metrics;
  std::vector<gbt::FeatureImportance> importance;  // sorted by descending share
};

inline std::vector<gbt::FeatureImportance> ranked(std::vector<gbt::FeatureImportance> imp) {
  std::stable_sort(imp.begin(), imp.end(), [](const auto& a, const auto& b) { return a.percent > b.percent; });
  return imp;
}

inline nlohmann::json to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json imp = nlohmann::json::array();
  for (const auto& i : r.importance) imp.push_back({{"feature", i.feature}, {"percent", i.percent}});
  return {{"spec", r.spec},
          {"target", r.target},
          {"r2", opt(r.metrics.r2)},
          {"pearson_corr", opt(r.metrics.pearson)},
          {"mae", r.metrics.mae},
          {"rmse", r.metrics.rmse},
          {"mape_pct", opt(r.metrics.mape_pct)},
          {"n_test", r.metrics.n},
          {"importance", std::move(imp)}};
}

struct AggregatePoint {
  YearMonth year_month;
  double actual_sum = 0.0;
  double predicted_sum = 0.0;
  std::optional<double> pct_error;  // (A - P) / A * 100
};

/// Monthly sums of back-transformed levels (expm1 of the log values).
/// Only rows with an observed actual contribute.
inline std::vector<AggregatePoint> aggregate_timeseries(const std::vector<Prediction>& preds) {
  std::map<YearMonth, AggregatePoint> by_month;
  for (const auto& p : preds) {
    if (!p.actual) continue;
    auto& a = by_month[p.year_month];
    a.year_month = p.year_month;
    a.actual_sum += std::expm1(*p.actual);
    a.predicted_sum += std::expm1(p.predicted);
  }
  std::vector<AggregatePoint> out;
  for (auto& [_, a] : by_month) {
    if (a.actual_sum != 0.0) a.pct_error = (a.actual_sum - a.predicted_sum) / a.actual_sum * 100.0;
    out.push_back(a);
  }
  return out;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregatePoint>& pts) {
  csv::write_record(out, {"year_month", "actual_sum", "predicted_sum", "pct_error"});
  for (const auto& p : pts)
    csv::write_record(out, {p.year_month.str(), csv::format_number(p.actual_sum),
                            csv::format_number(p.predicted_sum), csv::format_optional(p.pct_error)});
}

}  // namespace seatrade::eval
