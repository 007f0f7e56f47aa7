#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/eval.hpp"
#include "seatrade/panel.hpp"

namespace seatrade::extrap {

/// Monthly predictions of one port, ascending by month.
struct PortSeries {
  std::string port_id;
  std::vector<YearMonth> months;
  std::vector<double> predicted;
  std::vector<std::optional<double>> observed;
};

inline std::vector<PortSeries> group_by_port(const std::vector<eval::Prediction>& preds) {
  std::map<std::string, std::map<YearMonth, const eval::Prediction*>> grouped;
  for (const auto& p : preds) {
    if (!grouped[p.port_id].emplace(p.year_month, &p).second)
      throw DataError("duplicate prediction for " + p.port_id + " " + p.year_month.str());
  }
  std::vector<PortSeries> out;
  for (const auto& [port, months] : grouped) {
    PortSeries s{port, {}, {}, {}};
    for (const auto& [ym, p] : months) {
      s.months.push_back(ym);
      s.predicted.push_back(p->predicted);
      s.observed.push_back(p->actual);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct AnchoredSeries {
  std::string port_id;
  std::vector<YearMonth> months;
  std::vector<double> raw;
  std::vector<double> anchored;
  YearMonth anchor_month;
  double observed_first = 0.0;
  double offset = 0.0;  // raw[anchor] - observed_first
};

/// Shifts a series by the constant that makes its anchor month match the observation.
inline AnchoredSeries anchor_at(std::string port_id, std::vector<YearMonth> months, std::vector<double> raw,
                                std::size_t anchor_index, double observed) {
  if (raw.empty() || anchor_index >= raw.size()) throw DataError("anchor: empty series");
  if (!std::isfinite(observed)) throw DataError("anchor unavailable");
  AnchoredSeries s;
  s.port_id = std::move(port_id);
  s.anchor_month = months.empty() ? YearMonth{} : months[anchor_index];
  s.observed_first = observed;
  s.offset = raw[anchor_index] - observed;
  s.anchored.reserve(raw.size());
  for (double v : raw) s.anchored.push_back(v - s.offset);
  // Exact equality at the anchor regardless of rounding in raw - offset.
  s.anchored[anchor_index] = observed;
  s.months = std::move(months);
  s.raw = std::move(raw);
  return s;
}

/// Anchors on the first element of the series.
inline AnchoredSeries anchor(std::span<const double> raw, std::optional<double> observed_first) {
  if (!observed_first) throw DataError("anchor unavailable");
  return anchor_at({}, {}, std::vector<double>(raw.begin(), raw.end()), 0, *observed_first);
}

/// Anchors on the earliest month that has both a prediction and an observation.
inline AnchoredSeries anchor(const PortSeries& series) {
  for (std::size_t i = 0; i < series.observed.size(); ++i)
    if (series.observed[i]) return anchor_at(series.port_id, series.months, series.predicted, i, *series.observed[i]);
  throw DataError("anchor unavailable for " + series.port_id);
}

inline void write_anchored_csv(std::ostream& out, const std::vector<AnchoredSeries>& series) {
  csv::write_record(out, {"port_id", "year_month", "raw_pred", "anchored_pred", "offset"});
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.raw.size(); ++i)
      csv::write_record(out, {s.port_id, s.months[i].str(), csv::format_number(s.raw[i]),
                              csv::format_number(s.anchored[i]), csv::format_number(s.offset)});
}

/// Closed month ranges of the comparison windows.
struct ChangeWindows {
  YearMonth pre_from{2017, 1};
  YearMonth pre_to{2022, 1};
  YearMonth post_from{2022, 3};
  YearMonth post_to{2024, 12};

  void validate() const {
    if (pre_to < pre_from || post_to < post_from) throw ConfigError("change window ends before it starts");
    if (!(pre_to < post_from || post_to < pre_from)) throw ConfigError("change windows overlap");
  }
};

/// Windows of the given lengths on either side of `cutoff`, which belongs to neither.
inline ChangeWindows windows_around(YearMonth cutoff, int pre_len, int post_len) {
  if (pre_len < 1 || post_len < 1) throw ConfigError("window lengths must be positive");
  return {cutoff.plus(-pre_len), cutoff.plus(-1), cutoff.plus(1), cutoff.plus(post_len)};
}

struct ChangeEstimate {
  std::string port_id;
  ChangeWindows windows;
  double delta = 0.0;       // mean(post) - mean(pre) on the log scale
  double pct = 0.0;         // delta in log points (x100)
  double pct_level = 0.0;   // 100 * (mean level post / mean level pre - 1), levels = expm1
  std::size_t n_pre = 0;
  std::size_t n_post = 0;
};

/// Difference of window means of a log-scale prediction series.
inline ChangeEstimate pct_change(std::span<const YearMonth> months, std::span<const double> pred,
                                 const ChangeWindows& w) {
  w.validate();
  if (months.size() != pred.size()) throw DataError("pct_change: months and values differ in length");
  double pre_sum = 0.0, post_sum = 0.0, pre_level = 0.0, post_level = 0.0;
  ChangeEstimate e;
  e.windows = w;
  for (std::size_t i = 0; i < months.size(); ++i) {
    if (months[i] >= w.pre_from && months[i] <= w.pre_to) {
      pre_sum += pred[i];
      pre_level += std::expm1(pred[i]);
      ++e.n_pre;
    } else if (months[i] >= w.post_from && months[i] <= w.post_to) {
      post_sum += pred[i];
      post_level += std::expm1(pred[i]);
      ++e.n_post;
    }
  }
  if (e.n_pre == 0 || e.n_post == 0) throw DataError("pct_change: empty window");
  double pre_mean = pre_sum / static_cast<double>(e.n_pre);
  double post_mean = post_sum / static_cast<double>(e.n_post);
  e.delta = post_mean - pre_mean;
  e.pct = 100.0 * e.delta;
  double pre_level_mean = pre_level / static_cast<double>(e.n_pre);
  double post_level_mean = post_level / static_cast<double>(e.n_post);
  e.pct_level = pre_level_mean != 0.0 ? 100.0 * (post_level_mean / pre_level_mean - 1.0) : std::nan("");
  return e;
}

inline ChangeEstimate pct_change(const PortSeries& s, const ChangeWindows& w) {
  auto e = pct_change(s.months, s.predicted, w);
  e.port_id = s.port_id;
  return e;
}

/// Change estimate of an anchored series. The anchoring offset is a constant
/// and cancels in the window difference, so this differences the raw component
/// and agrees bit-for-bit with the estimate on the unanchored series.
inline ChangeEstimate pct_change(const AnchoredSeries& s, const ChangeWindows& w) {
  auto e = pct_change(s.months, s.raw, w);
  e.port_id = s.port_id;
  return e;
}

inline void write_changes_csv(std::ostream& out, const std::vector<ChangeEstimate>& changes) {
  csv::write_record(out, {"port_id", "delta_log", "pct", "n_pre", "n_post", "pct_level"});
  for (const auto& c : changes)
    csv::write_record(out, {c.port_id, csv::format_number(c.delta), csv::format_number(c.pct),
                            std::to_string(c.n_pre), std::to_string(c.n_post), csv::format_optional(c.pct_level)});
}

/// Ports with at least `min_coverage` of the months in [from, to] present in the panel.
inline std::set<std::string> ports_with_coverage(const panel::Panel& p, YearMonth from, YearMonth to,
                                                 double min_coverage) {
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw ConfigError("min_coverage must be in [0,1]");
  int total = months_between(from, to);
  if (total == 0) throw ConfigError("coverage window is empty");
  std::map<std::string, std::set<YearMonth>> seen;
  for (const auto& r : p.rows) {
    seen[r.port_id];
    if (r.year_month >= from && r.year_month <= to) seen[r.port_id].insert(r.year_month);
  }
  std::set<std::string> keep;
  for (const auto& [port, months] : seen)
    if (static_cast<double>(months.size()) / total >= min_coverage) keep.insert(port);
  return keep;
}

}  // namespace seatrade::extrap
