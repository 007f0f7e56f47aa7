#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "seatrade/extrap.hpp"

using namespace seatrade;
using namespace seatrade::extrap;

namespace {

std::vector<YearMonth> months_from(YearMonth start, std::size_t n) {
  std::vector<YearMonth> m;
  for (std::size_t i = 0; i < n; ++i) m.push_back(start.plus(static_cast<int>(i)));
  return m;
}

const ChangeWindows kWindows{{2021, 1}, {2021, 6}, {2021, 8}, {2021, 12}};

}  // namespace

TEST(Anchor, ShiftsToFirstObservation) {
  std::vector<double> raw = {10, 11, 12};
  auto a = anchor(raw, 7.0);
  EXPECT_EQ(a.anchored, (std::vector<double>{7, 8, 9}));
  EXPECT_EQ(a.offset, 3.0);
  auto same = anchor(raw, 10.0);
  EXPECT_EQ(same.offset, 0.0);
  EXPECT_EQ(same.anchored, raw);
}

TEST(Anchor, MissingObservationIsError) {
  std::vector<double> raw = {1, 2};
  try {
    anchor(raw, std::nullopt);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "anchor unavailable");
  }
  EXPECT_THROW(anchor(std::vector<double>{}, 1.0), DataError);
  EXPECT_THROW(anchor(raw, std::nan("")), DataError);
}

TEST(Anchor, ExactAtAnchorConstantShiftAndIdempotent) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(12);
    for (auto& v : raw) v = u(rng);
    double obs = u(rng);
    auto a = anchor(raw, obs);
    EXPECT_EQ(a.anchored[0] - obs, 0.0);
    for (std::size_t i = 1; i < raw.size(); ++i) EXPECT_NEAR(a.anchored[i] - raw[i], -a.offset, 1e-12);
    auto again = anchor(a.anchored, obs);
    EXPECT_EQ(again.offset, 0.0);
    EXPECT_EQ(again.anchored, a.anchored);
  }
}

TEST(Anchor, SeriesUsesEarliestObservedMonth) {
  PortSeries s{"p", months_from({2021, 1}, 4), {5, 6, 7, 8}, {std::nullopt, 2.0, 3.0, std::nullopt}};
  auto a = anchor(s);
  EXPECT_EQ(a.anchor_month, (YearMonth{2021, 2}));
  EXPECT_EQ(a.anchored, (std::vector<double>{1, 2, 3, 4}));
  PortSeries none{"q", months_from({2021, 1}, 2), {1, 2}, {std::nullopt, std::nullopt}};
  EXPECT_THROW(anchor(none), DataError);
}

TEST(PctChange, Examples) {
  auto m = months_from({2021, 1}, 12);
  std::vector<double> flat(12, 19.0);
  EXPECT_EQ(pct_change(m, flat, kWindows).delta, 0.0);

  std::vector<double> step(12, 19.0);
  for (std::size_t i = 7; i < 12; ++i) step[i] = 19.2;
  auto e = pct_change(m, step, kWindows);
  EXPECT_NEAR(e.delta, 0.2, 1e-12);
  EXPECT_NEAR(e.pct, 20.0, 1e-9);
  EXPECT_EQ(e.n_pre, 6u);
  EXPECT_EQ(e.n_post, 5u);
}

TEST(PctChange, CutoffMonthExcludedAndEmptyWindowFails) {
  auto m = months_from({2021, 1}, 12);
  std::vector<double> v(12, 1.0);
  v[6] = 1000.0;  // 2021-07 lies between the windows
  EXPECT_EQ(pct_change(m, v, kWindows).delta, 0.0);
  auto short_m = months_from({2021, 1}, 6);
  EXPECT_THROW(pct_change(short_m, std::vector<double>(6, 1.0), kWindows), DataError);
  EXPECT_THROW(pct_change(m, v, ChangeWindows{{2021, 1}, {2021, 8}, {2021, 8}, {2021, 12}}), ConfigError);
}

TEST(PctChange, ConstantShiftInvarianceAndPostEquivariance) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(15, 2);
  auto m = months_from({2021, 1}, 12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(12);
    for (auto& x : v) x = z(rng);
    double base = pct_change(m, v, kWindows).delta;
    for (double c : {-5.0, 0.0, 13.7}) {
      auto shifted = v;
      for (auto& x : shifted) x += c;
      EXPECT_NEAR(pct_change(m, shifted, kWindows).delta, base, 1e-12);
      auto post = v;
      for (std::size_t i = 7; i < 12; ++i) post[i] += c;
      EXPECT_NEAR(pct_change(m, post, kWindows).delta, base + c, 1e-12);
    }
  }
}

TEST(PctChange, AnchoredEqualsRawBitForBit) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(15, 2);
  for (int trial = 0; trial < 100; ++trial) {
    PortSeries s{"p", months_from({2021, 1}, 12), std::vector<double>(12), {}};
    for (auto& x : s.predicted) x = z(rng);
    s.observed.assign(12, std::nullopt);
    s.observed[0] = z(rng);
    auto a = anchor(s);
    EXPECT_EQ(pct_change(a, kWindows).delta, pct_change(s, kWindows).delta);
  }
}

TEST(PctChange, LevelConventionReported) {
  auto m = months_from({2021, 1}, 12);
  std::vector<double> v(12, std::log1p(100.0));
  for (std::size_t i = 7; i < 12; ++i) v[i] = std::log1p(110.0);
  EXPECT_NEAR(pct_change(m, v, kWindows).pct_level, 10.0, 1e-9);
}

TEST(Windows, AroundCutoff) {
  auto w = windows_around({2022, 2}, 61, 34);
  EXPECT_EQ(w.pre_from, (YearMonth{2017, 1}));
  EXPECT_EQ(w.pre_to, (YearMonth{2022, 1}));
  EXPECT_EQ(w.post_from, (YearMonth{2022, 3}));
  EXPECT_EQ(w.post_to, (YearMonth{2024, 12}));
  ChangeWindows defaults;
  EXPECT_EQ(defaults.pre_from, w.pre_from);
  EXPECT_EQ(defaults.post_to, w.post_to);
}

TEST(GroupByPort, SortsAndRejectsDuplicates) {
  std::vector<eval::Prediction> preds = {{"b", {2021, 2}, 1.0, 2.0}, {"a", {2021, 3}, std::nullopt, 1.0},
                                         {"b", {2021, 1}, 3.0, 4.0}};
  auto g = group_by_port(preds);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[1].port_id, "b");
  EXPECT_EQ(g[1].months.front(), (YearMonth{2021, 1}));
  EXPECT_EQ(g[1].predicted, (std::vector<double>{4.0, 2.0}));
  preds.push_back({"a", {2021, 3}, 1.0, 1.0});
  EXPECT_THROW(group_by_port(preds), DataError);
}

TEST(Coverage, EightyPercentFilter) {
  panel::Panel p;
  auto add = [&](const std::string& id, int n) {
    for (int i = 0; i < n; ++i) {
      panel::PanelRow r;
      r.port_id = id;
      r.year_month = YearMonth{2020, 1}.plus(i);
      p.rows.push_back(r);
    }
  };
  add("full", 10);
  add("eight", 8);
  add("seven", 7);
  auto keep = ports_with_coverage(p, {2020, 1}, {2020, 10}, 0.8);
  EXPECT_EQ(keep, (std::set<std::string>{"eight", "full"}));
  EXPECT_THROW(ports_with_coverage(p, {2020, 1}, {2020, 10}, 1.5), ConfigError);
}

TEST(ChangesCsv, Columns) {
  ChangeEstimate e;
  e.port_id = "p";
  e.delta = 0.25;
  e.pct = 25.0;
  e.n_pre = 3;
  e.n_post = 2;
  e.pct_level = 28.5;
  std::ostringstream out;
  write_changes_csv(out, {e});
  EXPECT_EQ(out.str(), "port_id,delta_log,pct,n_pre,n_post,pct_level\np,0.25,25,3,2,28.5\n");
}
