#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "seatrade/mc.hpp"

using namespace seatrade;
using namespace seatrade::mc;

namespace {

McConfig small_config(int reps) {
  McConfig c;
  c.n_reps = reps;
  c.gbt.n_rounds = 200;
  return c;
}

double y_of(const panel::PanelRow& r) { return *r.y_value_log; }

}  // namespace

TEST(McConfig, ValidatesRanges) {
  McConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha_test = {11.0, 13.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.cutoff_month = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.n_test_ports = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(McConfig, JsonRoundTripAndUnknownKeys) {
  McConfig c;
  c.beta = 2.5;
  c.alpha_test = {1.0, 2.0};
  c.gbt.max_depth = 3;
  nlohmann::json j = c;
  auto back = j.get<McConfig>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  auto partial = nlohmann::json::parse(R"({"n_reps": 7})").get<McConfig>();
  EXPECT_EQ(partial.n_reps, 7);
  EXPECT_EQ(partial.n_train_ports, 30);
  EXPECT_THROW(nlohmann::json::parse(R"({"n_rep": 7})").get<McConfig>(), ConfigError);
  EXPECT_THROW(nlohmann::json::parse(R"({"alpha_test_range": [1]})").get<McConfig>(), ConfigError);
}

TEST(RepSeed, DistinctAndStable) {
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 1000; ++r) seeds.insert(rep_seed(42, r));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(rep_seed(42, 3), rep_seed(42, 3));
  EXPECT_NE(rep_seed(42, 3), rep_seed(43, 3));
}

TEST(Simulate, ShapeAndIds) {
  McConfig c;
  auto sim = simulate_rep(c, 1);
  EXPECT_EQ(sim.train.rows.size(), 30u * 100u);
  EXPECT_EQ(sim.test.rows.size(), 20u * 100u);
  EXPECT_EQ(sim.test_ports.size(), 20u);
  EXPECT_EQ(sim.test_ports.front(), "test_000");
  EXPECT_EQ(sim.train.feature_names(), (std::vector<std::string>{"x"}));
}

TEST(Simulate, NoNoiseNoSlopeGivesPureFixedEffects) {
  McConfig c;
  c.noise_sd = 0.0;
  c.beta = 0.0;
  auto sim = simulate_rep(c, 5);
  for (double d : sim.true_delta) EXPECT_EQ(d, 0.0);
  for (std::size_t p = 0; p < sim.test_ports.size(); ++p)
    for (std::size_t t = 0; t < 100; ++t) EXPECT_EQ(y_of(sim.test.rows[p * 100 + t]), sim.test_alpha[p]);
}

TEST(Simulate, NoiselessSupportIsDisjoint) {
  McConfig c;
  c.noise_sd = 0.0;
  auto sim = simulate_rep(c, 9);
  double x_min = 1e300, x_max = -1e300;
  for (const auto* p : {&sim.train, &sim.test})
    for (const auto& r : p->rows) {
      x_min = std::min(x_min, r.features[0]);
      x_max = std::max(x_max, r.features[0]);
    }
  for (const auto& r : sim.test.rows) {
    EXPECT_GE(y_of(r), c.alpha_test.lo + c.beta * x_min);
    EXPECT_LE(y_of(r), c.alpha_test.hi + c.beta * x_max);
  }
  for (double a : sim.test_alpha) {
    EXPECT_GE(a, c.alpha_test.lo);
    EXPECT_LE(a, c.alpha_test.hi);
  }
  // Each test row's fixed effect lies below every training port's.
  for (std::size_t i = 0; i < sim.test.rows.size(); ++i) {
    double alpha = y_of(sim.test.rows[i]) - c.beta * sim.test.rows[i].features[0];
    EXPECT_LT(alpha, c.alpha_train.lo);
  }
  for (const auto& r : sim.train.rows) EXPECT_GE(y_of(r) - c.beta * r.features[0], c.alpha_train.lo - 1e-9);
}

TEST(Simulate, Deterministic) {
  McConfig c;
  auto a = simulate_rep(c, 77), b = simulate_rep(c, 77);
  ASSERT_EQ(a.test.rows.size(), b.test.rows.size());
  for (std::size_t i = 0; i < a.test.rows.size(); ++i) {
    EXPECT_EQ(a.test.rows[i].features, b.test.rows[i].features);
    EXPECT_EQ(a.test.rows[i].y_value_log, b.test.rows[i].y_value_log);
  }
  EXPECT_EQ(a.true_delta, b.true_delta);
  EXPECT_NE(simulate_rep(c, 78).true_delta, a.true_delta);
}

TEST(Differencing, LinearPredictorRecoversTrueChangeExactly) {
  McConfig c;
  c.noise_sd = 0.0;
  auto sim = simulate_rep(c, 3);
  auto windows = mc_windows(c);
  for (double alpha_hat : {0.0, 15.0, -4.2}) {
    std::vector<double> pred;
    for (const auto& r : sim.test.rows) pred.push_back(alpha_hat + c.beta * r.features[0]);
    auto series = extrap::group_by_port(eval::make_predictions(sim.test, pred, panel::Target::value));
    ASSERT_EQ(series.size(), sim.true_delta.size());
    for (std::size_t p = 0; p < series.size(); ++p)
      EXPECT_NEAR(extrap::pct_change(series[p], windows).delta, sim.true_delta[p], 1e-12);
  }
}

TEST(SlopeAndCorr, KnownLine) {
  std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  auto [slope, corr] = slope_and_corr(x, y);
  EXPECT_DOUBLE_EQ(slope, 2.0);
  EXPECT_DOUBLE_EQ(corr, 1.0);
  EXPECT_THROW(slope_and_corr(x, std::vector<double>(4, 1.0)), DataError);
}

TEST(RunMc, NoiselessLimitRecoversChanges) {
  auto c = small_config(4);
  c.noise_sd = 0.0;
  c.gbt.n_rounds = 500;
  auto r = run_mc(c, 1);
  EXPECT_NEAR(r.delta_slope.mean, 1.0, 1e-3);
  EXPECT_NEAR(r.delta_corr.mean, 1.0, 1e-3);
}

TEST(RunMc, ShuffledFeatureDestroysChangeSignal) {
  auto c = small_config(12);
  c.shuffle_x = true;
  auto r = run_mc(c, 1);
  EXPECT_LT(std::abs(r.delta_corr.mean), 0.15);
  EXPECT_LT(std::abs(r.pooled_delta_corr), 0.15);
}

TEST(RunMc, RawFailsAnchoredRecovers) {
  auto r = run_mc(small_config(6), 1);
  EXPECT_EQ(r.n_ok, 6u);
  EXPECT_LT(r.raw_r2.mean, 0.0);
  EXPECT_GT(r.anchored_r2.mean, 0.8);
}

TEST(RunMc, IndependentOfJobCount) {
  auto c = small_config(3);
  std::ostringstream a, b;
  write_results_csv(a, run_mc(c, 1));
  write_results_csv(b, run_mc(c, 3));
  EXPECT_EQ(a.str(), b.str());
  auto text = a.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
