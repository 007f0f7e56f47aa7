#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seatrade/calendar.hpp"
#include "seatrade/csv.hpp"
#include "seatrade/error.hpp"
#include "seatrade/eval.hpp"
#include "seatrade/extrap.hpp"
#include "seatrade/gbt.hpp"
#include "seatrade/log.hpp"
#include "seatrade/panel.hpp"
#include "seatrade/parallel.hpp"

// Fixed-effect simulation of spatial extrapolation:
//   Y_it = alpha_i + beta * X_it + eps_it,
// with training and test ports drawing alpha_i from disjoint ranges. A model
// trained on X alone cannot recover the test ports' levels, but anchoring on
// one observed month restores them and the pre/post window difference of
// predictions tracks the true change because alpha_i cancels.

namespace seatrade::mc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct McConfig {
  int n_train_ports = 30;
  int n_test_ports = 20;
  Range alpha_train{12.0, 18.0};
  Range alpha_test{6.0, 10.0};
  int n_months = 100;
  int n_reps = 100;
  double beta = 4.0;
  double noise_sd = 0.5;
  double x_mean = 0.0;
  double x_sd = 1.0;
  int cutoff_month = 50;  // months [0, cutoff) are pre, [cutoff, n_months) post
  std::uint64_t master_seed = 20240601;
  bool shuffle_x = false;  // placebo: permute X across the training rows
  gbt::HyperParams gbt;

  void validate() const {
    if (n_train_ports < 1 || n_test_ports < 2) throw ConfigError("mc: need >= 1 train and >= 2 test ports");
    if (n_months < 2 || n_reps < 1) throw ConfigError("mc: n_months >= 2 and n_reps >= 1 required");
    if (!(alpha_train.lo <= alpha_train.hi) || !(alpha_test.lo <= alpha_test.hi))
      throw ConfigError("mc: alpha range bounds reversed");
    if (!(alpha_train.hi < alpha_test.lo || alpha_test.hi < alpha_train.lo))
      throw ConfigError("mc: train and test alpha ranges must be disjoint");
    if (!(noise_sd >= 0.0) || !(x_sd >= 0.0)) throw ConfigError("mc: standard deviations must be >= 0");
    if (cutoff_month < 1 || cutoff_month >= n_months) throw ConfigError("mc: cutoff_month must split the months");
    gbt.validate();
  }
};

inline void to_json(nlohmann::json& j, const McConfig& c) {
  j = {{"n_train_ports", c.n_train_ports},
       {"n_test_ports", c.n_test_ports},
       {"alpha_train_range", {c.alpha_train.lo, c.alpha_train.hi}},
       {"alpha_test_range", {c.alpha_test.lo, c.alpha_test.hi}},
       {"n_months", c.n_months},
       {"n_reps", c.n_reps},
       {"beta", c.beta},
       {"noise_sd", c.noise_sd},
       {"x_mean", c.x_mean},
       {"x_sd", c.x_sd},
       {"cutoff_month", c.cutoff_month},
       {"master_seed", c.master_seed},
       {"shuffle_x", c.shuffle_x},
       {"gbt", c.gbt}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, McConfig& c) {
  static const std::vector<std::string> known = {
      "n_train_ports", "n_test_ports", "alpha_train_range", "alpha_test_range", "n_months",
      "n_reps",        "beta",         "noise_sd",          "x_mean",           "x_sd",
      "cutoff_month",  "master_seed",  "shuffle_x",         "gbt"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("mc config: unknown key '" + key + "'");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  auto range = [&](const char* key, Range& r) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError(std::string("mc config: ") + key + " must be [lo, hi]");
    r = {a[0].get<double>(), a[1].get<double>()};
  };
  get("n_train_ports", c.n_train_ports);
  get("n_test_ports", c.n_test_ports);
  range("alpha_train_range", c.alpha_train);
  range("alpha_test_range", c.alpha_test);
  get("n_months", c.n_months);
  get("n_reps", c.n_reps);
  get("beta", c.beta);
  get("noise_sd", c.noise_sd);
  get("x_mean", c.x_mean);
  get("x_sd", c.x_sd);
  get("cutoff_month", c.cutoff_month);
  get("master_seed", c.master_seed);
  get("shuffle_x", c.shuffle_x);
  get("gbt", c.gbt);
}

/// Seed of replication `rep`: one splitmix64 step from master_seed + rep.
inline std::uint64_t rep_seed(std::uint64_t master_seed, int rep) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(rep) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr YearMonth kFirstMonth{2000, 1};

struct SimulatedRep {
  panel::Panel train;
  panel::Panel test;
  std::vector<std::string> test_ports;
  std::vector<double> true_delta;  // per test port: mean(Y post) - mean(Y pre)
  std::vector<double> test_alpha;
};

inline extrap::ChangeWindows mc_windows(const McConfig& c) {
  return {kFirstMonth, kFirstMonth.plus(c.cutoff_month - 1), kFirstMonth.plus(c.cutoff_month),
          kFirstMonth.plus(c.n_months - 1)};
}

inline SimulatedRep simulate_rep(const McConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha_train(config.alpha_train.lo, config.alpha_train.hi);
  std::uniform_real_distribution<double> alpha_test(config.alpha_test.lo, config.alpha_test.hi);
  std::normal_distribution<double> x_dist(config.x_mean, config.x_sd);
  std::normal_distribution<double> noise(0.0, config.noise_sd);
  auto draw = [&](std::normal_distribution<double>& d, double sd) { return sd > 0.0 ? d(rng) : d.mean(); };

  std::vector<double> alphas;
  for (int i = 0; i < config.n_train_ports; ++i) alphas.push_back(alpha_train(rng));
  for (int i = 0; i < config.n_test_ports; ++i) alphas.push_back(alpha_test(rng));

  SimulatedRep rep;
  rep.train.sat_columns = {"x"};
  rep.test.sat_columns = {"x"};
  char id[32];
  for (std::size_t p = 0; p < alphas.size(); ++p) {
    bool is_test = p >= static_cast<std::size_t>(config.n_train_ports);
    auto idx = is_test ? p - static_cast<std::size_t>(config.n_train_ports) : p;
    std::snprintf(id, sizeof id, "%s_%03zu", is_test ? "test" : "train", idx);
    double pre_sum = 0.0, post_sum = 0.0;
    for (int t = 0; t < config.n_months; ++t) {
      double x = draw(x_dist, config.x_sd);
      double y = alphas[p] + config.beta * x + draw(noise, config.noise_sd);
      (t < config.cutoff_month ? pre_sum : post_sum) += y;
      panel::PanelRow row;
      row.port_id = id;
      row.year_month = kFirstMonth.plus(t);
      row.region = is_test ? "test" : "train";
      row.y_value_log = y;
      row.features = {x};
      (is_test ? rep.test : rep.train).rows.push_back(std::move(row));
    }
    if (is_test) {
      rep.test_ports.push_back(id);
      rep.test_alpha.push_back(alphas[p]);
      rep.true_delta.push_back(post_sum / (config.n_months - config.cutoff_month) - pre_sum / config.cutoff_month);
    }
  }
  return rep;
}

struct RepResult {
  int rep = 0;
  bool ok = false;
  double raw_r2 = std::nan("");
  double anchored_r2 = std::nan("");
  double delta_slope = std::nan("");
  double delta_corr = std::nan("");
  std::vector<double> true_delta;
  std::vector<double> predicted_delta;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation across reps
};

struct McResult {
  std::vector<RepResult> reps;
  std::size_t n_ok = 0;
  Summary raw_r2, anchored_r2, delta_slope, delta_corr;
  double pooled_delta_slope = 0.0;  // one regression over every rep's test ports
  double pooled_delta_corr = 0.0;
};

/// OLS slope of y on x and their Pearson correlation.
inline std::pair<double, double> slope_and_corr(std::span<const double> x, std::span<const double> y) {
  auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("slope_and_corr: zero variance");
  return {sxy / sxx, sxy / std::sqrt(sxx * syy)};
}

/// Fits on the training ports, predicts the test ports, and scores levels,
/// anchored levels and pre/post changes.
inline RepResult evaluate_rep(const McConfig& config, int rep_index) {
  auto seed = rep_seed(config.master_seed, rep_index);
  auto sim = simulate_rep(config, seed);
  if (config.shuffle_x) sim.train = eval::placebo_shuffle(sim.train, {"x"}, seed ^ 0x5851F42D4C957F2DULL);

  auto params = config.gbt;
  params.seed = seed;
  auto model = gbt::fit(panel::design_matrix(sim.train), panel::targets(sim.train, panel::Target::value), params);
  auto pred = gbt::predict(model, panel::design_matrix(sim.test));
  auto actual = panel::targets(sim.test, panel::Target::value);

  RepResult r;
  r.rep = rep_index;
  auto raw = eval::metrics(actual, pred);
  if (!raw.r2) throw DataError("mc: undefined raw r2");
  r.raw_r2 = *raw.r2;

  auto preds = eval::make_predictions(sim.test, pred, panel::Target::value);
  auto windows = mc_windows(config);
  std::vector<double> anchored_all;
  std::vector<double> actual_all;
  for (const auto& series : extrap::group_by_port(preds)) {
    auto a = extrap::anchor(series);
    anchored_all.insert(anchored_all.end(), a.anchored.begin(), a.anchored.end());
    for (const auto& o : series.observed) actual_all.push_back(*o);
    r.predicted_delta.push_back(extrap::pct_change(series, windows).delta);
  }
  auto anchored = eval::metrics(actual_all, anchored_all);
  if (!anchored.r2) throw DataError("mc: undefined anchored r2");
  r.anchored_r2 = *anchored.r2;

  // group_by_port orders ports by id, which matches simulation order.
  r.true_delta = sim.true_delta;
  std::tie(r.delta_slope, r.delta_corr) = slope_and_corr(r.true_delta, r.predicted_delta);
  r.ok = true;
  return r;
}

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

/// Runs every replication (in parallel up to `jobs`) and aggregates in rep order.
/// Fails unless at least 95% of replications succeed.
inline McResult run_mc(const McConfig& config, std::size_t jobs = 1) {
  config.validate();
  McResult result;
  result.reps.resize(static_cast<std::size_t>(config.n_reps));
  parallel_for(result.reps.size(), jobs, [&](std::size_t i) {
    try {
      result.reps[i] = evaluate_rep(config, static_cast<int>(i));
    } catch (const DataError& e) {
      log().warn("mc rep {} failed: {}", i, e.what());
      result.reps[i].rep = static_cast<int>(i);
      result.reps[i].ok = false;
    }
  });

  std::vector<double> raw, anch, slope, corr, pooled_true, pooled_pred;
  for (const auto& r : result.reps) {
    if (!r.ok) continue;
    ++result.n_ok;
    raw.push_back(r.raw_r2);
    anch.push_back(r.anchored_r2);
    slope.push_back(r.delta_slope);
    corr.push_back(r.delta_corr);
    pooled_true.insert(pooled_true.end(), r.true_delta.begin(), r.true_delta.end());
    pooled_pred.insert(pooled_pred.end(), r.predicted_delta.begin(), r.predicted_delta.end());
  }
  if (static_cast<double>(result.n_ok) < 0.95 * config.n_reps)
    throw DataError("mc: only " + std::to_string(result.n_ok) + " of " + std::to_string(config.n_reps) +
                    " replications succeeded");
  result.raw_r2 = summarize(raw);
  result.anchored_r2 = summarize(anch);
  result.delta_slope = summarize(slope);
  result.delta_corr = summarize(corr);
  std::tie(result.pooled_delta_slope, result.pooled_delta_corr) = slope_and_corr(pooled_true, pooled_pred);
  return result;
}

inline void write_results_csv(std::ostream& out, const McResult& result) {
  csv::write_record(out, {"rep", "raw_r2", "anchored_r2", "delta_slope", "delta_corr"});
  for (const auto& r : result.reps)
    csv::write_record(out, {std::to_string(r.rep), csv::format_optional(r.raw_r2),
                            csv::format_optional(r.anchored_r2), csv::format_optional(r.delta_slope),
                            csv::format_optional(r.delta_corr)});
}

}  // namespace seatrade::mc
