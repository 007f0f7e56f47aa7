#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "seatrade/log.hpp"
#include "seatrade/parallel.hpp"
#include "seatrade/seatrade.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seatrade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t jobs = default_jobs();
  std::string out_dir = ".";
};

struct ExtractOpts {
  std::string rasters;
  double lit_threshold = raster::kDefaultLitThreshold;
  std::string ntl_std_mode = "spatial";
};

struct PanelOpts {
  std::string features, wpi, trade;
  std::string spec = "sat";
  std::string sizes = "all";
  double train_frac = 0.70;
  std::string test_start;
  std::string leave_out_region;
};

struct TrainOpts {
  std::string panel;
  std::string target = "value";
  gbt::HyperParams params;
};

struct PredictOpts {
  std::string model, panel, features, wpi;
  std::string spec = "sat";
  std::string target = "value";
};

struct EvalOpts {
  std::string predictions, model;
  std::string spec = "sat";
  std::string target = "value";
};

struct PlaceboOpts {
  std::string panel;
  std::string columns;
  double train_frac = 0.70;
  std::string test_start;
  std::string target = "value";
  gbt::HyperParams params;
};

struct ExtrapOpts {
  std::string predictions;
  std::string cutoff = "2022-02";
  std::string pre_from, pre_to, post_from, post_to;
  double min_coverage = 0.8;
  bool anchor = false;
};

struct McOpts {
  std::optional<int> reps;
};

// ---------------------------------------------------------------------------
// Helpers

fs::path require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string("--") + flag + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string("--") + flag + ": no such file: " + path);
  return path;
}

fs::path require_dir(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string("--") + flag + " is required");
  if (!fs::is_directory(path)) throw ConfigError(std::string("--") + flag + ": no such directory: " + path);
  return path;
}

YearMonth month_flag(const std::string& text, const char* flag) {
  try {
    return YearMonth::parse(text);
  } catch (const DataError& e) {
    throw ConfigError(std::string("--") + flag + ": " + e.what());
  }
}

csv::Table read_table(const fs::path& path) { return csv::Table::read_file(path.string()); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

fs::path output_dir(const Common& c) {
  fs::path dir = c.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory " + dir.string());
  return dir;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  fill(out);
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
  log().info("wrote {}", path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

panel::Panel load_panel(const std::string& path, const char* flag) {
  return panel::read_panel_csv(read_table(require_file(path, flag)));
}

gbt::TreeEnsemble load_model(const std::string& path) {
  return gbt::ensemble_from_json(read_json(require_file(path, "model")));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) items.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return items;
}

void add_gbt_options(CLI::App* sub, gbt::HyperParams& p) {
  sub->add_option("--rounds", p.n_rounds, "Boosting rounds");
  sub->add_option("--max-depth", p.max_depth, "Maximum tree depth");
  sub->add_option("--learning-rate", p.learning_rate, "Shrinkage per round");
  sub->add_option("--min-child-weight", p.min_child_weight, "Minimum hessian sum per leaf");
  sub->add_option("--l2", p.l2_reg, "L2 penalty on leaf values");
  sub->add_option("--subsample-rows", p.subsample_rows, "Row fraction per round");
  sub->add_option("--subsample-cols", p.subsample_cols, "Column fraction per tree");
  sub->add_option("--bins", p.n_bins, "Histogram bins per feature");
}

// ---------------------------------------------------------------------------
// Config files

std::string config_value(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("config key '" + key + "' must be a string, number or boolean");
}

/// Fills options not given on the command line from a flat JSON object whose
/// keys are long option names with '_' for '-'.
void apply_config(const json& j, CLI::App& app, CLI::App& sub) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = "--" + key;
    for (auto& ch : name)
      if (ch == '_') ch = '-';
    CLI::Option* opt = sub.get_option_no_throw(name);
    if (!opt) opt = app.get_option_no_throw(name);
    if (!opt || name == "--config" || name == "--help") throw ConfigError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(config_value(key, value));
    opt->run_callback();
  }
}

json resolved_options(const CLI::App& app, const CLI::App& sub) {
  json j = {{"command", sub.get_name()}};
  for (const CLI::App* a : {&app, &sub}) {
    for (const CLI::Option* opt : a->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      std::string value = opt->get_default_str();
      if (opt->count() > 0) {
        value.clear();
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      }
      j[name] = value;
    }
  }
  return j;
}

void print_resolved(const json& config, std::uint64_t seed) {
  std::cerr << "config: " << config.dump() << '\n' << "seed: " << seed << '\n';
}

// ---------------------------------------------------------------------------
// Commands

void cmd_extract(const ExtractOpts& o, const Common& c) {
  auto root = require_dir(o.rasters, "rasters");
  raster::FeatureOptions options;
  options.lit_threshold = o.lit_threshold;
  options.ntl_std_mode = o.ntl_std_mode == "temporal" ? raster::NtlStdMode::temporal : raster::NtlStdMode::spatial;
  rgrid::ExtractStats stats;
  auto rows = rgrid::extract(root, options, c.jobs, &stats);
  log().info("extract: {} grids read, {} skipped, {} feature rows", stats.files_read, stats.files_skipped,
             rows.size());
  write_file(output_dir(c) / "features.csv", [&](std::ostream& out) { rgrid::write_features_csv(out, rows); });
}

void cmd_panel(const PanelOpts& o, const Common& c) {
  auto spec = panel::parse_feature_spec(o.spec);
  auto sizes = panel::parse_sizes(o.sizes);
  if (!o.test_start.empty() && !o.leave_out_region.empty())
    throw ConfigError("--test-start and --leave-out-region are mutually exclusive");

  std::vector<rgrid::FeatureRow> sat;
  if (panel::uses_satellite(spec)) sat = rgrid::read_features_csv(read_table(require_file(o.features, "features")));
  std::optional<panel::WpiTable> wpi;
  if (panel::uses_port(spec) || !o.wpi.empty()) wpi = panel::read_wpi_csv(read_table(require_file(o.wpi, "wpi")));
  auto trade = panel::read_trade_csv(read_table(require_file(o.trade, "trade")));

  auto p = panel::assemble_panel(sat, wpi ? &*wpi : nullptr, trade, spec);
  if (sizes.size() < 4) p = panel::filter_size(p, sizes);

  panel::Split split;
  if (!o.leave_out_region.empty()) {
    split = panel::leave_region_out(p, o.leave_out_region);
  } else if (!o.test_start.empty()) {
    split = panel::chrono_split_at(p, month_flag(o.test_start, "test-start"));
  } else {
    split = panel::chrono_split(p, o.train_frac);
  }
  log().info("panel: {} rows, train {} rows, test {} rows", p.rows.size(), split.train.rows.size(),
             split.test.rows.size());

  auto dir = output_dir(c);
  write_file(dir / "panel.csv", [&](std::ostream& out) { panel::write_panel_csv(out, p); });
  write_file(dir / "train_panel.csv", [&](std::ostream& out) { panel::write_panel_csv(out, split.train); });
  write_file(dir / "test_panel.csv", [&](std::ostream& out) { panel::write_panel_csv(out, split.test); });
}

gbt::TreeEnsemble fit_panel(const panel::Panel& p, panel::Target target, gbt::HyperParams params,
                            std::uint64_t seed) {
  params.seed = seed;
  return gbt::fit(panel::design_matrix(p), panel::targets(p, target), params);
}

void cmd_train(const TrainOpts& o, const Common& c) {
  auto target = panel::parse_target(o.target);
  o.params.validate();
  auto p = load_panel(o.panel, "panel");
  auto model = fit_panel(p, target, o.params, c.seed);
  log().info("train: {} rows, {} features, {} trees", p.rows.size(), model.feature_names.size(),
             model.trees.size());
  write_json(output_dir(c) / "model.json", gbt::to_json(model));
}

void cmd_predict(const PredictOpts& o, const Common& c) {
  auto target = panel::parse_target(o.target);
  auto model = load_model(o.model);
  panel::Panel p;
  if (!o.panel.empty()) {
    if (!o.features.empty()) throw ConfigError("--panel and --features are mutually exclusive");
    p = load_panel(o.panel, "panel");
  } else {
    auto spec = panel::parse_feature_spec(o.spec);
    auto sat = rgrid::read_features_csv(read_table(require_file(o.features, "features")));
    std::optional<panel::WpiTable> wpi;
    if (panel::uses_port(spec)) wpi = panel::read_wpi_csv(read_table(require_file(o.wpi, "wpi")));
    p = panel::assemble_unlabeled(sat, wpi ? &*wpi : nullptr, spec);
  }
  auto pred = gbt::predict(model, panel::design_matrix(p));
  auto preds = eval::make_predictions(p, pred, target);
  log().info("predict: {} rows", preds.size());
  write_file(output_dir(c) / "predictions.csv", [&](std::ostream& out) { eval::write_predictions_csv(out, preds); });
}

void write_report(const fs::path& dir, const std::string& stem, const eval::EvalReport& report,
                  const std::vector<eval::Prediction>& preds) {
  write_json(dir / (stem + ".json"), eval::to_json(report));
  write_file(dir / "aggregate_timeseries.csv",
             [&](std::ostream& out) { eval::write_aggregate_csv(out, eval::aggregate_timeseries(preds)); });
}

void cmd_eval(const EvalOpts& o, const Common& c) {
  auto preds = eval::read_predictions_csv(read_table(require_file(o.predictions, "predictions")));
  eval::EvalReport report{o.spec, o.target, eval::metrics(preds), {}};
  if (!o.model.empty()) report.importance = eval::ranked(gbt::gain_importance(load_model(o.model)));
  log().info("eval: n={} r2={}", report.metrics.n,
             report.metrics.r2 ? fmt::format("{:.4f}", *report.metrics.r2) : "undefined");
  write_report(output_dir(c), "report", report, preds);
}

void cmd_placebo(const PlaceboOpts& o, const Common& c) {
  auto target = panel::parse_target(o.target);
  o.params.validate();
  auto p = load_panel(o.panel, "panel");
  auto columns = o.columns.empty() ? p.sat_columns : split_list(o.columns);
  if (columns.empty()) throw ConfigError("placebo: no columns to shuffle");
  auto shuffled = eval::placebo_shuffle(p, columns, c.seed);
  auto split = o.test_start.empty() ? panel::chrono_split(shuffled, o.train_frac)
                                    : panel::chrono_split_at(shuffled, month_flag(o.test_start, "test-start"));
  auto model = fit_panel(split.train, target, o.params, c.seed);
  const auto& test = split.test;
  auto preds = eval::make_predictions(test, gbt::predict(model, panel::design_matrix(test)), target);
  eval::EvalReport report{"placebo", o.target, eval::metrics(preds), eval::ranked(gbt::gain_importance(model))};
  log().info("placebo: shuffled {} columns, test r2={}", columns.size(),
             report.metrics.r2 ? fmt::format("{:.4f}", *report.metrics.r2) : "undefined");
  auto dir = output_dir(c);
  write_file(dir / "placebo_predictions.csv", [&](std::ostream& out) { eval::write_predictions_csv(out, preds); });
  write_json(dir / "placebo_report.json", eval::to_json(report));
}

void cmd_extrap(const ExtrapOpts& o, const Common& c) {
  auto preds = eval::read_predictions_csv(read_table(require_file(o.predictions, "predictions")));
  if (preds.empty()) throw DataError("no predictions in " + o.predictions);
  auto series = extrap::group_by_port(preds);

  YearMonth first = preds.front().year_month, last = first;
  for (const auto& p : preds) {
    first = std::min(first, p.year_month);
    last = std::max(last, p.year_month);
  }
  auto cutoff = month_flag(o.cutoff, "cutoff");
  extrap::ChangeWindows w{o.pre_from.empty() ? first : month_flag(o.pre_from, "pre-from"),
                          o.pre_to.empty() ? cutoff.plus(-1) : month_flag(o.pre_to, "pre-to"),
                          o.post_from.empty() ? cutoff.plus(1) : month_flag(o.post_from, "post-from"),
                          o.post_to.empty() ? last : month_flag(o.post_to, "post-to")};
  w.validate();
  log().info("extrap: pre {}..{}, post {}..{}", w.pre_from.str(), w.pre_to.str(), w.post_from.str(),
             w.post_to.str());

  panel::Panel availability;
  for (const auto& p : preds) availability.rows.push_back({p.port_id, p.year_month, {}, {}, {}, {}, {}});
  auto keep = extrap::ports_with_coverage(availability, std::min(w.pre_from, w.post_from),
                                          std::max(w.pre_to, w.post_to), o.min_coverage);

  std::vector<extrap::ChangeEstimate> changes;
  std::vector<extrap::AnchoredSeries> anchored;
  for (const auto& s : series) {
    if (!keep.contains(s.port_id)) {
      log().warn("extrap: {} below {:.0f}% coverage, skipped", s.port_id, 100.0 * o.min_coverage);
      continue;
    }
    try {
      changes.push_back(extrap::pct_change(s, w));
    } catch (const DataError& e) {
      log().warn("extrap: {}: {}", s.port_id, e.what());
      continue;
    }
    if (o.anchor) {
      try {
        anchored.push_back(extrap::anchor(s));
      } catch (const DataError& e) {
        log().warn("extrap: {}", e.what());
      }
    }
  }
  if (changes.empty()) throw DataError("extrap: no port has both change windows covered");

  auto dir = output_dir(c);
  write_file(dir / "changes.csv", [&](std::ostream& out) { extrap::write_changes_csv(out, changes); });
  if (o.anchor)
    write_file(dir / "anchored.csv", [&](std::ostream& out) { extrap::write_anchored_csv(out, anchored); });
}

void print_mc_summary(const mc::McResult& r, std::size_t n_reps) {
  fmt::print("{:<16}{:>12}{:>12}\n", "quantity", "mean", "sd");
  auto row = [](const char* name, const mc::Summary& s) { fmt::print("{:<16}{:>12.4f}{:>12.4f}\n", name, s.mean, s.sd); };
  row("raw_r2", r.raw_r2);
  row("anchored_r2", r.anchored_r2);
  row("delta_slope", r.delta_slope);
  row("delta_corr", r.delta_corr);
  fmt::print("{:<16}{:>12.4f}\n", "pooled_slope", r.pooled_delta_slope);
  fmt::print("{:<16}{:>12.4f}\n", "pooled_corr", r.pooled_delta_corr);
  fmt::print("{:<16}{:>12}\n", "reps_ok", fmt::format("{}/{}", r.n_ok, n_reps));
}

void cmd_mc(const mc::McConfig& config, const Common& c) {
  auto result = mc::run_mc(config, c.jobs);
  write_file(output_dir(c) / "mc_results.csv", [&](std::ostream& out) { mc::write_results_csv(out, result); });
  print_mc_summary(result, static_cast<std::size_t>(config.n_reps));
}

int run(int argc, char** argv) {
  CLI::App app{"Port activity features, trade nowcasting models and extrapolation diagnostics"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config, "JSON file of option values; command-line flags win");
  auto* seed_opt = app.add_option("--seed", common.seed, "Seed for every random draw");
  app.add_option("--jobs", common.jobs, "Worker threads for extraction and Monte Carlo")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", common.out_dir, "Output directory, created if absent");

  ExtractOpts ex;
  auto* extract = app.add_subcommand("extract", "Reduce RGRID raster stacks to monthly features.csv");
  extract->add_option("--rasters", ex.rasters, "Root of <aoi>/<band>/<date>.rgrd");
  extract->add_option("--lit-threshold", ex.lit_threshold, "Radiance threshold for the lit-area ratio");
  extract->add_option("--ntl-std-mode", ex.ntl_std_mode, "Nighttime-light dispersion: spatial or temporal")
      ->check(CLI::IsMember({"spatial", "temporal"}));

  PanelOpts po;
  auto* panel_cmd = app.add_subcommand("panel", "Join features, WPI and trade into panel.csv and split it");
  panel_cmd->add_option("--features", po.features, "features.csv from extract");
  panel_cmd->add_option("--wpi", po.wpi, "wpi.csv");
  panel_cmd->add_option("--trade", po.trade, "trade.csv");
  panel_cmd->add_option("--spec", po.spec, "Feature set")->check(CLI::IsMember({"sat", "port", "sat+port"}));
  panel_cmd->add_option("--sizes", po.sizes, "Harbor sizes to keep, comma separated, or 'all'");
  panel_cmd->add_option("--train-frac", po.train_frac, "Share of months used for training");
  panel_cmd->add_option("--test-start", po.test_start, "First test month (YYYY-MM), overrides --train-frac");
  panel_cmd->add_option("--leave-out-region", po.leave_out_region, "Test on this region, train on the rest");

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Fit a boosted tree model on a panel");
  train->add_option("--panel", to.panel, "Training panel CSV");
  train->add_option("--target", to.target, "Target")->check(CLI::IsMember({"value", "weight"}));
  add_gbt_options(train, to.params);

  PredictOpts pr;
  auto* predict = app.add_subcommand("predict", "Predict a panel or unlabeled feature rows");
  predict->add_option("--model", pr.model, "model.json");
  predict->add_option("--panel", pr.panel, "Panel CSV to predict");
  predict->add_option("--features", pr.features, "features.csv for ports without trade data");
  predict->add_option("--wpi", pr.wpi, "wpi.csv, needed with --features for port specs");
  predict->add_option("--spec", pr.spec, "Feature set for --features")
      ->check(CLI::IsMember({"sat", "port", "sat+port"}));
  predict->add_option("--target", pr.target, "Target")->check(CLI::IsMember({"value", "weight"}));

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions into report.json");
  eval_cmd->add_option("--predictions", ev.predictions, "predictions.csv");
  eval_cmd->add_option("--model", ev.model, "model.json for the importance table");
  eval_cmd->add_option("--spec", ev.spec, "Spec label for the report");
  eval_cmd->add_option("--target", ev.target, "Target label")->check(CLI::IsMember({"value", "weight"}));

  PlaceboOpts pl;
  auto* placebo = app.add_subcommand("placebo", "Shuffle satellite features across the panel, refit and score");
  placebo->add_option("--panel", pl.panel, "Full panel CSV");
  placebo->add_option("--train-frac", pl.train_frac, "Share of months used for training");
  placebo->add_option("--test-start", pl.test_start, "First test month (YYYY-MM), overrides --train-frac");
  placebo->add_option("--columns", pl.columns, "Columns to shuffle, comma separated; default all satellite");
  placebo->add_option("--target", pl.target, "Target")->check(CLI::IsMember({"value", "weight"}));
  add_gbt_options(placebo, pl.params);

  ExtrapOpts xo;
  auto* extrap_cmd = app.add_subcommand("extrap", "Per-port pre/post changes and anchored series");
  extrap_cmd->add_option("--predictions", xo.predictions, "predictions.csv");
  extrap_cmd->add_option("--cutoff", xo.cutoff, "Event month (YYYY-MM), excluded from both windows");
  extrap_cmd->add_option("--pre-from", xo.pre_from, "First pre month; default earliest prediction");
  extrap_cmd->add_option("--pre-to", xo.pre_to, "Last pre month; default month before cutoff");
  extrap_cmd->add_option("--post-from", xo.post_from, "First post month; default month after cutoff");
  extrap_cmd->add_option("--post-to", xo.post_to, "Last post month; default latest prediction");
  extrap_cmd->add_option("--min-coverage", xo.min_coverage, "Minimum share of months with predictions")
      ->check(CLI::Range(0.0, 1.0));
  extrap_cmd->add_flag("--anchor", xo.anchor, "Also write anchored.csv");

  McOpts mo;
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo fixed-effect extrapolation study");
  mc_cmd->add_option("--reps", mo.reps, "Replications, overrides the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub == mc_cmd) {
    mc::McConfig config;
    if (!common.config.empty()) {
      try {
        config = read_json(require_file(common.config, "config")).get<mc::McConfig>();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("mc config: ") + e.what());
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
    }
    if (seed_opt->count() > 0) config.master_seed = common.seed;
    if (mo.reps) config.n_reps = *mo.reps;
    config.validate();
    json resolved = config;
    resolved["command"] = "mc";
    resolved["jobs"] = common.jobs;
    resolved["out_dir"] = common.out_dir;
    print_resolved(resolved, config.master_seed);
    cmd_mc(config, common);
    return kExitOk;
  }

  if (!common.config.empty()) {
    json j;
    try {
      j = read_json(require_file(common.config, "config"));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    try {
      apply_config(j, app, *sub);
    } catch (const CLI::ParseError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  print_resolved(resolved_options(app, *sub), common.seed);

  if (sub == extract) cmd_extract(ex, common);
  else if (sub == panel_cmd) cmd_panel(po, common);
  else if (sub == train) cmd_train(to, common);
  else if (sub == predict) cmd_predict(pr, common);
  else if (sub == eval_cmd) cmd_eval(ev, common);
  else if (sub == placebo) cmd_placebo(pl, common);
  else if (sub == extrap_cmd) cmd_extrap(xo, common);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    log().error("{}", e.what());
    return kExitUsage;
  } catch (const DataError& e) {
    log().error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    log().error("{}", e.what());
    return kExitData;
  }
}
