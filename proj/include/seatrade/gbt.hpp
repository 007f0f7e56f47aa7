#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "seatrade/error.hpp"
#include "seatrade/feature_matrix.hpp"
#include "seatrade/log.hpp"

// Gradient-boosted regression trees with squared-error loss.
//
// Each round fits one tree to the gradients g = prediction - y (hessian 1)
// using histogram split search over quantile bin edges fixed once per fit.
// Split gain:  1/2 [GL^2/(HL+l2) + GR^2/(HR+l2) - (GL+GR)^2/(HL+HR+l2)]
// Leaf value:  -G/(H+l2), scaled by the learning rate at prediction time.
// Rows missing the split feature are tried on both sides; the better side
// becomes the node's default direction. Values <= threshold go left.

namespace seatrade::gbt {

struct HyperParams {
  int n_rounds = 500;
  int max_depth = 6;
  double learning_rate = 0.05;
  double min_child_weight = 5.0;
  double l2_reg = 1.0;
  double subsample_rows = 0.8;
  double subsample_cols = 0.8;
  int n_bins = 256;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0,1]");
    if (!(min_child_weight >= 0.0)) throw ConfigError("min_child_weight must be >= 0");
    if (!(l2_reg >= 0.0)) throw ConfigError("l2_reg must be >= 0");
    if (!(subsample_rows > 0.0 && subsample_rows <= 1.0)) throw ConfigError("subsample_rows must be in (0,1]");
    if (!(subsample_cols > 0.0 && subsample_cols <= 1.0)) throw ConfigError("subsample_cols must be in (0,1]");
    if (n_bins < 2 || n_bins > 65535) throw ConfigError("n_bins must be in [2, 65535]");
  }
};

inline void to_json(nlohmann::json& j, const HyperParams& p) {
  j = nlohmann::json{{"n_rounds", p.n_rounds},         {"max_depth", p.max_depth},
                     {"learning_rate", p.learning_rate}, {"min_child_weight", p.min_child_weight},
                     {"l2_reg", p.l2_reg},             {"subsample_rows", p.subsample_rows},
                     {"subsample_cols", p.subsample_cols}, {"n_bins", p.n_bins},
                     {"seed", p.seed}};
}

/// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, HyperParams& p) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_rounds", p.n_rounds);
  get("max_depth", p.max_depth);
  get("learning_rate", p.learning_rate);
  get("min_child_weight", p.min_child_weight);
  get("l2_reg", p.l2_reg);
  get("subsample_rows", p.subsample_rows);
  get("subsample_cols", p.subsample_cols);
  get("n_bins", p.n_bins);
  get("seed", p.seed);
}

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
  double gain = 0.0;

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  /// Unscaled leaf output for one row, columns in training order.
  [[nodiscard]] double evaluate(std::span<const double> row) const {
    const TreeNode* n = &nodes[0];
    while (!n->is_leaf()) {
      double x = row[static_cast<std::size_t>(n->feature)];
      bool go_left = is_missing(x) ? n->default_left : x <= n->threshold;
      n = &nodes[static_cast<std::size_t>(go_left ? n->left : n->right)];
    }
    return n->leaf_value;
  }
};

struct TreeEnsemble {
  double base_score = 0.0;
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;
  HyperParams params;
};

namespace detail {

inline constexpr std::uint16_t kMissingBin = std::numeric_limits<std::uint16_t>::max();

/// Ascending candidate thresholds: every distinct value when they fit in
/// n_bins, otherwise evenly spaced order statistics (always including the max).
inline std::vector<double> quantile_cuts(std::vector<double> values, int n_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= static_cast<std::size_t>(n_bins)) return distinct;
  std::vector<double> cuts;
  auto n = values.size();
  for (int k = 1; k <= n_bins; ++k) {
    auto pos = (static_cast<std::size_t>(k) * n + static_cast<std::size_t>(n_bins) - 1) / static_cast<std::size_t>(n_bins);
    double v = values[std::max<std::size_t>(pos, 1) - 1];
    if (cuts.empty() || v > cuts.back()) cuts.push_back(v);
  }
  return cuts;
}

struct BinnedData {
  std::size_t rows = 0;
  std::vector<std::vector<double>> cuts;          // per feature
  std::vector<std::vector<std::uint16_t>> bins;   // per feature, per row
};

inline BinnedData bin_matrix(const FeatureMatrix& X, int n_bins) {
  BinnedData b;
  b.rows = X.rows();
  b.cuts.resize(X.cols());
  b.bins.resize(X.cols());
  std::vector<double> present;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    present.clear();
    for (std::size_t r = 0; r < X.rows(); ++r)
      if (!is_missing(X(r, f))) present.push_back(X(r, f));
    b.cuts[f] = quantile_cuts(present, n_bins);
    auto& col = b.bins[f];
    col.resize(X.rows());
    const auto& cuts = b.cuts[f];
    for (std::size_t r = 0; r < X.rows(); ++r) {
      double x = X(r, f);
      col[r] = is_missing(x) ? kMissingBin
                             : static_cast<std::uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
    }
  }
  return b;
}

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  std::size_t bin = 0;
  bool default_left = true;
};

class TreeBuilder {
public:
  TreeBuilder(const BinnedData& data, std::span<const double> grad, const HyperParams& params,
              std::vector<std::size_t> features)
      : data_(data), grad_(grad), params_(params), features_(std::move(features)) {}

  Tree build(std::vector<std::size_t> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

private:
  double score(double g, double h) const { return g * g / (h + params_.l2_reg); }

  int grow(std::size_t begin, std::size_t end, int depth) {
    int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double g_sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) g_sum += grad_[rows_[i]];
    double h_sum = static_cast<double>(end - begin);

    SplitCandidate best;
    if (depth < params_.max_depth && h_sum >= 2.0 * params_.min_child_weight)
      best = find_split(begin, end, g_sum, h_sum);

    if (best.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(id)].leaf_value = -g_sum / (h_sum + params_.l2_reg);
      return id;
    }

    const auto& col = data_.bins[static_cast<std::size_t>(best.feature)];
    auto goes_left = [&](std::size_t r) {
      auto bin = col[r];
      return bin == kMissingBin ? best.default_left : bin <= best.bin;
    };
    auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     rows_.begin() + static_cast<std::ptrdiff_t>(end), goes_left);
    auto split = static_cast<std::size_t>(mid - rows_.begin());

    int left = grow(begin, split, depth + 1);
    int right = grow(split, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = data_.cuts[static_cast<std::size_t>(best.feature)][best.bin];
    node.default_left = best.default_left;
    node.left = left;
    node.right = right;
    node.gain = best.gain;
    return id;
  }

  SplitCandidate find_split(std::size_t begin, std::size_t end, double g_sum, double h_sum) {
    SplitCandidate best;
    double parent = score(g_sum, h_sum);
    double mcw = params_.min_child_weight;
    for (std::size_t f : features_) {
      const auto& cuts = data_.cuts[f];
      const auto& col = data_.bins[f];
      std::size_t nb = cuts.size();
      hist_g_.assign(nb, 0.0);
      hist_h_.assign(nb, 0.0);
      double miss_g = 0.0;
      double miss_h = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        std::size_t r = rows_[i];
        auto bin = col[r];
        if (bin == kMissingBin) {
          miss_g += grad_[r];
          miss_h += 1.0;
        } else {
          hist_g_[bin] += grad_[r];
          hist_h_[bin] += 1.0;
        }
      }
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        double gr = g_sum - gl - miss_g;
        double hr = h_sum - hl - miss_h;
        auto consider = [&](double gL, double hL, double gR, double hR, bool default_left) {
          if (hL < mcw || hR < mcw || hL <= 0.0 || hR <= 0.0) return;
          double gain = 0.5 * (score(gL, hL) + score(gR, hR) - parent);
          if (gain > best.gain) best = {gain, static_cast<int>(f), b, default_left};
        };
        if (miss_h > 0.0) {
          consider(gl, hl, gr + miss_g, hr + miss_h, false);
          consider(gl + miss_g, hl + miss_h, gr, hr, true);
        } else {
          consider(gl, hl, gr, hr, hl >= hr);
        }
      }
    }
    return best;
  }

  const BinnedData& data_;
  std::span<const double> grad_;
  const HyperParams& params_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> rows_;
  std::vector<double> hist_g_;
  std::vector<double> hist_h_;
  Tree tree_;
};

/// k distinct indices drawn from [0, n) by partial Fisher-Yates, returned sorted.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k >= n) return idx;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline std::size_t sample_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace detail

/// Fits a boosted ensemble. Deterministic given params.seed.
inline TreeEnsemble fit(const FeatureMatrix& X, std::span<const double> y, const HyperParams& params) {
  params.validate();
  if (X.rows() != y.size()) throw DataError("fit: feature rows and targets differ in length");
  if (y.size() < 2) throw DataError("fit: need at least 2 rows");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("fit: non-finite target");

  auto binned = detail::bin_matrix(X, params.n_bins);
  std::vector<std::size_t> usable;
  for (std::size_t f = 0; f < X.cols(); ++f)
    if (!binned.cuts[f].empty()) usable.push_back(f);
  if (usable.empty()) throw DataError("fit: no usable feature columns");

  TreeEnsemble model;
  model.feature_names = X.names();
  model.params = params;
  // Shifted mean: exact when all targets are equal.
  double shift = 0.0;
  for (double v : y) shift += v - y[0];
  model.base_score = y[0] + shift / static_cast<double>(y.size());

  std::vector<double> pred(y.size(), model.base_score);
  std::vector<double> grad(y.size());
  std::mt19937_64 rng(params.seed);
  model.trees.reserve(static_cast<std::size_t>(params.n_rounds));

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < y.size(); ++i) grad[i] = pred[i] - y[i];
    auto rows = detail::sample_indices(y.size(), detail::sample_count(y.size(), params.subsample_rows), rng);
    auto picked = detail::sample_indices(usable.size(), detail::sample_count(usable.size(), params.subsample_cols), rng);
    std::vector<std::size_t> features;
    features.reserve(picked.size());
    for (auto p : picked) features.push_back(usable[p]);

    detail::TreeBuilder builder(binned, grad, params, std::move(features));
    Tree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < y.size(); ++i) pred[i] += params.learning_rate * tree.evaluate(X.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

namespace detail {

/// Column position in X of each model feature.
inline std::vector<std::size_t> column_map(const TreeEnsemble& model, const FeatureMatrix& X) {
  if (X.cols() != model.feature_names.size())
    throw SchemaError("predict: expected " + std::to_string(model.feature_names.size()) + " columns, got " +
                      std::to_string(X.cols()));
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t c = 0; c < X.cols(); ++c) pos.emplace(X.names()[c], c);
  std::vector<std::size_t> map;
  map.reserve(model.feature_names.size());
  for (const auto& name : model.feature_names) {
    auto it = pos.find(name);
    if (it == pos.end()) throw SchemaError("predict: missing feature column '" + name + "'");
    map.push_back(it->second);
  }
  return map;
}

}  // namespace detail

/// Predictions from the first `tree_limit` trees (all by default).
inline std::vector<double> predict(const TreeEnsemble& model, const FeatureMatrix& X,
                                   std::optional<std::size_t> tree_limit = std::nullopt) {
  auto map = detail::column_map(model, X);
  std::size_t n_trees = std::min(tree_limit.value_or(model.trees.size()), model.trees.size());
  std::vector<double> out(X.rows());
  std::vector<double> row(map.size());
  double lr = model.params.learning_rate;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < map.size(); ++c) row[c] = X(r, map[c]);
    double p = model.base_score;
    for (std::size_t t = 0; t < n_trees; ++t) p += lr * model.trees[t].evaluate(row);
    out[r] = p;
  }
  return out;
}

struct FeatureImportance {
  std::string feature;
  double percent = 0.0;
};

/// Total split gain per feature as a percentage of all gain, in feature order.
inline std::vector<FeatureImportance> gain_importance(const TreeEnsemble& model) {
  std::vector<double> gain(model.feature_names.size(), 0.0);
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) gain[static_cast<std::size_t>(node.feature)] += node.gain;
  double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  if (total <= 0.0) log().warn("gain_importance: ensemble has no splits");
  std::vector<FeatureImportance> out;
  out.reserve(gain.size());
  for (std::size_t f = 0; f < gain.size(); ++f)
    out.push_back({model.feature_names[f], total > 0.0 ? 100.0 * gain[f] / total : 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// Serialization. nlohmann::json orders object keys, so the dump is canonical.

inline nlohmann::json to_json(const TreeEnsemble& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        nodes.push_back({{"leaf", n.leaf_value}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"default_left", n.default_left},
                         {"left", n.left},
                         {"right", n.right},
                         {"gain", n.gain}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"base_score", model.base_score},
          {"params", model.params},
          {"feature_names", model.feature_names},
          {"trees", std::move(trees)}};
}

inline TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
  try {
    TreeEnsemble model;
    model.base_score = j.at("base_score").get<double>();
    model.params = j.at("params").get<HyperParams>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    auto n_features = static_cast<int>(model.feature_names.size());
    for (const auto& jt : j.at("trees")) {
      Tree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.leaf_value = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.default_left = jn.at("default_left").get<bool>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
          n.gain = jn.at("gain").get<double>();
          if (n.feature < 0 || n.feature >= n_features) throw DataError("model: feature index out of range");
        }
        tree.nodes.push_back(n);
      }
      auto size = static_cast<int>(tree.nodes.size());
      if (size == 0) throw DataError("model: empty tree");
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (!n.is_leaf() && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                             n.left >= size || n.right >= size))
          throw DataError("model: invalid child index");
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

}  // namespace seatrade::gbt
