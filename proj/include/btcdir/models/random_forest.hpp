#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "btcdir/core/matrix.hpp"
#include "btcdir/core/rng.hpp"

namespace btcdir {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p1 = 0.0;  // class-1 fraction of the training samples reaching the node
};

struct CartParams {
  int max_depth = 0;  // 0 = unlimited
  std::size_t features_per_split = 1;
  std::size_t min_samples_leaf = 1;
};

/// CART classification tree with Gini impurity. Samples go left when
/// x[feature] <= threshold.
class DecisionTree {
 public:
  /// `samples` may repeat rows (bootstrap). `importance` accumulates the
  /// count-weighted impurity decrease per feature.
  void fit(const Matrix& x, std::span<const int> y, std::vector<std::uint32_t> samples, const CartParams& params,
           Rng& rng, std::vector<double>& importance) {
    nodes_.clear();
    std::vector<std::size_t> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    build(x, y, samples, 0, params, rng, features, importance);
  }

  double p1(const Matrix& x, Eigen::Index row) const {
    int n = 0;
    while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = x(row, node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].p1;
  }

  /// Majority class of the leaf; an even split votes 1.
  int vote(const Matrix& x, Eigen::Index row) const { return p1(x, row) >= 0.5 ? 1 : 0; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const { return depth_of(0); }

  nlohmann::json to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& n : nodes_) arr.push_back({n.feature, n.threshold, n.left, n.right, n.p1});
    return arr;
  }

  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    for (const auto& n : j)
      t.nodes_.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                          n.at(4).get<double>()});
    return t;
  }

 private:
  static double gini(double n, double pos) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  std::size_t depth_of(int n) const {
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    if (node.feature < 0) return 0;
    return 1 + std::max(depth_of(node.left), depth_of(node.right));
  }

  int build(const Matrix& x, std::span<const int> y, std::vector<std::uint32_t>& samples, int depth,
            const CartParams& params, Rng& rng, std::vector<std::size_t>& features, std::vector<double>& importance) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    double pos = 0;
    for (auto s : samples) pos += y[s];
    const double n = static_cast<double>(samples.size());
    nodes_[static_cast<std::size_t>(id)].p1 = pos / n;

    const bool pure = pos == 0 || pos == n;
    const bool depth_cap = params.max_depth > 0 && depth >= params.max_depth;
    if (pure || depth_cap || samples.size() < 2 * params.min_samples_leaf) return id;

    // Partial Fisher-Yates: the first m entries become this node's candidates.
    const std::size_t m = std::min(params.features_per_split, features.size());
    for (std::size_t i = 0; i < m; ++i) std::swap(features[i], features[i + rng.below(features.size() - i)]);

    const double parent = n * gini(n, pos);
    double best_score = parent;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::size_t fi = 0; fi < m; ++fi) {
      const auto f = static_cast<Eigen::Index>(features[fi]);
      for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {x(samples[i], f), y[samples[i]]};
      std::sort(column.begin(), column.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      double nl = 0, pl = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        nl += 1;
        pl += column[i].second;
        if (column[i].first == column[i + 1].first) continue;
        const double nr = n - nl;
        if (nl < static_cast<double>(params.min_samples_leaf) || nr < static_cast<double>(params.min_samples_leaf)) continue;
        const double score = nl * gini(nl, pl) + nr * gini(nr, pos - pl);
        if (score < best_score - 1e-12) {
          best_score = score;
          best_feature = static_cast<int>(f);
          const double a = column[i].first, b = column[i + 1].first;
          best_threshold = a + (b - a) / 2.0;
          if (!(best_threshold < b)) best_threshold = a;
        }
      }
    }
    if (best_feature < 0) return id;

    importance[static_cast<std::size_t>(best_feature)] += parent - best_score;
    std::vector<std::uint32_t> left, right;
    for (auto s : samples) (x(s, best_feature) <= best_threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const int l = build(x, y, left, depth + 1, params, rng, features, importance);
    const int r = build(x, y, right, depth + 1, params, rng, features, importance);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::vector<TreeNode> nodes_;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;
  double max_features_fraction = 0.3;
  bool bootstrap = true;
  std::size_t min_samples_leaf = 1;
};

/// Bagged CART trees. Probability is the fraction of trees voting class 1.
class RandomForest {
 public:
  void fit(const Matrix& x, std::span<const int> y, const ForestParams& params, std::uint64_t seed) {
    const auto n = static_cast<std::uint32_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    CartParams cart;
    cart.max_depth = params.max_depth;
    cart.min_samples_leaf = params.min_samples_leaf;
    cart.features_per_split =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(params.max_features_fraction * static_cast<double>(d))), 1, d);
    trees_.assign(static_cast<std::size_t>(params.n_trees), {});
    std::vector<double> total(d, 0.0);
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      Rng rng(derive_seed(seed, t));
      std::vector<std::uint32_t> samples(n);
      if (params.bootstrap) {
        for (auto& s : samples) s = static_cast<std::uint32_t>(rng.below(n));
      } else {
        std::iota(samples.begin(), samples.end(), 0u);
      }
      std::vector<double> imp(d, 0.0);
      trees_[t].fit(x, y, std::move(samples), cart, rng, imp);
      const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
      if (s > 0)
        for (std::size_t j = 0; j < d; ++j) total[j] += imp[j] / s;
    }
    const double s = std::accumulate(total.begin(), total.end(), 0.0);
    importance_.assign(d, 0.0);
    if (s > 0)
      for (std::size_t j = 0; j < d; ++j) importance_[j] = total[j] / s;
  }

  Vector predict_proba(const Matrix& x) const {
    Vector out = Vector::Zero(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      int votes = 0;
      for (const auto& t : trees_) votes += t.vote(x, i);
      out(i) = static_cast<double>(votes) / static_cast<double>(trees_.size());
    }
    return out;
  }

  /// Mean (per-tree normalized) impurity decrease; sums to 1 unless no tree
  /// ever split, in which case it is all zeros.
  const std::vector<double>& importance() const { return importance_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  nlohmann::json to_json() const {
    auto trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return {{"trees", trees}, {"importance", importance_}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    RandomForest f;
    for (const auto& t : j.at("trees")) f.trees_.push_back(DecisionTree::from_json(t));
    f.importance_ = j.at("importance").get<std::vector<double>>();
    return f;
  }

 private:
  std::vector<DecisionTree> trees_;
  std::vector<double> importance_;
};

}  // namespace btcdir
