#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "btcdir/core/matrix.hpp"
#include "btcdir/core/rng.hpp"

namespace btcdir {

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

struct RegNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct BoostParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  double subsample = 1.0;
};

/// Gradient boosting on logistic loss with depth-limited regression trees.
/// Splits maximise the second-order gain G_L^2/H_L + G_R^2/H_R - G^2/H and
/// leaves hold the Newton step -G/H scaled by the learning rate. No further
/// regularisation.
class BoostedTrees {
 public:
  void fit(const Matrix& x, std::span<const int> y, const BoostParams& params, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    double pos = 0;
    for (int v : y) pos += v;
    const double p0 = pos / static_cast<double>(n);
    base_score_ = std::log(p0 / (1.0 - p0));
    trees_.clear();

    // Sorted row order per feature, computed once.
    std::vector<std::vector<std::uint32_t>> order(d, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < d; ++f) {
      auto& o = order[f];
      std::iota(o.begin(), o.end(), 0u);
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x(a, static_cast<Eigen::Index>(f)) < x(b, static_cast<Eigen::Index>(f));
      });
    }

    std::vector<double> margin(n, base_score_), g(n), h(n);
    std::vector<int> node_of(n);
    const std::size_t n_sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));
    for (int round = 0; round < params.n_rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(margin[i]);
        g[i] = p - y[i];
        h[i] = std::max(p * (1.0 - p), 1e-16);
      }
      std::fill(node_of.begin(), node_of.end(), 0);
      if (n_sub < n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        rng.shuffle(perm);
        std::fill(node_of.begin(), node_of.end(), -1);
        for (std::size_t k = 0; k < n_sub; ++k) node_of[perm[k]] = 0;
      }
      auto tree = grow(x, order, g, h, node_of, params);
      for (std::size_t i = 0; i < n; ++i) margin[i] += predict_tree(tree, x, static_cast<Eigen::Index>(i));
      trees_.push_back(std::move(tree));
    }
  }

  Vector decision_function(const Matrix& x) const {
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double m = base_score_;
      for (const auto& t : trees_) m += predict_tree(t, x, i);
      out(i) = m;
    }
    return out;
  }

  Vector predict_proba(const Matrix& x) const { return decision_function(x).unaryExpr([](double m) { return sigmoid(m); }); }

  double base_score() const { return base_score_; }
  std::size_t rounds() const { return trees_.size(); }

  nlohmann::json to_json() const {
    auto trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      auto nodes = nlohmann::json::array();
      for (const auto& nd : t) nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.value});
      trees.push_back(std::move(nodes));
    }
    return {{"base_score", base_score_}, {"trees", trees}};
  }

  static BoostedTrees from_json(const nlohmann::json& j) {
    BoostedTrees b;
    b.base_score_ = j.at("base_score").get<double>();
    for (const auto& t : j.at("trees")) {
      std::vector<RegNode> nodes;
      for (const auto& nd : t)
        nodes.push_back({nd.at(0).get<int>(), nd.at(1).get<double>(), nd.at(2).get<int>(), nd.at(3).get<int>(),
                         nd.at(4).get<double>()});
      b.trees_.push_back(std::move(nodes));
    }
    return b;
  }

 private:
  static double predict_tree(const std::vector<RegNode>& t, const Matrix& x, Eigen::Index row) {
    int k = 0;
    while (t[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& nd = t[static_cast<std::size_t>(k)];
      k = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
    }
    return t[static_cast<std::size_t>(k)].value;
  }

  // Level-wise exact greedy growth over presorted columns. node_of[i] is the
  // node holding row i (-1 when the row is not sampled this round).
  static std::vector<RegNode> grow(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& order,
                                   const std::vector<double>& g, const std::vector<double>& h, std::vector<int>& node_of,
                                   const BoostParams& params) {
    constexpr double kMinChildHessian = 1e-6;
    std::vector<RegNode> nodes(1);
    std::vector<double> G(1, 0.0), H(1, 0.0);
    for (std::size_t i = 0; i < node_of.size(); ++i)
      if (node_of[i] == 0) {
        G[0] += g[i];
        H[0] += h[i];
      }
    std::vector<int> frontier{0};
    for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
      const std::size_t total = nodes.size();
      std::vector<double> best_gain(total, 1e-12), best_thr(total, 0.0);
      std::vector<int> best_feat(total, -1);
      std::vector<double> gl(total), hl(total), last(total);
      std::vector<char> seen(total), active(total, 0);
      for (int k : frontier) active[static_cast<std::size_t>(k)] = 1;
      for (std::size_t f = 0; f < order.size(); ++f) {
        std::fill(gl.begin(), gl.end(), 0.0);
        std::fill(hl.begin(), hl.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        const auto fi = static_cast<Eigen::Index>(f);
        for (std::uint32_t i : order[f]) {
          const int k = node_of[i];
          if (k < 0 || !active[static_cast<std::size_t>(k)]) continue;
          const auto ku = static_cast<std::size_t>(k);
          const double v = x(i, fi);
          if (seen[ku] && v != last[ku]) {
            const double gr = G[ku] - gl[ku], hr = H[ku] - hl[ku];
            if (hl[ku] >= kMinChildHessian && hr >= kMinChildHessian) {
              const double gain = gl[ku] * gl[ku] / hl[ku] + gr * gr / hr - G[ku] * G[ku] / H[ku];
              if (gain > best_gain[ku]) {
                best_gain[ku] = gain;
                best_feat[ku] = static_cast<int>(f);
                double thr = last[ku] + (v - last[ku]) / 2.0;
                best_thr[ku] = thr < v ? thr : last[ku];
              }
            }
          }
          seen[ku] = 1;
          last[ku] = v;
          gl[ku] += g[i];
          hl[ku] += h[i];
        }
      }
      std::vector<int> next;
      for (int k : frontier) {
        const auto ku = static_cast<std::size_t>(k);
        if (best_feat[ku] < 0) continue;
        const int l = static_cast<int>(nodes.size()), r = l + 1;
        nodes[ku].feature = best_feat[ku];
        nodes[ku].threshold = best_thr[ku];
        nodes[ku].left = l;
        nodes[ku].right = r;
        nodes.emplace_back();
        nodes.emplace_back();
        G.push_back(0.0);
        G.push_back(0.0);
        H.push_back(0.0);
        H.push_back(0.0);
        next.push_back(l);
        next.push_back(r);
      }
      for (std::size_t i = 0; i < node_of.size(); ++i) {
        const int k = node_of[i];
        if (k < 0) continue;
        const auto& nd = nodes[static_cast<std::size_t>(k)];
        if (nd.feature < 0) continue;  // rows only ever sit in leaves or in nodes split this level
        const int child = x(static_cast<Eigen::Index>(i), nd.feature) <= nd.threshold ? nd.left : nd.right;
        node_of[i] = child;
        G[static_cast<std::size_t>(child)] += g[i];
        H[static_cast<std::size_t>(child)] += h[i];
      }
      frontier = std::move(next);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k].feature < 0) nodes[k].value = H[k] > 0 ? -params.learning_rate * G[k] / H[k] : 0.0;
    return nodes;
  }

  double base_score_ = 0.0;
  std::vector<std::vector<RegNode>> trees_;
};

}  // namespace btcdir
