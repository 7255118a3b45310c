#pragma once

// Weighted-sample decision trees and SAMME multiclass boosting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/output_space.hpp"
#include "cbound/summation.hpp"

namespace cbound {

inline constexpr std::size_t kMaxTreeDepth = 8;

/// Axis-aligned threshold tree; x[feature] <= threshold goes left.
class DecisionTree {
 public:
  struct Node {
    bool leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t label = 0;
  };

  DecisionTree() = default;
  DecisionTree(std::vector<Node> nodes, std::size_t num_classes) : nodes_(std::move(nodes)), q_(num_classes) {
    if (nodes_.empty()) fail(ErrorCategory::InvalidParameter, "tree has no nodes");
    for (const auto& n : nodes_) {
      if (n.leaf && n.label >= q_) fail(ErrorCategory::InvalidLabel, "tree leaf class out of range");
      if (!n.leaf && (n.left >= nodes_.size() || n.right >= nodes_.size())) {
        fail(ErrorCategory::InvalidParameter, "tree child index out of range");
      }
    }
    // Depth computation also rejects cycles: a path longer than the node count is impossible in a tree.
    depth_ = depth_of(0, 0);
  }

  std::size_t predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf) {
      const auto& n = nodes_[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].label;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t num_classes() const noexcept { return q_; }
  std::size_t depth() const noexcept { return depth_; }

  std::size_t min_input_dim() const noexcept {
    std::size_t d = 0;
    for (const auto& n : nodes_) {
      if (!n.leaf) d = std::max(d, n.feature + 1);
    }
    return d;
  }

  /// Nested {feature, threshold, left, right} / {leaf: class}.
  nlohmann::json to_json() const { return node_json(0); }

  static DecisionTree from_json(const nlohmann::json& j, std::size_t num_classes) {
    std::vector<Node> nodes;
    try {
      build_from_json(j, nodes, 0);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCategory::Parse, std::string("tree JSON: ") + ex.what());
    }
    return DecisionTree(std::move(nodes), num_classes);
  }

 private:
  std::size_t depth_of(std::size_t i, std::size_t d) const {
    if (d > nodes_.size()) fail(ErrorCategory::InvalidParameter, "tree contains a cycle");
    const auto& n = nodes_[i];
    if (n.leaf) return d;
    return std::max(depth_of(n.left, d + 1), depth_of(n.right, d + 1));
  }

  nlohmann::json node_json(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.leaf) return {{"leaf", n.label}};
    return {{"feature", n.feature}, {"threshold", n.threshold}, {"left", node_json(n.left)}, {"right", node_json(n.right)}};
  }

  static std::size_t build_from_json(const nlohmann::json& j, std::vector<Node>& nodes, std::size_t depth) {
    if (depth > 64) fail(ErrorCategory::Parse, "tree JSON nested too deeply");
    if (!j.is_object()) fail(ErrorCategory::Parse, "tree node must be an object");
    const std::size_t idx = nodes.size();
    nodes.emplace_back();
    if (j.contains("leaf")) {
      nodes[idx].label = j.at("leaf").get<std::size_t>();
      return idx;
    }
    Node n;
    n.leaf = false;
    n.feature = j.at("feature").get<std::size_t>();
    n.threshold = j.at("threshold").get<double>();
    n.left = build_from_json(j.at("left"), nodes, depth + 1);
    n.right = build_from_json(j.at("right"), nodes, depth + 1);
    nodes[idx] = n;
    return idx;
  }

  std::vector<Node> nodes_;
  std::size_t q_ = 2;
  std::size_t depth_ = 0;
};

/// A tree as a multiclass classifier voter: outputs the basis vector of its leaf class.
class TreeVoter final : public Voter {
 public:
  explicit TreeVoter(DecisionTree tree) : tree_(std::move(tree)), space_(OutputSpace::multiclass(tree_.num_classes())) {}

  const OutputSpace& space() const noexcept override { return space_; }
  bool is_classifier() const noexcept override { return true; }
  std::size_t min_input_dim() const noexcept override { return tree_.min_input_dim(); }
  void vote(std::span<const double> x, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    out[tree_.predict(x)] = 1.0;
  }
  nlohmann::json to_json() const override { return {{"type", "tree"}, {"tree", tree_.to_json()}}; }

  const DecisionTree& tree() const noexcept { return tree_; }

 private:
  DecisionTree tree_;
  OutputSpace space_;
};

struct TreeConfig {
  std::size_t max_depth = 1;
  std::size_t min_leaf = 1;
};

namespace detail {

class TreeBuilder {
  using Node = DecisionTree::Node;

 public:
  TreeBuilder(const LabeledDataset& data, std::span<const double> weights, TreeConfig cfg)
      : data_(data), w_(weights), cfg_(cfg), q_(data.space().q()), d_(data.num_features()) {}

  DecisionTree build() {
    const std::size_t m = data_.size();
    // One index list per feature, kept sorted by that feature; children
    // inherit sorted lists through stable partitioning.
    std::vector<std::vector<std::size_t>> sorted(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      auto& idx = sorted[f];
      idx.resize(m);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return value(a, f) < value(b, f); });
    }
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    side_.assign(m, 0);
    grow(all, sorted, 0, 0);
    return DecisionTree(std::move(nodes_), q_);
  }

 private:
  double value(std::size_t i, std::size_t f) const { return data_.features()[i * d_ + f]; }

  static std::size_t majority(std::span<const double> cw, std::size_t fallback) {
    std::size_t best = fallback;
    double best_w = 0.0;
    for (std::size_t c = 0; c < cw.size(); ++c) {
      if (cw[c] > best_w) {
        best_w = cw[c];
        best = c;
      }
    }
    return best;
  }

  std::size_t grow(const std::vector<std::size_t>& members, std::vector<std::vector<std::size_t>>& sorted,
                   std::size_t depth, std::size_t fallback) {
    std::vector<double> cw(q_, 0.0);
    for (auto i : members) cw[data_.label(i).index()] += w_[i];
    const std::size_t label = majority(cw, fallback);

    const std::size_t idx = nodes_.size();
    nodes_.push_back({});
    nodes_[idx].label = label;

    std::size_t classes_present = 0;
    for (double v : cw) classes_present += v > 0.0 ? 1 : 0;
    if (depth >= cfg_.max_depth || classes_present <= 1 || members.size() < 2 * cfg_.min_leaf) return idx;

    // Best split: lowest weighted impurity, ties to the lowest feature, then lowest threshold.
    bool found = false;
    double best_imp = std::numeric_limits<double>::infinity();
    std::size_t best_f = 0;
    double best_thr = 0.0;
    std::vector<double> left(q_);
    for (std::size_t f = 0; f < d_; ++f) {
      const auto& order = sorted[f];
      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k];
        left[data_.label(i).index()] += w_[i];
        wl += w_[i];
        const double a = value(i, f);
        const double b = value(order[k + 1], f);
        if (!(a < b)) continue;
        const std::size_t nl = k + 1;
        if (nl < cfg_.min_leaf || order.size() - nl < cfg_.min_leaf) continue;
        double wr = 0.0;
        double sq_r = 0.0, sq_l = 0.0;
        for (std::size_t c = 0; c < q_; ++c) {
          const double r = cw[c] - left[c];
          wr += r;
          sq_r += r * r;
          sq_l += left[c] * left[c];
        }
        // weighted Gini: W (1 - sum p_c^2) = W - sum w_c^2 / W, per side
        const double imp = (wl > 0.0 ? wl - sq_l / wl : 0.0) + (wr > 0.0 ? wr - sq_r / wr : 0.0);
        if (!found || imp < best_imp - 1e-12 * std::max(1.0, std::abs(best_imp))) {
          found = true;
          best_imp = imp;
          best_f = f;
          double thr = 0.5 * (a + b);
          if (!(thr < b)) thr = a;
          best_thr = thr;
        }
      }
    }
    if (!found) return idx;

    std::vector<std::size_t> lm, rm;
    for (auto i : members) {
      const bool goes_left = value(i, best_f) <= best_thr;
      side_[i] = goes_left ? 1 : 2;
      (goes_left ? lm : rm).push_back(i);
    }
    std::vector<std::vector<std::size_t>> ls(d_), rs(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      ls[f].reserve(lm.size());
      rs[f].reserve(rm.size());
      for (auto i : sorted[f]) (side_[i] == 1 ? ls[f] : rs[f]).push_back(i);
    }
    sorted.clear();
    sorted.shrink_to_fit();

    const std::size_t l = grow(lm, ls, depth + 1, label);
    const std::size_t r = grow(rm, rs, depth + 1, label);
    nodes_[idx].leaf = false;
    nodes_[idx].feature = best_f;
    nodes_[idx].threshold = best_thr;
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
  }

  const LabeledDataset& data_;
  std::span<const double> w_;
  TreeConfig cfg_;
  std::size_t q_;
  std::size_t d_;
  std::vector<Node> nodes_;
  std::vector<std::uint8_t> side_;
};

}  // namespace detail

/// Greedy top-down induction with weighted Gini impurity. Candidate
/// thresholds are midpoints between consecutive distinct feature values.
/// A node becomes a leaf at max depth, when pure, or when no split leaves
/// min_leaf examples on each side. Leaves carry the weighted majority class.
inline DecisionTree train_tree(const LabeledDataset& data, std::span<const double> weights, TreeConfig cfg) {
  if (data.space().kind() != SpaceKind::Multiclass) fail(ErrorCategory::Unsupported, "trees need a multiclass dataset");
  if (cfg.max_depth < 1 || cfg.max_depth > kMaxTreeDepth) {
    fail(ErrorCategory::InvalidParameter, "tree depth must lie in 1.." + std::to_string(kMaxTreeDepth));
  }
  if (cfg.min_leaf < 1) fail(ErrorCategory::InvalidParameter, "min leaf size must be positive");
  if (weights.size() != data.size()) fail(ErrorCategory::DimensionMismatch, "one weight per example is required");
  CompensatedSum s;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCategory::InvalidParameter, "example weights must be nonnegative");
    s += w;
  }
  if (!(s.value() > 0.0)) fail(ErrorCategory::InvalidParameter, "example weights have zero total");
  return detail::TreeBuilder(data, weights, cfg).build();
}

inline DecisionTree train_tree(const LabeledDataset& data, std::span<const double> weights, std::size_t depth) {
  return train_tree(data, weights, TreeConfig{depth, 1});
}

struct BoostConfig {
  std::size_t rounds = 100;
  std::size_t depth = 1;
  std::uint64_t seed = 0;  ///< recorded with the model; tree induction is deterministic
  std::size_t min_leaf = 1;
};

struct SammeRound {
  std::size_t round = 0;
  double error = 0.0;  ///< weighted training error of the round's tree
  double alpha = 0.0;
  bool capped = false;  ///< error was 0 and alpha was capped
};

struct SammeResult {
  OutputSpace space;
  std::vector<std::shared_ptr<const TreeVoter>> trees;
  std::vector<SammeRound> rounds;  ///< one entry per retained tree
  std::size_t rounds_run = 0;
  bool stopped_perfect = false;
  bool stopped_weak = false;  ///< a round could not beat 1 - 1/Q

  /// Ensemble of the first `t` retained trees: rho = alpha / sum(alpha), uniform prior.
  WeightedEnsemble ensemble(std::size_t t = SIZE_MAX) const {
    t = std::min(t, trees.size());
    if (t == 0) fail(ErrorCategory::Degenerate, "no boosting round produced a usable tree");
    std::vector<VoterPtr> voters(trees.begin(), trees.begin() + static_cast<std::ptrdiff_t>(t));
    std::vector<double> alpha(t);
    for (std::size_t i = 0; i < t; ++i) alpha[i] = rounds[i].alpha;
    std::vector<double> pi(t, 1.0 / static_cast<double>(t));
    return WeightedEnsemble(space, std::move(voters), normalized(std::move(alpha)), std::move(pi));
  }

  /// Trees retained after running `rounds` boosting rounds.
  std::size_t retained_after(std::size_t r) const {
    std::size_t n = 0;
    for (const auto& rd : rounds) n += rd.round < r ? 1 : 0;
    return n;
  }
};

/// SAMME: fit a tree on the current weights, alpha = ln((1-eps)/eps) + ln(Q-1),
/// upweight misclassified examples by exp(alpha), renormalize.
///
/// A round with eps >= 1 - 1/Q stops boosting: the weights are unchanged by
/// skipping it and induction is deterministic, so every later round would
/// refit the same tree. A round with eps = 0 is kept with alpha capped at
/// eps = 1/(2m), and boosting stops.
inline SammeResult train_samme(const LabeledDataset& data, const BoostConfig& cfg) {
  if (data.space().kind() != SpaceKind::Multiclass) fail(ErrorCategory::Unsupported, "SAMME needs a multiclass dataset");
  if (cfg.rounds < 1 || cfg.rounds > 10000) fail(ErrorCategory::InvalidParameter, "rounds must lie in 1..10000");
  const std::size_t m = data.size();
  const double q = static_cast<double>(data.space().q());
  const double eps_min = 1.0 / (2.0 * static_cast<double>(m));
  const double alpha_cap = std::log((1.0 - eps_min) / eps_min) + std::log(q - 1.0);

  SammeResult out;
  out.space = data.space();
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  std::vector<std::uint8_t> miss(m);
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    out.rounds_run = t + 1;
    auto tree = train_tree(data, w, TreeConfig{cfg.depth, cfg.min_leaf});
    CompensatedSum err;
    for (std::size_t i = 0; i < m; ++i) {
      miss[i] = tree.predict(data.row(i)) != data.label(i).index() ? 1 : 0;
      if (miss[i]) err += w[i];
    }
    const double eps = err.value();
    if (eps >= 1.0 - 1.0 / q) {
      out.stopped_weak = true;
      break;
    }
    SammeRound rd{t, eps, 0.0, false};
    if (eps <= 0.0) {
      rd.alpha = alpha_cap;
      rd.capped = true;
    } else {
      rd.alpha = std::log((1.0 - eps) / eps) + std::log(q - 1.0);
    }
    out.trees.push_back(std::make_shared<const TreeVoter>(std::move(tree)));
    out.rounds.push_back(rd);
    if (rd.capped) {
      out.stopped_perfect = true;
      break;
    }
    const double boost = std::exp(rd.alpha);
    CompensatedSum total;
    for (std::size_t i = 0; i < m; ++i) {
      if (miss[i]) w[i] *= boost;
      total += w[i];
    }
    for (auto& v : w) v /= total.value();
  }
  if (out.trees.empty()) fail(ErrorCategory::Degenerate, "no boosting round reached a weighted error below 1 - 1/Q");
  return out;
}

}  // namespace cbound
