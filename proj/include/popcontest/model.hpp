#pragma once

// CART decision trees and random forests for classification (Gini) and
// regression (variance reduction), plus the "last value" baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "parallel.hpp"
#include "splitmix.hpp"

namespace popcontest {

enum class Task : std::uint8_t { Classification, Regression };

inline std::string_view to_string(Task t) { return t == Task::Classification ? "classification" : "regression"; }

// Row-major design matrix.
using Matrix = std::vector<std::vector<double>>;

struct TreeParams {
  std::size_t max_depth = 12;
  std::size_t min_samples_split = 2;

  void validate() const {
    if (max_depth < 1) throw ConfigError("forest.max_depth", "must be >= 1");
    if (min_samples_split < 2) throw ConfigError("forest.min_samples_split", "must be >= 2");
  }

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

struct Node {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<double> counts;  // classification leaves: per-class sample counts
  double value = 0.0;          // regression leaves: mean target

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const Node&, const Node&) = default;
};

class Tree {
 public:
  Tree() = default;
  Tree(Task task, std::size_t n_features, std::size_t n_classes, std::vector<Node> nodes)
      : task_(task), n_features_(n_features), n_classes_(n_classes), nodes_(std::move(nodes)) {}

  Task task() const { return task_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  const Node& leaf_for(std::span<const double> x) const {
    if (x.size() != n_features_) throw std::invalid_argument("predict: feature count mismatch");
    std::uint32_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const auto& n = nodes_[i];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i];
  }

  // Majority class of the leaf; ties go to the lowest class index.
  std::size_t predict_class(std::span<const double> x) const {
    const auto& counts = leaf_for(x).counts;
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  double predict_value(std::span<const double> x) const { return leaf_for(x).value; }

  std::size_t depth() const { return depth_from(0); }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::size_t depth_from(std::uint32_t i) const {
    if (nodes_[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(nodes_[i].left), depth_from(nodes_[i].right));
  }

  Task task_ = Task::Classification;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<Node> nodes_;
};

namespace detail {

inline void check_shape(const Matrix& X, std::span<const double> y) {
  if (X.empty()) throw std::invalid_argument("fit: no training rows");
  if (X.size() != y.size())
    throw std::invalid_argument("fit: " + std::to_string(X.size()) + " rows but " + std::to_string(y.size()) +
                                " targets");
  const std::size_t p = X.front().size();
  if (p == 0) throw std::invalid_argument("fit: no feature columns");
  for (const auto& row : X)
    if (row.size() != p) throw std::invalid_argument("fit: ragged feature matrix");
}

inline std::size_t class_count(std::span<const double> y) {
  std::size_t k = 2;
  for (double v : y) {
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument("fit: class labels must be non-negative integers");
    k = std::max(k, static_cast<std::size_t>(v) + 1);
  }
  return k;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const double> y, Task task, std::size_t n_classes, const TreeParams& params,
              std::size_t mtry, SplitMix64* rng)
      : X_(X), y_(y), task_(task), n_classes_(n_classes), params_(params), p_(X.front().size()), mtry_(mtry),
        rng_(rng) {}

  Tree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return Tree(task_, p_, task_ == Task::Classification ? n_classes_ : 0, std::move(nodes_));
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  Node make_leaf(const std::vector<std::size_t>& rows) const {
    Node leaf;
    if (task_ == Task::Classification) {
      leaf.counts.assign(n_classes_, 0.0);
      for (auto r : rows) leaf.counts[static_cast<std::size_t>(y_[r])] += 1.0;
    } else {
      double sum = 0.0;
      for (auto r : rows) sum += y_[r];
      leaf.value = sum / static_cast<double>(rows.size());
    }
    return leaf;
  }

  bool pure(const std::vector<std::size_t>& rows) const {
    for (auto r : rows)
      if (y_[r] != y_[rows.front()]) return false;
    return true;
  }

  // Impurity mass (n * impurity) of a node described by running statistics.
  double impurity_mass(const std::vector<double>& counts, double n, double sum, double sumsq) const {
    if (n == 0) return 0.0;
    if (task_ == Task::Classification) {
      double sq = 0.0;
      for (double c : counts) sq += c * c;
      return n - sq / n;
    }
    return std::max(0.0, sumsq - sum * sum / n);
  }

  // Evaluates every midpoint threshold of one feature; returns true when the
  // feature is non-constant on these rows.
  bool scan_feature(const std::vector<std::size_t>& rows, std::size_t f, double parent_mass, Split& best) const {
    std::vector<std::size_t> order(rows);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return X_[a][f] < X_[b][f]; });
    if (X_[order.front()][f] == X_[order.back()][f]) return false;

    const double n = static_cast<double>(order.size());
    std::vector<double> lc(n_classes_, 0.0), rc(n_classes_, 0.0);
    double ls = 0, lss = 0, rs = 0, rss = 0;
    for (auto r : order) {
      if (task_ == Task::Classification) rc[static_cast<std::size_t>(y_[r])] += 1.0;
      rs += y_[r];
      rss += y_[r] * y_[r];
    }
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const double yk = y_[order[k]];
      if (task_ == Task::Classification) {
        lc[static_cast<std::size_t>(yk)] += 1.0;
        rc[static_cast<std::size_t>(yk)] -= 1.0;
      }
      ls += yk;
      lss += yk * yk;
      rs -= yk;
      rss -= yk * yk;
      const double lo = X_[order[k]][f];
      const double hi = X_[order[k + 1]][f];
      if (lo == hi) continue;
      double thr = lo + (hi - lo) / 2.0;
      if (!(thr < hi)) thr = lo;
      const double nl = static_cast<double>(k + 1);
      const double gain = parent_mass - impurity_mass(lc, nl, ls, lss) - impurity_mass(rc, n - nl, rs, rss);
      const bool better = gain > best.gain ||
                          (gain == best.gain && (f < best.feature || (f == best.feature && thr < best.threshold)));
      if (!best.found || better) best = {true, f, thr, gain};
    }
    return true;
  }

  Split find_split(const std::vector<std::size_t>& rows) {
    std::vector<double> counts(n_classes_, 0.0);
    double sum = 0, sumsq = 0;
    for (auto r : rows) {
      if (task_ == Task::Classification) counts[static_cast<std::size_t>(y_[r])] += 1.0;
      sum += y_[r];
      sumsq += y_[r] * y_[r];
    }
    const double parent_mass = impurity_mass(counts, static_cast<double>(rows.size()), sum, sumsq);

    Split best;
    if (mtry_ >= p_ || rng_ == nullptr) {
      for (std::size_t f = 0; f < p_; ++f) scan_feature(rows, f, parent_mass, best);
      return best;
    }
    // Visit features in a random order until mtry non-constant ones were scanned.
    std::vector<std::size_t> features(p_);
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::size_t scanned = 0;
    for (std::size_t i = 0; i < p_ && scanned < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_->below(p_ - i));
      std::swap(features[i], features[j]);
      if (scan_feature(rows, features[i], parent_mass, best)) ++scanned;
    }
    return best;
  }

  std::uint32_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(make_leaf(rows));
    if (pure(rows) || depth >= params_.max_depth || rows.size() < params_.min_samples_split) return id;

    const Split split = find_split(rows);
    if (!split.found) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (X_[r][split.feature] <= split.threshold ? left : right).push_back(r);
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    Node& node = nodes_[id];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    node.counts.clear();
    node.value = 0.0;
    return id;
  }

  const Matrix& X_;
  std::span<const double> y_;
  Task task_;
  std::size_t n_classes_;
  TreeParams params_;
  std::size_t p_;
  std::size_t mtry_;
  SplitMix64* rng_;
  std::vector<Node> nodes_;
};

}  // namespace detail

// Greedy CART over all rows and all features. Classification targets are class
// indices stored as doubles (0 = BPositive, 1 = APositive in this library).
inline Tree fit_tree(const Matrix& X, std::span<const double> y, Task task, const TreeParams& params = {}) {
  params.validate();
  detail::check_shape(X, y);
  const std::size_t k = task == Task::Classification ? detail::class_count(y) : 0;
  std::vector<std::size_t> rows(X.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  detail::TreeBuilder builder(X, y, task, k, params, X.front().size(), nullptr);
  return builder.build(std::move(rows));
}

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t mtry = 0;  // 0: ceil(sqrt(p)) for classification, ceil(p/3) for regression
  bool bootstrap = true;
  std::uint64_t seed = 0;
  TreeParams tree;

  std::size_t resolved_mtry(std::size_t p, Task task) const {
    if (mtry > p) throw ConfigError("forest.mtry", "mtry " + std::to_string(mtry) + " exceeds feature count " + std::to_string(p));
    if (mtry > 0) return mtry;
    const double pd = static_cast<double>(p);
    const auto m = static_cast<std::size_t>(task == Task::Classification ? std::ceil(std::sqrt(pd)) : std::ceil(pd / 3.0));
    return std::clamp<std::size_t>(m, 1, p);
  }

  void validate() const {
    if (n_trees < 1) throw ConfigError("forest.n_trees", "must be >= 1");
    tree.validate();
  }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct ClassPrediction {
  std::size_t label = 0;
  double probability = 0.0;  // vote share of the winning class
};

class Forest {
 public:
  Forest() = default;
  Forest(Task task, ForestParams params, std::size_t n_features, std::size_t n_classes, std::size_t mtry,
         std::vector<Tree> trees, std::vector<std::uint64_t> seeds)
      : task_(task), params_(params), n_features_(n_features), n_classes_(n_classes), mtry_(mtry),
        trees_(std::move(trees)), seeds_(std::move(seeds)) {}

  Task task() const { return task_; }
  const ForestParams& params() const { return params_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t mtry() const { return mtry_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

  // Majority vote; ties go to the lowest class index.
  ClassPrediction predict_class(std::span<const double> x) const {
    std::vector<std::size_t> votes(std::max<std::size_t>(n_classes_, 2), 0);
    for (const auto& t : trees_) ++votes[t.predict_class(x)];
    const auto winner = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    return {winner, static_cast<double>(votes[winner]) / static_cast<double>(trees_.size())};
  }

  // Mean of the trees' leaf means, unclamped.
  double predict_raw(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict_value(x);
    return sum / static_cast<double>(trees_.size());
  }

  // Regression output clamped to [0, 1], the range of competitive intensity.
  double predict_value(std::span<const double> x) const { return std::clamp(predict_raw(x), 0.0, 1.0); }

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  Task task_ = Task::Classification;
  ForestParams params_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::size_t mtry_ = 0;
  std::vector<Tree> trees_;
  std::vector<std::uint64_t> seeds_;
};

// Tree t draws from splitmix64(seed + t): first its bootstrap sample, then the
// feature order at each split in depth-first, left-first order.
inline Forest fit_forest(const Matrix& X, std::span<const double> y, Task task, const ForestParams& params,
                         unsigned threads = 1) {
  params.validate();
  detail::check_shape(X, y);
  const std::size_t p = X.front().size();
  const std::size_t n = X.size();
  const std::size_t mtry = params.resolved_mtry(p, task);
  const std::size_t k = task == Task::Classification ? detail::class_count(y) : 0;

  std::vector<Tree> trees(params.n_trees);
  std::vector<std::uint64_t> seeds(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) seeds[t] = splitmix64(params.seed + t);

  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    SplitMix64 rng(seeds[t]);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    detail::TreeBuilder builder(X, y, task, k, params.tree, mtry, &rng);
    trees[t] = builder.build(std::move(rows));
  });
  return Forest(task, params, p, k, mtry, std::move(trees), std::move(seeds));
}

// Y(t+1) = Y(t).
template <typename T>
T last_baseline(std::span<const T> history) {
  if (history.empty()) throw std::invalid_argument("last_baseline: empty history");
  return history.back();
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::ordered_json to_json(const Tree& tree) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::ordered_json j;
    if (n.is_leaf()) {
      if (tree.task() == Task::Classification) j["counts"] = n.counts;
      else j["value"] = n.value;
    } else {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return nodes;
}

inline nlohmann::ordered_json to_json(const Forest& f) {
  nlohmann::ordered_json j;
  j["format"] = "popcontest.forest";
  j["version"] = kForestFormatVersion;
  j["task"] = to_string(f.task());
  j["n_features"] = f.n_features();
  j["n_classes"] = f.n_classes();
  j["params"] = {{"n_trees", f.params().n_trees},
                 {"mtry", f.params().mtry},
                 {"resolved_mtry", f.mtry()},
                 {"bootstrap", f.params().bootstrap},
                 {"seed", f.params().seed},
                 {"max_depth", f.params().tree.max_depth},
                 {"min_samples_split", f.params().tree.min_samples_split}};
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < f.trees().size(); ++t)
    trees.push_back({{"seed", f.seeds()[t]}, {"nodes", to_json(f.trees()[t])}});
  j["trees"] = std::move(trees);
  return j;
}

template <typename Json>
Forest forest_from_json(const Json& j) {
  if (j.value("format", std::string{}) != "popcontest.forest")
    throw ConfigError("forest", "not a popcontest forest document");
  if (j.at("version").template get<int>() != kForestFormatVersion)
    throw ConfigError("forest.version", "unsupported version");
  const auto task_name = j.at("task").template get<std::string>();
  const Task task = task_name == "classification" ? Task::Classification : Task::Regression;
  if (task_name != "classification" && task_name != "regression") throw ConfigError("forest.task", "unknown task");

  const auto& pj = j.at("params");
  ForestParams params;
  params.n_trees = pj.at("n_trees").template get<std::size_t>();
  params.mtry = pj.at("mtry").template get<std::size_t>();
  params.bootstrap = pj.at("bootstrap").template get<bool>();
  params.seed = pj.at("seed").template get<std::uint64_t>();
  params.tree.max_depth = pj.at("max_depth").template get<std::size_t>();
  params.tree.min_samples_split = pj.at("min_samples_split").template get<std::size_t>();

  const auto p = j.at("n_features").template get<std::size_t>();
  const auto k = j.at("n_classes").template get<std::size_t>();
  std::vector<Tree> trees;
  std::vector<std::uint64_t> seeds;
  for (const auto& tj : j.at("trees")) {
    seeds.push_back(tj.at("seed").template get<std::uint64_t>());
    std::vector<Node> nodes;
    for (const auto& nj : tj.at("nodes")) {
      Node n;
      if (nj.contains("feature")) {
        n.feature = nj.at("feature").template get<std::int32_t>();
        n.threshold = nj.at("threshold").template get<double>();
        n.left = nj.at("left").template get<std::uint32_t>();
        n.right = nj.at("right").template get<std::uint32_t>();
        if (static_cast<std::size_t>(n.feature) >= p) throw ConfigError("forest.nodes", "feature index out of range");
      } else if (task == Task::Classification) {
        n.counts = nj.at("counts").template get<std::vector<double>>();
      } else {
        n.value = nj.at("value").template get<double>();
      }
      nodes.push_back(std::move(n));
    }
    for (const auto& n : nodes)
      if (!n.is_leaf() && (n.left >= nodes.size() || n.right >= nodes.size()))
        throw ConfigError("forest.nodes", "child index out of range");
    if (nodes.empty()) throw ConfigError("forest.nodes", "empty tree");
    trees.emplace_back(task, p, k, std::move(nodes));
  }
  if (trees.empty()) throw ConfigError("forest.trees", "forest has no trees");
  const auto mtry = pj.value("resolved_mtry", params.mtry);
  return Forest(task, params, p, k, mtry, std::move(trees), std::move(seeds));
}

}  // namespace popcontest
