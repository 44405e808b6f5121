#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cropmap::models {

/// Internal nodes route x[feature] <= threshold to `left`. Leaves have
/// feature == -1. Every node stores the class-1 frequency of the bootstrap
/// samples that reached it.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_prob = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> bootstrap;

  double predict(std::span<const double> x) const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  /// 0 selects floor(sqrt(n_features)).
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
  /// Threads used to grow trees; results do not depend on it.
  std::size_t workers = 1;
};

struct Forest {
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;

  bool fitted() const { return n_features > 0 && !trees.empty(); }
  friend bool operator==(const Forest&, const Forest&) = default;
};

/// Bagged CART trees: bootstrap of size n per tree, Gini splits over a random
/// feature subset, grown until pure or below min_samples_split.
/// `features` is row-major, n_samples x n_features.
Forest rf_fit(std::span<const double> features, std::size_t n_features, std::span<const int> labels,
              const ForestConfig& config);

/// Mean of the per-tree leaf probabilities.
double rf_predict(const Forest& forest, std::span<const double> x);

}  // namespace cropmap::models
