#include "cropmap/models/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "cropmap/error.hpp"

namespace cropmap::models {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // sum over children of pos*neg/n; lower is better
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t d, std::span<const int> y,
              const ForestConfig& cfg, std::mt19937_64& rng)
      : x_(x), d_(d), y_(y), cfg_(cfg), rng_(rng), features_(d) {
    std::iota(features_.begin(), features_.end(), 0);
    max_features_ = cfg.max_features ? std::min(cfg.max_features, d)
                                     : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                                    std::floor(std::sqrt(double(d)))));
  }

  DecisionTree build(std::vector<std::uint32_t> sample) {
    DecisionTree tree;
    tree.bootstrap = sample;
    struct Pending {
      std::size_t begin, end;
      int node;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, sample.size(), 0}};
    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::size_t n = job.end - job.begin;
      std::size_t pos = 0;
      for (std::size_t i = job.begin; i < job.end; ++i) pos += y_[sample[i]] == 1;
      tree.nodes[job.node].leaf_prob = static_cast<double>(pos) / static_cast<double>(n);
      if (pos == 0 || pos == n || n < cfg_.min_samples_split) continue;

      const Split split = best_split(std::span(sample).subspan(job.begin, n));
      if (split.feature < 0) continue;

      const auto mid = std::partition(
          sample.begin() + job.begin, sample.begin() + job.end,
          [&](std::uint32_t s) { return value(s, split.feature) <= split.threshold; });
      const auto split_at = static_cast<std::size_t>(mid - sample.begin());

      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      const int right = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[job.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = right;
      stack.push_back({split_at, job.end, right});
      stack.push_back({job.begin, split_at, left});
    }
    return tree;
  }

 private:
  double value(std::uint32_t sample, int feature) const {
    return x_[static_cast<std::size_t>(sample) * d_ + static_cast<std::size_t>(feature)];
  }

  // Visits features in random order until max_features non-constant ones
  // have been evaluated.
  Split best_split(std::span<const std::uint32_t> node_samples) {
    Split best;
    best.score = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    const std::size_t n = node_samples.size();
    std::size_t total_pos = 0;
    for (auto s : node_samples) total_pos += y_[s] == 1;

    column_.resize(n);
    for (std::size_t k = 0; k < d_ && evaluated < max_features_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d_ - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      const int f = static_cast<int>(features_[k]);

      for (std::size_t i = 0; i < n; ++i) column_[i] = {value(node_samples[i], f), y_[node_samples[i]]};
      std::sort(column_.begin(), column_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column_.front().first == column_.back().first) continue;
      ++evaluated;

      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += column_[i].second == 1;
        if (column_[i].first == column_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double pl = static_cast<double>(left_pos);
        const double pr = static_cast<double>(total_pos - left_pos);
        const double score = pl * (nl - pl) / nl + pr * (nr - pr) / nr;
        if (score < best.score) {
          const double lo = column_[i].first;
          const double hi = column_[i + 1].first;
          double thr = lo + (hi - lo) / 2.0;
          if (thr >= hi || thr < lo) thr = lo;
          best = {f, thr, score};
        }
      }
    }
    return best;
  }

  std::span<const double> x_;
  std::size_t d_;
  std::span<const int> y_;
  const ForestConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<std::size_t> features_;
  std::size_t max_features_ = 1;
  std::vector<std::pair<double, int>> column_;
};

DecisionTree grow_tree(std::span<const double> x, std::size_t d, std::span<const int> y,
                       const ForestConfig& cfg, std::size_t tree_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(tree_index)};
  std::mt19937_64 rng(seq);
  const std::size_t n = y.size();
  std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(n - 1));
  std::vector<std::uint32_t> sample(n);
  for (auto& s : sample) s = draw(rng);
  TreeBuilder builder(x, d, y, cfg, rng);
  return builder.build(std::move(sample));
}

}  // namespace

double DecisionTree::predict(std::span<const double> x) const {
  if (nodes.empty()) throw InvalidArgument("empty decision tree");
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                             : node.right);
  }
  return nodes[i].leaf_prob;
}

Forest rf_fit(std::span<const double> features, std::size_t n_features, std::span<const int> labels,
              const ForestConfig& config) {
  if (labels.empty()) throw InvalidArgument("rf_fit: empty dataset");
  if (n_features == 0 || features.size() != labels.size() * n_features) {
    throw InvalidArgument("rf_fit: feature matrix is " + std::to_string(features.size()) +
                          " values for " + std::to_string(labels.size()) + " samples");
  }
  if (config.n_trees == 0) throw InvalidArgument("rf_fit: n_trees must be > 0");
  if (config.min_samples_split < 2) throw InvalidArgument("rf_fit: min_samples_split must be >= 2");

  Forest forest;
  forest.n_features = n_features;
  forest.trees.resize(config.n_trees);

  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, config.n_trees);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t t = next++; t < config.n_trees; t = next++) {
      try {
        forest.trees[t] = grow_tree(features, n_features, labels, config, t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return forest;
}

double rf_predict(const Forest& forest, std::span<const double> x) {
  if (!forest.fitted()) throw InvalidArgument("rf_predict: forest is not fitted");
  if (x.size() != forest.n_features) {
    throw InvalidArgument("rf_predict: expected " + std::to_string(forest.n_features) +
                          " features, got " + std::to_string(x.size()));
  }
  std::vector<double> probs;
  probs.reserve(forest.trees.size());
  for (const auto& tree : forest.trees) probs.push_back(tree.predict(x));
  // Summing in sorted order makes the result independent of tree order.
  std::sort(probs.begin(), probs.end());
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  return std::clamp(sum / static_cast<double>(probs.size()), 0.0, 1.0);
}

}  // namespace cropmap::models
