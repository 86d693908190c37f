#pragma once

// Binary decision trees grown by exhaustive or randomized threshold search.
// The split criterion is a policy: Gini for classification trees, squared
// error for the regression trees inside gradient boosting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/models/serial.hpp"
#include "poslink/random.hpp"

namespace poslink::models {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output

  bool leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf()) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf(); }));
  }
  std::size_t depth() const { return depth_from(0); }

  void save(serial::Writer& w) const {
    w.key("tree").put(nodes_.size());
    for (const auto& n : nodes_) {
      w.key("n").put(static_cast<int>(n.feature)).put(n.threshold).put(static_cast<int>(n.left))
          .put(static_cast<int>(n.right)).put(n.value);
    }
  }

  static Tree load(serial::Reader& r, std::size_t n_features) {
    r.expect("tree");
    const auto count = r.integer();
    if (count == 0 || count > 100'000'000) throw DataError("model file: bad tree size");
    std::vector<TreeNode> nodes(count);
    for (auto& n : nodes) {
      r.expect("n");
      n.feature = r.integer<std::int32_t>();
      n.threshold = r.real();
      n.left = r.integer<std::int32_t>();
      n.right = r.integer<std::int32_t>();
      n.value = r.real();
    }
    for (const auto& n : nodes) {
      if (n.leaf()) continue;
      const auto in_range = [&](std::int32_t i) { return i > 0 && static_cast<std::size_t>(i) < count; };
      if (static_cast<std::size_t>(n.feature) >= n_features || !in_range(n.left) || !in_range(n.right)) {
        throw DataError("model file: corrupt tree node");
      }
    }
    return Tree(std::move(nodes));
  }

 private:
  std::size_t depth_from(std::size_t i) const {
    const auto& n = nodes_[i];
    if (n.leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
  }

  std::vector<TreeNode> nodes_;
};

// Gini criterion over {0,1} labels. loss() is n * gini, so the decrease
// loss(parent) - loss(left) - loss(right) equals n times the usual weighted
// impurity decrease.
struct GiniCriterion {
  std::span<const int> labels;

  struct Stats {
    double n = 0.0;
    double pos = 0.0;
  };

  void add(Stats& s, std::size_t row) const {
    s.n += 1.0;
    s.pos += labels[row];
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.n - b.n, a.pos - b.pos}; }
  static double loss(const Stats& s) {
    if (s.n <= 0.0) return 0.0;
    const double p = s.pos / s.n;
    return s.n * 2.0 * p * (1.0 - p);
  }
  static bool pure(const Stats& s) { return s.pos == 0.0 || s.pos == s.n; }
  static double leaf_value(const Stats& s) { return s.pos / s.n; }
};

// Squared error around the mean; the leaf value is the mean target.
struct SquaredErrorCriterion {
  std::span<const double> targets;

  struct Stats {
    double n = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };

  void add(Stats& s, std::size_t row) const {
    s.n += 1.0;
    s.sum += targets[row];
    s.sum_sq += targets[row] * targets[row];
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.n - b.n, a.sum - b.sum, a.sum_sq - b.sum_sq}; }
  static double loss(const Stats& s) {
    if (s.n <= 0.0) return 0.0;
    return std::max(0.0, s.sum_sq - s.sum * s.sum / s.n);
  }
  static bool pure(const Stats& s) { return loss(s) <= 0.0; }
  static double leaf_value(const Stats& s) { return s.sum / s.n; }
};

struct TreeOptions {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // features examined per split; 0 = all, in index order
  bool random_thresholds = false;  // one uniform threshold per examined feature
  // Accept a best split whose decrease is exactly zero. Needed for
  // classification trees to separate XOR-like patterns.
  bool allow_zero_gain = true;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = -1.0;
};

// Gains closer than this are treated as equal, so the earlier candidate
// (lower feature, then lower threshold) wins.
inline constexpr double kGainTieTolerance = 1e-12;

// Dense row-major feature view.
struct DataView {
  std::span<const double> values;
  std::size_t cols = 0;

  double at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }
  std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
};

template <typename Criterion>
class TreeBuilder {
 public:
  TreeBuilder(DataView data, Criterion criterion, TreeOptions options, Rng* rng = nullptr)
      : data_(data), criterion_(std::move(criterion)), options_(options), rng_(rng) {
    if ((options_.max_features != 0 || options_.random_thresholds) && rng_ == nullptr) {
      throw UsageError("randomized tree growth needs a random generator");
    }
  }

  // Grows a tree over the given rows (repeats allowed, as in bootstrap samples).
  Tree build(std::vector<std::size_t> rows) {
    if (rows.empty()) throw UsageError("cannot grow a tree on zero rows");
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return Tree(std::move(nodes_));
  }

  // Best split of the given rows without growing anything.
  std::optional<Split> best_split(std::span<const std::size_t> rows) {
    std::vector<std::size_t> copy(rows.begin(), rows.end());
    typename Criterion::Stats total;
    for (auto r : copy) criterion_.add(total, r);
    return find_split(copy, total);
  }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    typename Criterion::Stats total;
    for (std::size_t i = begin; i < end; ++i) criterion_.add(total, rows_[i]);
    nodes_[id].value = Criterion::leaf_value(total);

    const std::size_t n = end - begin;
    if (Criterion::pure(total) || n < options_.min_samples_split ||
        n < 2 * options_.min_samples_leaf || (options_.max_depth != 0 && depth >= options_.max_depth)) {
      return id;
    }
    std::span<std::size_t> node_rows(rows_.data() + begin, n);
    const auto split = find_split(node_rows, total);
    if (!split) return id;

    const auto mid = std::stable_partition(node_rows.begin(), node_rows.end(), [&](std::size_t r) {
      return data_.at(r, split->feature) <= split->threshold;
    });
    const std::size_t left_end = begin + static_cast<std::size_t>(mid - node_rows.begin());
    nodes_[id].feature = static_cast<std::int32_t>(split->feature);
    nodes_[id].threshold = split->threshold;
    const auto left = grow(begin, left_end, depth + 1);
    const auto right = grow(left_end, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  // All features in index order, or a sorted random subset of max_features.
  std::vector<std::size_t> candidate_features() {
    if (options_.max_features == 0 || options_.max_features >= data_.cols) {
      std::vector<std::size_t> all(data_.cols);
      for (std::size_t f = 0; f < data_.cols; ++f) all[f] = f;
      return all;
    }
    auto subset = rng_->sample_without_replacement(data_.cols, options_.max_features);
    std::sort(subset.begin(), subset.end());
    return subset;
  }

  std::optional<Split> find_split(std::span<std::size_t> rows, const typename Criterion::Stats& total) {
    const double parent_loss = Criterion::loss(total);
    std::optional<Split> best;
    const auto consider = [&](std::size_t f, double threshold, const typename Criterion::Stats& left) {
      const auto right = Criterion::minus(total, left);
      if (left.n < static_cast<double>(options_.min_samples_leaf) ||
          right.n < static_cast<double>(options_.min_samples_leaf)) {
        return;
      }
      const double gain = parent_loss - Criterion::loss(left) - Criterion::loss(right);
      const bool acceptable = options_.allow_zero_gain ? gain > -kGainTieTolerance : gain > kGainTieTolerance;
      if (!acceptable) return;
      if (!best || gain > best->gain + kGainTieTolerance) best = Split{f, threshold, gain};
    };

    std::vector<std::pair<double, std::size_t>> sorted(rows.size());
    for (auto f : candidate_features()) {
      if (options_.random_thresholds) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto r : rows) {
          lo = std::min(lo, data_.at(r, f));
          hi = std::max(hi, data_.at(r, f));
        }
        if (!(lo < hi)) continue;
        double threshold = rng_->uniform(lo, hi);
        if (threshold >= hi) threshold = lo;
        typename Criterion::Stats left;
        for (auto r : rows) {
          if (data_.at(r, f) <= threshold) criterion_.add(left, r);
        }
        consider(f, threshold, left);
        continue;
      }
      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {data_.at(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end());
      typename Criterion::Stats left;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        criterion_.add(left, sorted[i].second);
        const double a = sorted[i].first;
        const double b = sorted[i + 1].first;
        if (a == b) continue;
        double threshold = a + (b - a) / 2.0;
        if (!(threshold < b)) threshold = a;
        consider(f, threshold, left);
      }
    }
    return best;
  }

  DataView data_;
  Criterion criterion_;
  TreeOptions options_;
  Rng* rng_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
};

}  // namespace poslink::models
