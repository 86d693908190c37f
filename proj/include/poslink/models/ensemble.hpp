#pragma once

// Tree learners: single CART tree, random forest, extra trees and
// gradient-boosted trees on logistic loss.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "poslink/models/serial.hpp"
#include "poslink/models/spec.hpp"
#include "poslink/models/standardizer.hpp"
#include "poslink/models/tree.hpp"
#include "poslink/parallel.hpp"
#include "poslink/random.hpp"

namespace poslink::models {

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// CART with Gini impurity, exhaustive midpoint thresholds, unlimited depth
// by default.
class DecisionTreeModel {
 public:
  static DecisionTreeModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    TreeOptions opt;
    opt.max_depth = spec.count_param("max_depth");
    opt.min_samples_split = spec.count_param("min_samples_split");
    TreeBuilder builder(data, GiniCriterion{labels}, opt);
    DecisionTreeModel m;
    m.tree_ = builder.build(all_rows(data.rows()));
    return m;
  }

  double predict_proba(std::span<const double> row) const { return tree_.predict(row); }
  const Tree& tree() const { return tree_; }

  void save(serial::Writer& w) const { tree_.save(w); }
  static DecisionTreeModel load(serial::Reader& r, std::size_t width) {
    DecisionTreeModel m;
    m.tree_ = Tree::load(r, width);
    return m;
  }

 private:
  Tree tree_;
};

inline std::size_t sqrt_features(std::size_t d) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

// Random forest (bootstrap rows, sqrt(d) features per split) or extra trees
// (all rows, one random threshold per examined feature). Tree i is grown
// from seed + i, so the ensemble does not depend on the worker count.
class ForestModel {
 public:
  static ForestModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    const bool extra = spec.kind == ModelKind::ExtraTrees;
    const bool bootstrap = !extra && spec.param("bootstrap") != 0.0;
    const std::size_t n_trees = spec.count_param("n_estimators");
    TreeOptions opt;
    opt.max_depth = spec.count_param("max_depth");
    opt.min_samples_split = spec.count_param("min_samples_split");
    opt.max_features = spec.count_param("max_features");
    if (opt.max_features == 0) opt.max_features = sqrt_features(data.cols);
    opt.random_thresholds = extra;

    ForestModel m;
    m.trees_.resize(n_trees);
    const std::size_t n = data.rows();
    parallel_for(n_trees, [&](std::size_t t) {
      Rng rng(spec.seed + t);
      std::vector<std::size_t> rows;
      if (bootstrap) {
        rows.resize(n);
        for (auto& r : rows) r = rng.index(n);
      } else {
        rows = all_rows(n);
      }
      TreeBuilder builder(data, GiniCriterion{labels}, opt, &rng);
      m.trees_[t] = builder.build(std::move(rows));
    });
    return m;
  }

  // Mean of the trees' leaf class-1 fractions.
  double predict_proba(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(row);
    return sum / static_cast<double>(trees_.size());
  }

  const std::vector<Tree>& trees() const { return trees_; }

  void save(serial::Writer& w) const {
    w.key("trees").put(trees_.size());
    for (const auto& t : trees_) t.save(w);
  }

  static ForestModel load(serial::Reader& r, std::size_t width) {
    ForestModel m;
    r.expect("trees");
    const auto n = r.integer();
    if (n == 0 || n > 1'000'000) throw DataError("model file: bad tree count");
    m.trees_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) m.trees_.push_back(Tree::load(r, width));
    return m;
  }

 private:
  std::vector<Tree> trees_;
};

// Mean logistic loss of raw scores against {0,1} labels.
inline double logistic_loss(std::span<const double> scores, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += softplus(scores[i]) - labels[i] * scores[i];
  return total / static_cast<double>(scores.size());
}

// Stagewise additive regression trees on logistic loss. Each round fits the
// negative gradient y - sigmoid(score) by squared-error splits; leaves hold
// the mean residual and are scaled by eta. With eta < 8 every leaf step is a
// descent step, so the training loss never increases.
class GbtModel {
 public:
  static GbtModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec,
                      std::vector<double>* loss_trace = nullptr) {
    GbtModel m;
    m.eta_ = spec.param("eta");
    const std::size_t rounds = spec.count_param("n_estimators");
    TreeOptions opt;
    opt.max_depth = spec.count_param("max_depth");
    opt.min_samples_leaf = spec.count_param("min_samples_leaf");
    opt.min_samples_split = 2 * opt.min_samples_leaf;
    opt.allow_zero_gain = false;

    const std::size_t n = data.rows();
    const double positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double base = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    m.base_score_ = std::log(base / (1.0 - base));

    std::vector<double> scores(n, m.base_score_);
    std::vector<double> residuals(n);
    if (loss_trace) loss_trace->push_back(logistic_loss(scores, labels));
    m.trees_.reserve(rounds);
    for (std::size_t round = 0; round < rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) residuals[i] = labels[i] - sigmoid(scores[i]);
      TreeBuilder builder(data, SquaredErrorCriterion{residuals}, opt);
      m.trees_.push_back(builder.build(all_rows(n)));
      const auto& tree = m.trees_.back();
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] += m.eta_ * tree.predict(data.values.subspan(i * data.cols, data.cols));
      }
      if (loss_trace) loss_trace->push_back(logistic_loss(scores, labels));
    }
    return m;
  }

  double raw_score(std::span<const double> row) const {
    double s = base_score_;
    for (const auto& t : trees_) s += eta_ * t.predict(row);
    return s;
  }

  double predict_proba(std::span<const double> row) const { return sigmoid(raw_score(row)); }

  std::size_t rounds() const { return trees_.size(); }
  const std::vector<Tree>& trees() const { return trees_; }

  void save(serial::Writer& w) const {
    w.key("base").put(base_score_);
    w.key("eta").put(eta_);
    w.key("trees").put(trees_.size());
    for (const auto& t : trees_) t.save(w);
  }

  static GbtModel load(serial::Reader& r, std::size_t width) {
    GbtModel m;
    r.expect("base");
    m.base_score_ = r.real();
    r.expect("eta");
    m.eta_ = r.real();
    r.expect("trees");
    const auto n = r.integer();
    if (n > 1'000'000) throw DataError("model file: bad tree count");
    m.trees_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) m.trees_.push_back(Tree::load(r, width));
    return m;
  }

 private:
  double base_score_ = 0.0;
  double eta_ = 0.5;
  std::vector<Tree> trees_;
};

}  // namespace poslink::models
