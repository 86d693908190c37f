#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "poslink/models/serial.hpp"
#include "poslink/models/spec.hpp"
#include "poslink/models/standardizer.hpp"
#include "poslink/models/tree.hpp"

namespace poslink::models {

// Exhaustive k-nearest-neighbour vote on standardized features. Equal
// distances rank the lower training row first.
class KnnModel {
 public:
  static KnnModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    KnnModel m;
    m.k_ = spec.count_param("n_neighbors");
    m.scaler_ = Standardizer::fit(data);
    m.points_ = m.scaler_.transform_all(data);
    m.labels_.assign(labels.begin(), labels.end());
    m.cols_ = data.cols;
    return m;
  }

  // Training rows of the k nearest neighbours, nearest first.
  std::vector<std::size_t> neighbours(std::span<const double> row) const {
    const auto q = scaler_.transform(row);
    const std::size_t n = labels_.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t r = 0; r < n; ++r) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < cols_; ++c) {
        const double diff = points_[r * cols_ + c] - q[c];
        d2 += diff * diff;
      }
      dist[r] = {d2, r};
    }
    const std::size_t k = std::min(k_, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
  }

  // Fraction of the k neighbours labeled 1.
  double predict_proba(std::span<const double> row) const {
    const auto nn = neighbours(row);
    std::size_t ones = 0;
    for (auto r : nn) ones += labels_[r] == 1 ? 1 : 0;
    return static_cast<double>(ones) / static_cast<double>(nn.size());
  }

  void save(serial::Writer& w) const {
    w.key("k").put(k_);
    scaler_.save(w);
    w.key("points").put(std::span<const double>(points_));
    w.key("labels").put(labels_.size());
    for (int l : labels_) w.put(l);
  }

  static KnnModel load(serial::Reader& r, std::size_t width) {
    KnnModel m;
    r.expect("k");
    m.k_ = r.integer();
    m.scaler_ = Standardizer::load(r);
    r.expect("points");
    m.points_ = r.reals();
    r.expect("labels");
    const auto n = r.integer();
    if (m.k_ == 0 || width == 0 || m.scaler_.width() != width || m.points_.size() != n * width) {
      throw DataError("model file: inconsistent knn state");
    }
    m.labels_.resize(n);
    for (auto& l : m.labels_) l = r.integer<int>();
    m.cols_ = width;
    return m;
  }

 private:
  std::size_t k_ = 3;
  Standardizer scaler_;
  std::vector<double> points_;
  std::vector<int> labels_;
  std::size_t cols_ = 0;
};

}  // namespace poslink::models
