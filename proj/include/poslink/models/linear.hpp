#pragma once

// Linear learners on standardized features: L2 logistic regression by batch
// gradient descent and a Pegasos hinge-loss SVM.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "poslink/models/serial.hpp"
#include "poslink/models/spec.hpp"
#include "poslink/models/standardizer.hpp"
#include "poslink/models/tree.hpp"
#include "poslink/random.hpp"

namespace poslink::models {

// Weight vector over standardized features plus an intercept.
class LinearScorer {
 public:
  double margin(std::span<const double> row) const {
    double z = bias_;
    for (std::size_t c = 0; c < row.size(); ++c) z += weights_[c] * (row[c] - scaler_.mean(c)) / scaler_.scale(c);
    return z;
  }

  // Weights in original feature units.
  std::vector<double> raw_weights() const {
    std::vector<double> w(weights_.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = weights_[c] / scaler_.scale(c);
    return w;
  }

  void save(serial::Writer& w) const {
    scaler_.save(w);
    w.key("weights").put(std::span<const double>(weights_));
    w.key("bias").put(bias_);
  }

  void load(serial::Reader& r, std::size_t width) {
    scaler_ = Standardizer::load(r);
    r.expect("weights");
    weights_ = r.reals();
    r.expect("bias");
    bias_ = r.real();
    if (weights_.size() != width || scaler_.width() != width) throw DataError("model file: width mismatch");
  }

 protected:
  Standardizer scaler_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

class LogisticModel : public LinearScorer {
 public:
  static LogisticModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    LogisticModel m;
    m.scaler_ = Standardizer::fit(data);
    const auto x = m.scaler_.transform_all(data);
    const std::size_t n = data.rows(), d = data.cols;
    const double inv_n = 1.0 / static_cast<double>(n);
    const double l2 = spec.param("l2");
    const double lr = spec.param("learning_rate");
    const double tol = spec.param("tol");
    const std::size_t max_iter = spec.count_param("max_iter");
    m.weights_.assign(d, 0.0);
    std::vector<double> grad(d);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double* row = x.data() + r * d;
        double z = m.bias_;
        for (std::size_t c = 0; c < d; ++c) z += m.weights_[c] * row[c];
        const double err = sigmoid(z) - labels[r];
        for (std::size_t c = 0; c < d; ++c) grad[c] += err * row[c];
        grad_b += err;
      }
      grad_b *= inv_n;
      double max_norm = std::fabs(grad_b);
      for (std::size_t c = 0; c < d; ++c) {
        grad[c] = grad[c] * inv_n + l2 * m.weights_[c];
        max_norm = std::max(max_norm, std::fabs(grad[c]));
      }
      if (max_norm < tol) break;
      for (std::size_t c = 0; c < d; ++c) m.weights_[c] -= lr * grad[c];
      m.bias_ -= lr * grad_b;
    }
    return m;
  }

  double predict_proba(std::span<const double> row) const { return sigmoid(margin(row)); }

  static LogisticModel load(serial::Reader& r, std::size_t width) {
    LogisticModel m;
    m.LinearScorer::load(r, width);
    return m;
  }
};

// Pegasos: step 1/(lambda t), projection onto the ball of radius
// 1/sqrt(lambda). The intercept is an extra constant feature and is
// regularized with the rest.
class SvmModel : public LinearScorer {
 public:
  static SvmModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    SvmModel m;
    m.scaler_ = Standardizer::fit(data);
    const auto x = m.scaler_.transform_all(data);
    const std::size_t n = data.rows(), d = data.cols;
    const double lambda = spec.param("lambda");
    const std::size_t epochs = spec.count_param("epochs");
    std::vector<double> w(d + 1, 0.0);  // last entry is the intercept
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    double t = 0.0;
    const double radius = 1.0 / std::sqrt(lambda);
    for (std::size_t e = 0; e < epochs; ++e) {
      rng.shuffle(order);
      for (auto r : order) {
        t += 1.0;
        const double eta = 1.0 / (lambda * t);
        const double y = labels[r] == 1 ? 1.0 : -1.0;
        const double* row = x.data() + r * d;
        double z = w[d];
        for (std::size_t c = 0; c < d; ++c) z += w[c] * row[c];
        const double shrink = 1.0 - eta * lambda;
        for (auto& wc : w) wc *= shrink;
        if (y * z < 1.0) {
          for (std::size_t c = 0; c < d; ++c) w[c] += eta * y * row[c];
          w[d] += eta * y;
        }
        double norm = 0.0;
        for (double wc : w) norm += wc * wc;
        norm = std::sqrt(norm);
        if (norm > radius) {
          for (auto& wc : w) wc *= radius / norm;
        }
      }
    }
    m.weights_.assign(w.begin(), w.end() - 1);
    m.bias_ = w[d];
    return m;
  }

  // Logistic link on the margin.
  double predict_proba(std::span<const double> row) const { return sigmoid(margin(row)); }

  static SvmModel load(serial::Reader& r, std::size_t width) {
    SvmModel m;
    m.LinearScorer::load(r, width);
    return m;
  }
};

}  // namespace poslink::models
