#pragma once

// Fully connected network: relu hidden layers, one sigmoid output, binary
// cross-entropy, Adam.

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

class Mlp {
 public:
  Mlp() = default;

  // layer_sizes = {inputs, hidden..., 1}. Weights ~ N(0, 2 / fan_in), biases 0.
  Mlp(std::vector<std::size_t> layer_sizes, Rng& rng) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2 || sizes_.back() != 1) throw UsageError("network must end in one output unit");
    layout();
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double sd = std::sqrt(2.0 / static_cast<double>(sizes_[l]));
      const std::size_t count = sizes_[l] * sizes_[l + 1];
      for (std::size_t i = 0; i < count; ++i) params_[w_off_[l] + i] = sd * rng.normal();
    }
  }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  // Output logit for one (already standardized) input.
  double logit(std::span<const double> x) const {
    std::vector<double> cur(x.begin(), x.end()), next;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      next.assign(sizes_[l + 1], 0.0);
      affine(l, cur, next);
      if (l + 2 < sizes_.size()) {
        for (auto& v : next) v = std::max(v, 0.0);
      }
      cur.swap(next);
    }
    return cur[0];
  }

  // Mean binary cross-entropy over the given rows; grad receives d(loss)/d(params).
  double loss_and_gradient(DataView x, std::span<const int> labels, std::span<const std::size_t> rows,
                           std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    const std::size_t layers = sizes_.size() - 1;
    std::vector<std::vector<double>> act(layers + 1);  // act[0] = input, act[l] = post-activation
    std::vector<std::vector<double>> delta(layers + 1);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (auto r : rows) {
      act[0].assign(x.values.begin() + static_cast<std::ptrdiff_t>(r * x.cols),
                    x.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * x.cols));
      for (std::size_t l = 0; l < layers; ++l) {
        act[l + 1].assign(sizes_[l + 1], 0.0);
        affine(l, act[l], act[l + 1]);
        if (l + 1 < layers) {
          for (auto& v : act[l + 1]) v = std::max(v, 0.0);
        }
      }
      const double z = act[layers][0];
      const double y = labels[r];
      loss += softplus(z) - y * z;

      delta[layers].assign(1, (sigmoid(z) - y) * inv);
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = sizes_[l], out = sizes_[l + 1];
        double* gw = grad.data() + w_off_[l];
        double* gb = grad.data() + b_off_[l];
        const double* w = params_.data() + w_off_[l];
        for (std::size_t o = 0; o < out; ++o) {
          const double d = delta[l + 1][o];
          gb[o] += d;
          for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += d * act[l][i];
        }
        if (l == 0) break;
        delta[l].assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
          const double d = delta[l + 1][o];
          for (std::size_t i = 0; i < in; ++i) delta[l][i] += w[o * in + i] * d;
        }
        // relu'(z) from the post-activation: zero where the unit was clipped
        for (std::size_t i = 0; i < in; ++i) {
          if (act[l][i] <= 0.0) delta[l][i] = 0.0;
        }
      }
    }
    return loss * inv;
  }

  void save(serial::Writer& w) const {
    w.key("layers").put(sizes_.size());
    for (auto s : sizes_) w.put(s);
    w.key("params").put(std::span<const double>(params_));
  }

  static Mlp load(serial::Reader& r) {
    Mlp m;
    r.expect("layers");
    const auto n = r.integer();
    if (n < 2 || n > 64) throw DataError("model file: bad layer count");
    m.sizes_.resize(n);
    for (auto& s : m.sizes_) s = r.integer();
    if (m.sizes_.back() != 1) throw DataError("model file: network must end in one unit");
    m.layout();
    r.expect("params");
    auto params = r.reals();
    if (params.size() != m.params_.size()) throw DataError("model file: parameter count mismatch");
    m.params_ = std::move(params);
    return m;
  }

 private:
  void layout() {
    w_off_.clear();
    b_off_.clear();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_off_.push_back(offset);
      offset += sizes_[l] * sizes_[l + 1];
      b_off_.push_back(offset);
      offset += sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
  }

  void affine(std::size_t l, std::span<const double> in, std::span<double> out) const {
    const std::size_t n_in = sizes_[l];
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    for (std::size_t o = 0; o < out.size(); ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < n_in; ++i) z += w[o * n_in + i] * in[i];
      out[o] = z;
    }
  }

  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

class MlpModel {
 public:
  static MlpModel fit(DataView data, std::span<const int> labels, const ClassifierSpec& spec) {
    MlpModel m;
    m.scaler_ = Standardizer::fit(data);
    const auto x = m.scaler_.transform_all(data);
    const DataView xs{x, data.cols};

    Rng init_rng(spec.seed);
    m.net_ = Mlp({data.cols, spec.count_param("units_1"), spec.count_param("units_2"), spec.count_param("units_3"), 1},
                 init_rng);
    Rng order_rng(spec.seed + 1);

    const double lr = spec.param("learning_rate");
    const double beta1 = spec.param("beta1"), beta2 = spec.param("beta2"), eps = spec.param("epsilon");
    const std::size_t batch = spec.count_param("batch_size");
    const std::size_t epochs = spec.count_param("epochs");

    auto params = m.net_.parameters();
    std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad;
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double b1_pow = 1.0, b2_pow = 1.0;
    for (std::size_t e = 0; e < epochs; ++e) {
      order_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(order.size(), start + batch);
        m.net_.loss_and_gradient(xs, labels, std::span<const std::size_t>(order).subspan(start, stop - start), grad);
        b1_pow *= beta1;
        b2_pow *= beta2;
        for (std::size_t i = 0; i < params.size(); ++i) {
          m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
          m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
          const double mhat = m1[i] / (1.0 - b1_pow);
          const double vhat = m2[i] / (1.0 - b2_pow);
          params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
      }
    }
    return m;
  }

  double predict_proba(std::span<const double> row) const { return sigmoid(net_.logit(scaler_.transform(row))); }

  const Mlp& network() const { return net_; }

  void save(serial::Writer& w) const {
    scaler_.save(w);
    net_.save(w);
  }

  static MlpModel load(serial::Reader& r, std::size_t width) {
    MlpModel m;
    m.scaler_ = Standardizer::load(r);
    m.net_ = Mlp::load(r);
    if (m.scaler_.width() != width || m.net_.layer_sizes().front() != width) {
      throw DataError("model file: width mismatch");
    }
    return m;
  }

 private:
  Standardizer scaler_;
  Mlp net_;
};

}  // namespace poslink::models
