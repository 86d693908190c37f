#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "poslink/models/serial.hpp"
#include "poslink/models/tree.hpp"

namespace poslink::models {

// Per-feature z-scoring fitted on training data. Constant columns keep a
// scale of 1.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(DataView data) {
    Standardizer s;
    const std::size_t n = data.rows();
    s.mean_.assign(data.cols, 0.0);
    s.scale_.assign(data.cols, 1.0);
    for (std::size_t c = 0; c < data.cols; ++c) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum += data.at(r, c);
      const double mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t r = 0; r < n; ++r) ss += (data.at(r, c) - mean) * (data.at(r, c) - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      s.mean_[c] = mean;
      s.scale_[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  void transform(std::span<const double> x, std::span<double> out) const {
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - mean_[c]) / scale_[c];
  }

  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(x.size());
    transform(x, out);
    return out;
  }

  std::vector<double> transform_all(DataView data) const {
    std::vector<double> out(data.values.size());
    for (std::size_t r = 0; r < data.rows(); ++r) {
      transform(data.values.subspan(r * data.cols, data.cols), std::span<double>(out).subspan(r * data.cols, data.cols));
    }
    return out;
  }

  std::size_t width() const { return mean_.size(); }
  double mean(std::size_t c) const { return mean_[c]; }
  double scale(std::size_t c) const { return scale_[c]; }

  void save(serial::Writer& w) const {
    w.key("mean").put(std::span<const double>(mean_));
    w.key("scale").put(std::span<const double>(scale_));
  }

  static Standardizer load(serial::Reader& r) {
    Standardizer s;
    r.expect("mean");
    s.mean_ = r.reals();
    r.expect("scale");
    s.scale_ = r.reals();
    if (s.mean_.size() != s.scale_.size()) throw DataError("model file: standardizer width mismatch");
    return s;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace poslink::models
