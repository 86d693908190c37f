#pragma once

// Whitespace-separated token stream used by the model files.

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/io.hpp"

namespace poslink::serial {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& key(std::string_view k) {
    if (!first_) out_ << '\n';
    out_ << k;
    first_ = false;
    return *this;
  }
  Writer& put(std::string_view token) {
    out_ << ' ' << token;
    return *this;
  }
  Writer& put(double v) { return put(io::format_exact(v)); }
  Writer& put(std::size_t v) { return put(std::to_string(v)); }
  Writer& put(long long v) { return put(std::to_string(v)); }
  Writer& put(int v) { return put(std::to_string(v)); }
  Writer& put(std::span<const double> v) {
    put(v.size());
    for (double x : v) put(x);
    return *this;
  }
  void finish() { out_ << '\n'; }

 private:
  std::ostream& out_;
  bool first_ = true;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string token() {
    std::string t;
    if (!(in_ >> t)) throw DataError("model file is truncated");
    return t;
  }
  void expect(std::string_view k) {
    const auto t = token();
    if (t != k) throw DataError("model file: expected '" + std::string(k) + "', found '" + t + "'");
  }
  double real() {
    const auto t = token();
    auto v = io::parse_double(t);
    if (!v) throw DataError("model file: bad number '" + t + "'");
    return *v;
  }
  template <typename Int = std::size_t>
  Int integer() {
    const auto t = token();
    auto v = io::parse_int<Int>(t);
    if (!v) throw DataError("model file: bad integer '" + t + "'");
    return *v;
  }
  std::vector<double> reals(std::size_t max_len = 100'000'000) {
    const auto n = integer();
    if (n > max_len) throw DataError("model file: implausible vector length");
    std::vector<double> v(n);
    for (auto& x : v) x = real();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace poslink::serial
