#pragma once

#include <cmath>
#include <limits>

#include "poslink/error.hpp"

namespace poslink::math {

// lgamma(a + b) - lgamma(a). Differencing two large lgamma values loses
// about log10(a * log a) digits, so for large a the Stirling series of both
// terms is subtracted analytically instead.
inline double log_gamma_ratio(double a, double b) {
  if (a < 15.0 || a + b < 15.0) return std::lgamma(a + b) - std::lgamma(a);
  const double x = a + b;
  const auto series = [](double z) {
    const double z2 = z * z;
    return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2) -
           1.0 / (1680.0 * z * z2 * z2 * z2);
  };
  // (x - 1/2) log x - (a - 1/2) log a - b, rearranged around log1p(b / a).
  return (a - 0.5) * std::log1p(b / a) + b * std::log(x) - b + series(x) - series(a);
}

// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b)
inline double log_beta(double a, double b) {
  if (a < b) return std::lgamma(a) - log_gamma_ratio(b, a);
  return std::lgamma(b) - log_gamma_ratio(a, b);
}

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  constexpr int max_iter = 100000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b). y must equal 1 - x; passing it
// separately avoids cancellation when x is close to 1.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("incomplete_beta requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log(y) - log_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

inline double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

// P(|T| >= |t|) for Student's t with dof degrees of freedom.
inline double student_t_two_sided(double t, double dof) {
  if (std::isnan(t) || !(dof > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  const double denom = dof + t2;
  const double p = incomplete_beta(dof / 2.0, 0.5, dof / denom, t2 / denom);
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace poslink::math
