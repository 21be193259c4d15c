#pragma once

// Special-function kernel used by the closed-form BLER expressions:
// Gaussian Q, exponential integral E1, integer-order incomplete Gamma
// (forward and inverse), factorials and binomials, compensated summation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/constants/constants.hpp>

#include "nomaharq/errors.hpp"

namespace nomaharq::specfun {

/// Neumaier-compensated accumulator. Keeps a running error term so that
/// alternating sums with large cancelling magnitudes lose as little as
/// possible to rounding.
template <class Real>
class BasicCompensatedSum {
 public:
  void add(Real v) noexcept {
    using std::abs;
    const Real t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  BasicCompensatedSum& operator+=(Real v) noexcept {
    add(v);
    return *this;
  }

  /// Folds another partial accumulator into this one.
  void merge(const BasicCompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }

  [[nodiscard]] Real value() const noexcept { return sum_ + comp_; }

 private:
  Real sum_ = 0;
  Real comp_ = 0;
};

using CompensatedSum = BasicCompensatedSum<double>;

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
[[nodiscard]] inline double q_function(double x) noexcept {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// Exponential integral E1(x) = int_x^inf e^{-t}/t dt for x > 0.
/// Power series for x <= 1, modified-Lentz continued fraction above.
/// Works for any real type with std-style overloads of abs/log/exp found by
/// lookup (double, long double, Boost.Multiprecision types).
template <class Real>
[[nodiscard]] Real exp_integral_e1(Real x) {
  using std::abs;
  using std::exp;
  using std::log;
  if (!(x > 0)) {
    throw DomainError("exp_integral_e1: argument must be positive, got " +
                      std::to_string(static_cast<double>(x)));
  }
  const Real eps = std::numeric_limits<Real>::epsilon();
  constexpr int max_iter = 2000;

  if (x <= 1) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    Real term = 1;
    Real series = 0;
    for (int k = 1; k <= max_iter; ++k) {
      term *= -x / k;
      const Real contrib = term / k;
      series += contrib;
      if (abs(contrib) < abs(series) * eps) break;
    }
    return -boost::math::constants::euler<Real>() - log(x) - series;
  }

  // e^{-x} underflows past this point
  if (x > -log(std::numeric_limits<Real>::min())) return 0;

  // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
  const Real tiny = std::numeric_limits<Real>::min() / eps;
  Real b = x + 1;
  Real c = 1 / tiny;
  Real d = 1 / b;
  Real h = d;
  for (int i = 1; i <= max_iter; ++i) {
    const Real an = -static_cast<Real>(i) * i;
    b += 2;
    d = 1 / (an * d + b);
    c = b + an / c;
    const Real del = c * d;
    h *= del;
    if (abs(del - 1) < eps) return h * exp(-x);
  }
  throw ConvergenceError("exp_integral_e1: continued fraction did not converge");
}

/// ln(n!) for n >= 0.
[[nodiscard]] inline double log_factorial(int n) {
  if (n < 0) throw DomainError("log_factorial: negative argument");
  return std::lgamma(static_cast<double>(n) + 1.0);
}

[[nodiscard]] inline double factorial(int n) {
  if (n < 0) throw DomainError("factorial: negative argument");
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Exact binomial coefficient; throws ResourceError on 64-bit overflow.
[[nodiscard]] inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i is always integral; divide first by gcd to delay overflow.
    const std::uint64_t num = n - k + i;
    std::uint64_t g = std::gcd(r, i);
    std::uint64_t rr = r / g;
    std::uint64_t ii = i / g;
    std::uint64_t nn = num / ii;  // ii divides num once r/g is coprime to ii
    if (rr != 0 && nn > std::numeric_limits<std::uint64_t>::max() / rr) {
      throw ResourceError("binomial: 64-bit overflow");
    }
    r = rr * nn;
  }
  return r;
}

/// Regularized lower incomplete Gamma P(k, x) = gamma(k, x) / Gamma(k) for
/// integer k >= 1. Uses the exact finite sum
///   P(k, x) = 1 - e^{-x} sum_{m<k} x^m / m!
/// when x >= k, and the lower power series when x < k where the finite sum
/// would cancel.
[[nodiscard]] inline double regularized_lower_gamma(int k, double x) {
  if (k < 1) throw DomainError("regularized_lower_gamma: k must be >= 1");
  if (!(x >= 0.0)) throw DomainError("regularized_lower_gamma: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;

  if (x < static_cast<double>(k)) {
    // P(k,x) = x^k e^{-x} / k! * sum_{n>=0} x^n / ((k+1)...(k+n))
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (k + n);
      sum += term;
      if (term < sum * std::numeric_limits<double>::epsilon()) break;
    }
    const double log_prefix = k * std::log(x) - x - log_factorial(k);
    return std::min(1.0, std::exp(log_prefix) * sum);
  }

  // Upper tail Q(k,x) as a finite sum, every term formed in log space.
  const double log_x = std::log(x);
  double tail = 0.0;
  for (int m = 0; m < k; ++m) {
    tail += std::exp(-x + m * log_x - log_factorial(m));
  }
  return std::max(0.0, 1.0 - tail);
}

/// Unregularized lower incomplete Gamma gamma(k, x) = (k-1)! P(k, x).
[[nodiscard]] inline double lower_incomplete_gamma(int k, double x) {
  if (k < 1) throw DomainError("lower_incomplete_gamma: k must be >= 1");
  if (!(x >= 0.0)) throw DomainError("lower_incomplete_gamma: x must be >= 0");
  return factorial(k - 1) * regularized_lower_gamma(k, x);
}

/// Solves P(k, x) = p for x by monotone bisection on [0, k + 40 sqrt(k) + 40].
/// Iterates until the bracket has no representable interior point.
[[nodiscard]] inline double inverse_regularized_lower_gamma(int k, double p) {
  if (k < 1) throw DomainError("inverse_regularized_lower_gamma: k must be >= 1");
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("inverse_regularized_lower_gamma: p must lie in (0,1), got " +
                      std::to_string(p));
  }
  double lo = 0.0;
  double hi = k + 40.0 * std::sqrt(static_cast<double>(k)) + 40.0;
  // Grow the bracket if P(k, hi) has not yet reached p.
  while (regularized_lower_gamma(k, hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 4000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (regularized_lower_gamma(k, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Pick the endpoint whose forward value is closest to p.
  const double err_lo = std::abs(regularized_lower_gamma(k, lo) - p);
  const double err_hi = std::abs(regularized_lower_gamma(k, hi) - p);
  return err_lo < err_hi ? lo : hi;
}

}  // namespace nomaharq::specfun
