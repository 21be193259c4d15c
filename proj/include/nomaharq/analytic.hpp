#pragma once

// Closed-form average BLER engine.
//
// Far-message decoding (at either receiver) uses a Gauss-Chebyshev
// approximation of the per-round SINR Laplace transform raised to the T-th
// power and inverted with Gaver-Stehfest weights; integrating the resulting
// CDF over the linearization window gives a sum of Omega antiderivatives.
// Near-user interference-free decoding is exact: the accumulated SNR is
// Gamma(T, rho a1 mu1) distributed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/multiprecision/float128.hpp>

#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/specfun.hpp"

namespace nomaharq {

/// Working precision of the far-SINR series kernels.
using WideReal = boost::multiprecision::float128;

/// Complexity/accuracy knobs: N Chebyshev nodes and L Stehfest terms.
struct QuadratureConfig {
  int n_nodes = 30;
  int l_terms = 18;

  void validate() const {
    if (n_nodes < 1) throw ConfigError("quadrature: N must be >= 1");
    if (l_terms < 2 || l_terms % 2 != 0) throw ConfigError("quadrature: L must be even and >= 2");
  }
};

enum class BlerMethod { closed_form, asymptotic, monte_carlo, oma_closed_form };

[[nodiscard]] inline std::string_view to_string(BlerMethod m) noexcept {
  switch (m) {
    case BlerMethod::closed_form: return "closed_form";
    case BlerMethod::asymptotic: return "asymptotic";
    case BlerMethod::monte_carlo: return "monte_carlo";
    case BlerMethod::oma_closed_form: return "oma_closed_form";
  }
  return "unknown";
}

/// Pre-clamp excess above which a closed form is considered out of tolerance.
inline constexpr double kClampTolerance = 1e-6;

namespace diagnostics {
/// Number of analytic estimates whose unclamped value left [0,1] by more
/// than kClampTolerance since process start (or the last reset).
inline std::atomic<std::uint64_t> clamp_violations{0};
inline void reset() noexcept { clamp_violations.store(0); }
}  // namespace diagnostics

/// An average block error rate with its provenance.
struct BlerEstimate {
  double value = 0.0;
  BlerMethod method = BlerMethod::closed_form;
  std::optional<double> std_err;  ///< Monte Carlo only
  double clamp_excess = 0.0;       ///< distance of the raw value outside [0,1]

  /// Clamps a raw analytic value into [0,1], recording how far outside it was.
  static BlerEstimate from_raw(double raw, BlerMethod method) {
    BlerEstimate e;
    e.method = method;
    e.value = std::clamp(raw, 0.0, 1.0);
    e.clamp_excess = std::max({0.0, raw - 1.0, -raw});
    if (e.clamp_excess > kClampTolerance) diagnostics::clamp_violations.fetch_add(1);
    return e;
  }

  static BlerEstimate monte_carlo(double mean, double stderr_) {
    BlerEstimate e;
    e.method = BlerMethod::monte_carlo;
    e.value = mean;
    e.std_err = stderr_;
    return e;
  }
};

// ---------------------------------------------------------------------------
// Quadrature building blocks

/// Chebyshev-Gauss nodes a_n = cos((2n-1) pi / 2N), n = 1..N (decreasing).
[[nodiscard]] inline std::vector<double> chebyshev_nodes(int n) {
  if (n < 1) throw DomainError("chebyshev_nodes: n must be >= 1");
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    nodes[i - 1] = std::cos((2.0 * i - 1.0) / (2.0 * n) * std::numbers::pi);
  }
  // cos(pi/2) is 6e-17 in floating point; pin exact zeros for odd n.
  if (n % 2 == 1) nodes[n / 2] = 0.0;
  return nodes;
}

/// An assignment of T rounds to N nodes with multinomial weight T! / prod p_n!.
struct Composition {
  std::vector<int> parts;
  std::uint64_t weight = 0;
};

inline constexpr std::uint64_t kDefaultCompositionCap = 10'000'000;

/// Number of compositions C(t + n - 1, n - 1).
[[nodiscard]] inline std::uint64_t composition_count(int t, int n) {
  if (t < 0 || n < 1) throw DomainError("composition_count: need t >= 0, n >= 1");
  return specfun::binomial(static_cast<std::uint64_t>(t + n - 1),
                           static_cast<std::uint64_t>(n - 1));
}

namespace detail {

inline void check_composition_cap(int t, int n, std::uint64_t cap) {
  std::uint64_t count = 0;
  try {
    count = composition_count(t, n);
  } catch (const ResourceError&) {
    throw ResourceError("composition count for T=" + std::to_string(t) +
                        ", N=" + std::to_string(n) + " overflows 64 bits");
  }
  if (count > cap) {
    throw ResourceError("composition count " + std::to_string(count) + " exceeds cap " +
                        std::to_string(cap));
  }
}

/// Visits every composition of t into n parts in reverse-lexicographic order
/// ((t,0,...,0) first). The callback receives the parts vector.
template <class Fn>
void for_each_composition(int t, int n, Fn&& fn) {
  std::vector<int> parts(static_cast<std::size_t>(n), 0);
  // Depth-first: position `pos` receives values from `remaining` down to 0.
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == n - 1) {
      parts[pos] = remaining;
      fn(static_cast<const std::vector<int>&>(parts));
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      parts[pos] = v;
      rec(pos + 1, remaining - v);
    }
    parts[pos] = 0;
  };
  rec(0, t);
}

[[nodiscard]] inline std::uint64_t multinomial(int t, const std::vector<int>& parts) {
  std::uint64_t w = 1;
  int left = t;
  for (int p : parts) {
    if (p == 0) continue;
    w *= specfun::binomial(static_cast<std::uint64_t>(left), static_cast<std::uint64_t>(p));
    left -= p;
  }
  return w;
}

}  // namespace detail

[[nodiscard]] inline std::vector<Composition> enumerate_compositions(
    int t, int n, std::uint64_t cap = kDefaultCompositionCap) {
  if (t < 1 || n < 1) throw DomainError("enumerate_compositions: need t >= 1, n >= 1");
  detail::check_composition_cap(t, n, cap);
  std::vector<Composition> out;
  out.reserve(static_cast<std::size_t>(composition_count(t, n)));
  detail::for_each_composition(t, n, [&](const std::vector<int>& parts) {
    out.push_back({parts, detail::multinomial(t, parts)});
  });
  return out;
}

namespace detail {

__extension__ using Uint128 = unsigned __int128;

inline void check_stehfest_order(int l) {
  if (l < 2 || l % 2 != 0) {
    throw DomainError("omega_coefficients: L must be even and >= 2, got " + std::to_string(l));
  }
  if (l > 40) throw ResourceError("omega_coefficients: L > 40 overflows the exact weights");
}

/// (L/2)! * |w_k| as an exact integer.
[[nodiscard]] inline Uint128 stehfest_numerator(int k, int h) {
  Uint128 s = 0;
  for (int j = (k + 1) / 2; j <= std::min(k, h); ++j) {
    Uint128 term = 1;
    for (int e = 0; e <= h; ++e) term *= static_cast<unsigned>(j);
    term *= specfun::binomial(h, j);
    term *= specfun::binomial(2 * j, j);
    term *= specfun::binomial(j, k - j);
    s += term;
  }
  return s;
}

template <class Real>
[[nodiscard]] std::vector<Real> stehfest_weights(int l) {
  check_stehfest_order(l);
  const int h = l / 2;
  Real h_fact = 1;
  for (int i = 2; i <= h; ++i) h_fact *= i;
  std::vector<Real> w(static_cast<std::size_t>(l));
  for (int k = 1; k <= l; ++k) {
    const Uint128 num = stehfest_numerator(k, h);
    const Real hi = static_cast<Real>(static_cast<std::uint64_t>(num >> 64));
    const Real lo = static_cast<Real>(static_cast<std::uint64_t>(num));
    const Real mag = (hi * 18446744073709551616.0 + lo) / h_fact;
    w[k - 1] = ((h + k) % 2 == 0) ? mag : -mag;
  }
  return w;
}

}  // namespace detail

/// Gaver-Stehfest weights
///   w_k = (-1)^{L/2+k} sum_{j=floor((k+1)/2)}^{min(k,L/2)}
///         j^{L/2+1} / (L/2)! * C(L/2,j) C(2j,j) C(j,k-j),   k = 1..L,
/// each correctly rounded from its exact rational value.
[[nodiscard]] inline std::vector<double> omega_coefficients(int l) {
  return detail::stehfest_weights<double>(l);
}

/// The same weights in quad precision, as used by FarSinrSeries.
[[nodiscard]] inline std::vector<WideReal> omega_coefficients_wide(int l) {
  return detail::stehfest_weights<WideReal>(l);
}

namespace detail {

/// 2 a2 - a1 kappa (a + 1); equals a2 (1 - a) and vanishes only at a = 1.
[[nodiscard]] inline double psi_denominator(double a, const SystemConfig& cfg) {
  const double den = 2.0 * cfg.alpha2() - cfg.alpha1() * cfg.kappa() * (a + 1.0);
  if (!(den >= 1e-12)) {
    throw RegimeError("psi: near-singular Chebyshev node (denominator " + std::to_string(den) +
                      ")");
  }
  return den;
}

/// ln Psi(a) + 1/(mu rho a1): the exponential growth of the prefactor c is
/// folded into each node so nothing overflows at low SNR.
[[nodiscard]] inline double log_psi_scaled(double a, const SystemConfig& cfg, User user) {
  const double den = psi_denominator(a, cfg);
  const double g = cfg.mu(user) * cfg.rho() * cfg.alpha1();
  return 0.5 * std::log1p(-a * a) - 2.0 * std::log(den) + (1.0 - 2.0 * cfg.alpha2() / den) / g;
}

}  // namespace detail

/// Psi(a) = sqrt(1-a^2) / (2a2 - a1 kappa (a+1))^2 * exp(-2 a2 / (mu rho a1 (2a2 - a1 kappa (a+1)))).
[[nodiscard]] inline double psi(double a, const SystemConfig& cfg, User user) {
  if (!(a > -1.0 && a < 1.0)) throw DomainError("psi: node must lie in (-1, 1)");
  const double den = detail::psi_denominator(a, cfg);
  const double g = cfg.mu(user) * cfg.rho() * cfg.alpha1();
  return std::sqrt(1.0 - a * a) / (den * den) * std::exp(-2.0 * cfg.alpha2() / (g * den));
}

/// Prefactor c_i = 2 pi kappa a2 / (N mu_i rho) * exp(1 / (mu_i rho a1)).
/// Overflows to +inf at very low SNR; the series evaluates it in log space.
[[nodiscard]] inline double c_coefficient(const SystemConfig& cfg, int n_nodes, User user) {
  const double murho = cfg.mu(user) * cfg.rho();
  return 2.0 * std::numbers::pi * cfg.kappa() * cfg.alpha2() / (n_nodes * murho) *
         std::exp(1.0 / (murho * cfg.alpha1()));
}

/// S_{k,N} = k kappa ln2 / 2 * sum_n p_n (a_n + 1).
[[nodiscard]] inline double s_kn(int k, const SystemConfig& cfg, const Composition& comp,
                                 const std::vector<double>& nodes) {
  if (k < 1) throw DomainError("s_kn: k must be >= 1");
  if (comp.parts.size() != nodes.size()) throw DomainError("s_kn: composition/node size mismatch");
  double acc = 0.0;
  for (std::size_t n = 0; n < nodes.size(); ++n) acc += comp.parts[n] * (nodes[n] + 1.0);
  return k * cfg.kappa() * std::numbers::ln2 / 2.0 * acc;
}

namespace detail {

template <class Real>
[[nodiscard]] Real e1(const Real& x) {
  return specfun::exp_integral_e1(x);
}

// Rational approximations; much faster than the continued fraction at 113 bits.
template <>
[[nodiscard]] inline WideReal e1(const WideReal& x) {
  if (!(x > 0)) throw DomainError("exp_integral_e1: argument must be positive");
  return boost::math::expint(1, x);
}

}  // namespace detail

/// Omega(x, y) = x e^{-y/x} - (x + y) E1(y/x); an antiderivative in x of E1(y/x).
template <class Real>
[[nodiscard]] Real omega_fn(Real x, Real y) {
  using std::exp;
  if (!(x > 0) || !(y > 0)) throw DomainError("omega_fn: arguments must be positive");
  const Real u = y / x;
  return x * exp(-u) - (x + y) * detail::e1(u);
}

// ---------------------------------------------------------------------------
// Far-message SINR: series CDF and average BLER

/// Precomputed series for the CDF of the accumulated far-message SINR at
/// `decoder`:
///   F(r) = sum_p W_p sum_k w_k ln2 E1(k B_p / r),
/// with W_p = c^T Lambda_p prod_n Psi(a_n)^{p_n} and B_p = S_{1,N}(p).
class FarSinrSeries {
 public:
  FarSinrSeries(const SystemConfig& cfg, const QuadratureConfig& quad, User decoder,
                std::uint64_t composition_cap = kDefaultCompositionCap)
      : FarSinrSeries(cfg, quad, decoder, omega_coefficients_wide(quad.l_terms),
                      composition_cap) {}

  /// Variant with an explicit weight table (used for fault injection).
  FarSinrSeries(const SystemConfig& cfg, const QuadratureConfig& quad, User decoder,
                std::vector<WideReal> omega,
                std::uint64_t composition_cap = kDefaultCompositionCap)
      : ceiling_(cfg.far_sinr_ceiling()), omega_(std::move(omega)) {
    omega_ld_.reserve(omega_.size());
    for (const WideReal& w : omega_) omega_ld_.push_back(static_cast<long double>(w));
    quad.validate();
    if (omega_.size() != static_cast<std::size_t>(quad.l_terms)) {
      throw DomainError("FarSinrSeries: omega table size must equal L");
    }
    const int t = cfg.rounds();
    const int n = quad.n_nodes;
    detail::check_composition_cap(t, n, composition_cap);

    const auto nodes = chebyshev_nodes(n);
    std::vector<double> log_psi(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      log_psi[i] = detail::log_psi_scaled(nodes[i], cfg, decoder);
    }
    const double log_c0 = std::log(2.0 * std::numbers::pi * cfg.kappa() * cfg.alpha2() /
                                   (n * cfg.mu(decoder) * cfg.rho()));
    const double log_t_fact = specfun::log_factorial(t);
    const double s_scale = cfg.kappa() * std::numbers::ln2 / 2.0;

    terms_.reserve(static_cast<std::size_t>(composition_count(t, n)));
    detail::for_each_composition(t, n, [&](const std::vector<int>& parts) {
      double log_w = t * log_c0 + log_t_fact;
      double base = 0.0;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i] == 0) continue;
        log_w += parts[i] * log_psi[i] - specfun::log_factorial(parts[i]);
        base += parts[i] * (nodes[i] + 1.0);
      }
      terms_.push_back({std::exp(log_w), s_scale * base});
    });
  }

  /// T * kappa: the series is only meaningful below this SINR.
  [[nodiscard]] double ceiling() const noexcept { return ceiling_; }
  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
  [[nodiscard]] const std::vector<WideReal>& omega() const noexcept { return omega_; }

  /// Raw (unclamped) series value at r > 0.
  [[nodiscard]] double cdf_raw(double r) const {
    if (!(r > 0.0)) throw DomainError("far-SINR CDF: r must be positive");
    const long double x = r;
    const WideReal xw = r;
    return accumulate_adaptive(
        [&](long double s) -> Bounded {
          const long double e = detail::e1(s / x);
          return {e, e};
        },
        [&](const WideReal& s) { return detail::e1(s / xw); });
  }

  /// The series value with every term in quad precision.
  [[nodiscard]] WideReal cdf_wide(const WideReal& r) const {
    if (!(r > 0)) throw DomainError("far-SINR CDF: r must be positive");
    WideReal total = 0;
    for (const Term& term : terms_) {
      if (term.weight == 0.0) continue;
      total += term.weight * inner_wide(term, [&](const WideReal& s) { return detail::e1(s / r); });
    }
    return boost::math::constants::ln_two<WideReal>() * total;
  }

  /// Raw value of int_lo^hi F(x) dx = sum W sum w ln2 [Omega(lo,S) - Omega(hi,S)].
  [[nodiscard]] double integral_raw(double lo, double hi) const {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("far-SINR CDF integral: need 0 < lo < hi");
    const long double a = lo;
    const long double b = hi;
    const WideReal aw = lo;
    const WideReal bw = hi;
    return accumulate_adaptive(
        [&](long double s) -> Bounded {
          // Omega itself cancels, so the bound carries the magnitudes of its pieces.
          const long double ua = s / a;
          const long double ub = s / b;
          const long double pa = a * std::exp(-ua);
          const long double qa = (a + s) * detail::e1(ua);
          const long double pb = b * std::exp(-ub);
          const long double qb = (b + s) * detail::e1(ub);
          return {(pa - qa) - (pb - qb), pa + qa + pb + qb};
        },
        [&](const WideReal& s) { return omega_fn(aw, s) - omega_fn(bw, s); });
  }

  struct Term {
    double weight;  // W_p
    double base;    // S_{1,N} for this composition
  };

  [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }

 private:
  struct Bounded {
    long double value;
    long double magnitude;  // scale of the rounding error in `value`
  };

  /// Relative accuracy targeted by the adaptive-precision sums.
  static constexpr long double kTargetRelError = 1e-12L;

  template <class WideKernel>
  [[nodiscard]] WideReal inner_wide(const Term& term, WideKernel&& kernel) const {
    WideReal inner = 0;
    const WideReal base = term.base;
    for (std::size_t k = 0; k < omega_.size(); ++k) {
      inner += omega_[k] * kernel(static_cast<int>(k + 1) * base);
    }
    return inner;
  }

  // The inner k-sum cancels by up to eleven orders of magnitude. Every term
  // is first summed in extended precision with a rounding-error bound; the
  // terms with the largest bounds are redone in quad precision until the
  // total bound is below kTargetRelError of the result.
  template <class NarrowKernel, class WideKernel>
  [[nodiscard]] double accumulate_adaptive(NarrowKernel&& narrow, WideKernel&& wide) const {
    constexpr long double ulp = std::numeric_limits<long double>::epsilon();
    std::vector<long double> part(terms_.size(), 0.0L);
    std::vector<long double> bound(terms_.size(), 0.0L);
    for (std::size_t p = 0; p < terms_.size(); ++p) {
      const Term& term = terms_[p];
      if (term.weight == 0.0) continue;
      long double inner = 0;
      long double mag = 0;
      for (std::size_t k = 0; k < omega_ld_.size(); ++k) {
        const Bounded v = narrow(static_cast<int>(k + 1) * static_cast<long double>(term.base));
        inner += omega_ld_[k] * v.value;
        mag += std::abs(omega_ld_[k]) * v.magnitude;
      }
      part[p] = term.weight * inner;
      bound[p] = 64.0L * ulp * term.weight * mag;
    }

    std::vector<std::size_t> order(terms_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return bound[i] > bound[j]; });
    long double total_bound = 0;
    for (long double b : bound) total_bound += b;

    WideReal promoted = 0;
    std::vector<bool> is_wide(terms_.size(), false);
    long double narrow_sum = 0;
    for (long double v : part) narrow_sum += v;
    for (std::size_t i : order) {
      const long double estimate = std::abs(narrow_sum + static_cast<long double>(promoted));
      if (!(total_bound > kTargetRelError * estimate) || bound[i] == 0.0L) break;
      promoted += terms_[i].weight * inner_wide(terms_[i], wide);
      narrow_sum -= part[i];
      total_bound -= bound[i];
      is_wide[i] = true;
    }

    WideReal total = promoted;
    for (std::size_t p = 0; p < terms_.size(); ++p) {
      if (!is_wide[p]) total += part[p];
    }
    return static_cast<double>(boost::math::constants::ln_two<WideReal>() * total);
  }

  double ceiling_;
  std::vector<WideReal> omega_;
  std::vector<long double> omega_ld_;
  std::vector<Term> terms_;
};

/// CDF value with the raw series value and a flag for r outside (0, T kappa).
struct CdfValue {
  double value = 0.0;
  double raw = 0.0;
  bool beyond_validity = false;
};

[[nodiscard]] inline CdfValue cdf_far_sinr(double r, const SystemConfig& cfg,
                                           const QuadratureConfig& quad, User decoder) {
  if (!(r > 0.0)) throw DomainError("cdf_far_sinr: r must be positive");
  const FarSinrSeries series(cfg, quad, decoder);
  const double raw = series.cdf_raw(r);
  return {std::clamp(raw, 0.0, 1.0), raw, r >= series.ceiling()};
}

/// Unclamped lambda2 * int_{max(upsilon2,0)}^{tau2} F(x) dx.
[[nodiscard]] inline double avg_bler_far_decode_raw(const FarSinrSeries& series,
                                                    const CodingConfig& coding) {
  const QLinearization lin = linearize(coding.n2(), coding.m());
  if (!(lin.theta < series.ceiling())) {
    throw FeasibilityError("far message infeasible: theta2 = " + std::to_string(lin.theta) +
                           " >= T*kappa = " + std::to_string(series.ceiling()));
  }
  // Below SINR 0 the CDF vanishes, and Omega(x, S) -> 0 as x -> 0+.
  const double lo = std::max(lin.upsilon, std::numeric_limits<double>::min());
  return lin.lambda * series.integral_raw(lo, lin.tau);
}

/// Average BLER for decoding the far user's message: at u1 (SIC first stage,
/// decoder = near) or at u2 (decoder = far).
[[nodiscard]] inline BlerEstimate avg_bler_far_decode(const FarSinrSeries& series,
                                                      const CodingConfig& coding) {
  return BlerEstimate::from_raw(avg_bler_far_decode_raw(series, coding),
                                BlerMethod::closed_form);
}

[[nodiscard]] inline BlerEstimate avg_bler_far_decode(const SystemConfig& cfg,
                                                      const CodingConfig& coding,
                                                      const QuadratureConfig& quad, User decoder) {
  const QLinearization lin = linearize(coding.n2(), coding.m());
  if (!cfg.far_decodable(lin.theta)) {
    throw FeasibilityError("far message infeasible: theta2 = " + std::to_string(lin.theta) +
                           " >= T*kappa = " + std::to_string(cfg.far_sinr_ceiling()));
  }
  return avg_bler_far_decode(FarSinrSeries(cfg, quad, decoder), coding);
}

// ---------------------------------------------------------------------------
// Near-user interference-free decoding (Gamma-distributed accumulated SNR)

/// Mean per-round SNR rho a1 mu1 of the near user's own message after SIC.
[[nodiscard]] inline double near_scale(const SystemConfig& cfg) noexcept {
  return cfg.rho() * cfg.alpha1() * cfg.mu(User::near);
}

/// CDF of a Gamma(T, scale) variable: P(T, r / scale).
[[nodiscard]] inline double gamma_sum_cdf(double r, int rounds, double scale) {
  if (!(r >= 0.0)) throw DomainError("gamma_sum_cdf: r must be >= 0");
  return specfun::regularized_lower_gamma(rounds, r / scale);
}

/// Antiderivative of the Gamma(T, scale) CDF vanishing at 0:
///   x P(T, x/s) - s T P(T+1, x/s).
[[nodiscard]] inline double gamma_sum_cdf_integral(double x, int rounds, double scale) {
  if (!(x >= 0.0)) throw DomainError("gamma_sum_cdf_integral: x must be >= 0");
  const double y = x / scale;
  return x * specfun::regularized_lower_gamma(rounds, y) -
         scale * rounds * specfun::regularized_lower_gamma(rounds + 1, y);
}

[[nodiscard]] inline double cdf_near_sinr(double r, const SystemConfig& cfg) {
  return gamma_sum_cdf(r, cfg.rounds(), near_scale(cfg));
}

/// Upsilon(x): antiderivative of the near-user SNR CDF, Upsilon(0) = 0.
[[nodiscard]] inline double upsilon_fn(double x, const SystemConfig& cfg) {
  return gamma_sum_cdf_integral(x, cfg.rounds(), near_scale(cfg));
}

namespace detail {

[[nodiscard]] inline double windowed_gamma_bler(const QLinearization& lin, int rounds,
                                                double scale) {
  const double lo = std::max(lin.upsilon, 0.0);
  return lin.lambda * (gamma_sum_cdf_integral(lin.tau, rounds, scale) -
                       gamma_sum_cdf_integral(lo, rounds, scale));
}

}  // namespace detail

/// Average BLER of u1 decoding its own message: lambda1 (Upsilon(tau1) - Upsilon(upsilon1)).
[[nodiscard]] inline BlerEstimate avg_bler_near_own(const SystemConfig& cfg,
                                                    const CodingConfig& coding) {
  const QLinearization lin = linearize(coding.n1(), coding.m());
  return BlerEstimate::from_raw(detail::windowed_gamma_bler(lin, cfg.rounds(), near_scale(cfg)),
                                BlerMethod::closed_form);
}

/// Closed-form stage estimates for one configuration.
struct UserBlerBreakdown {
  BlerEstimate eps11;
  BlerEstimate eps12;
  BlerEstimate eps22;
  BlerEstimate eps1;           ///< eps12 + (1 - eps12) eps11
  BlerEstimate eps1_additive;  ///< eps12 + eps11 (high-SNR decomposition)
  BlerEstimate eps2;
};

[[nodiscard]] inline double combine_sic_stages(double eps12, double eps11) noexcept {
  return eps12 + (1.0 - eps12) * eps11;
}

[[nodiscard]] inline UserBlerBreakdown avg_bler_breakdown(const SystemConfig& cfg,
                                                          const CodingConfig& coding,
                                                          const QuadratureConfig& quad) {
  UserBlerBreakdown b;
  b.eps11 = avg_bler_near_own(cfg, coding);
  b.eps12 = avg_bler_far_decode(cfg, coding, quad, User::near);
  b.eps22 = avg_bler_far_decode(cfg, coding, quad, User::far);
  b.eps1 = BlerEstimate::from_raw(combine_sic_stages(b.eps12.value, b.eps11.value),
                                  BlerMethod::closed_form);
  // a union bound, so exceeding 1 is expected and not a clamp violation
  const double additive = b.eps12.value + b.eps11.value;
  b.eps1_additive.value = std::min(additive, 1.0);
  b.eps1_additive.clamp_excess = std::max(0.0, additive - 1.0);
  b.eps2 = b.eps22;
  return b;
}

/// User-level average BLER. u2: eps22. u1: eps12 + (1 - eps12) eps11, a
/// product-of-averages surrogate for E[eps12 + (1 - eps12) eps11].
[[nodiscard]] inline BlerEstimate avg_bler_user(const SystemConfig& cfg,
                                                const CodingConfig& coding,
                                                const QuadratureConfig& quad, User user) {
  if (user == User::far) return avg_bler_far_decode(cfg, coding, quad, User::far);
  const double e12 = avg_bler_far_decode(cfg, coding, quad, User::near).value;
  const double e11 = avg_bler_near_own(cfg, coding).value;
  return BlerEstimate::from_raw(combine_sic_stages(e12, e11), BlerMethod::closed_form);
}

/// OMA baseline: the user gets `m_share` channel uses at full power without
/// interference, i.e. the near-user Gamma closed form with a1 = 1 and its own mu.
[[nodiscard]] inline BlerEstimate avg_bler_oma(const SystemConfig& cfg, int n_bits,
                                               double m_share, User user) {
  if (!(m_share >= kMinBlocklength)) {
    throw RegimeError("OMA share of " + std::to_string(m_share) +
                      " channel uses is below the normal-approximation regime");
  }
  const QLinearization lin = linearize(n_bits, m_share);
  const double scale = cfg.rho() * cfg.mu(user);
  return BlerEstimate::from_raw(detail::windowed_gamma_bler(lin, cfg.rounds(), scale),
                                BlerMethod::oma_closed_form);
}

}  // namespace nomaharq
