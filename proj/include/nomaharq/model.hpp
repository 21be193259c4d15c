#pragma once

// Physical scenario, finite-blocklength code parameters, the normal
// approximation of the block error probability and its piecewise-linear
// surrogate.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>

#include "nomaharq/errors.hpp"
#include "nomaharq/specfun.hpp"

namespace nomaharq {

/// Which receiver (or which message) a quantity refers to.
/// `near` is u1 (close to the base station), `far` is u2.
enum class User { near = 1, far = 2 };

[[nodiscard]] inline constexpr int index(User u) noexcept { return static_cast<int>(u); }

[[nodiscard]] inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }
[[nodiscard]] inline double linear_to_db(double lin) noexcept { return 10.0 * std::log10(lin); }

/// Smallest blocklength for which the normal approximation is trusted.
inline constexpr double kMinBlocklength = 100.0;

/// Two-user downlink NOMA scenario with HARQ-CC.
///
/// Only the transmit SNR rho = P / sigma^2 is stored; the far user's power
/// fraction is always 1 - alpha1.
class SystemConfig {
 public:
  SystemConfig(double rho, double alpha1, double d1, double d2, double eta, int rounds)
      : rho_(rho), alpha1_(alpha1), d1_(d1), d2_(d2), eta_(eta), rounds_(rounds) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive and finite");
    if (!(alpha1 > 0.0 && alpha1 < 0.5)) throw ConfigError("alpha1 must lie in (0, 0.5)");
    if (!(d1 >= 0.0) || !(d2 >= 0.0)) throw ConfigError("distances must be nonnegative");
    if (!(d1 < d2)) throw ConfigError("near user must be closer than far user (d1 < d2)");
    if (!(eta >= 0.0)) throw ConfigError("path-loss exponent must be nonnegative");
    if (rounds < 1) throw ConfigError("T must be at least 1");
  }

  [[nodiscard]] double rho() const noexcept { return rho_; }
  [[nodiscard]] double alpha1() const noexcept { return alpha1_; }
  [[nodiscard]] double alpha2() const noexcept { return 1.0 - alpha1_; }
  [[nodiscard]] double d1() const noexcept { return d1_; }
  [[nodiscard]] double d2() const noexcept { return d2_; }
  [[nodiscard]] double eta() const noexcept { return eta_; }
  [[nodiscard]] int rounds() const noexcept { return rounds_; }

  /// kappa = alpha2 / alpha1, the per-round ceiling of the far-message SINR.
  [[nodiscard]] double kappa() const noexcept { return alpha2() / alpha1_; }

  /// Large-scale power gain 1 / (1 + d^eta).
  [[nodiscard]] double mu(User u) const noexcept {
    const double d = (u == User::near) ? d1_ : d2_;
    return 1.0 / (1.0 + std::pow(d, eta_));
  }

  /// Almost-sure upper bound T * kappa of the accumulated far-message SINR.
  [[nodiscard]] double far_sinr_ceiling() const noexcept { return rounds_ * kappa(); }

  /// A far-message threshold is reachable only strictly below T * kappa.
  [[nodiscard]] bool far_decodable(double threshold) const noexcept {
    return threshold < far_sinr_ceiling();
  }

  [[nodiscard]] SystemConfig with_alpha1(double a1) const {
    return {rho_, a1, d1_, d2_, eta_, rounds_};
  }
  [[nodiscard]] SystemConfig with_rho(double rho) const {
    return {rho, alpha1_, d1_, d2_, eta_, rounds_};
  }
  [[nodiscard]] SystemConfig with_rounds(int t) const {
    return {rho_, alpha1_, d1_, d2_, eta_, t};
  }

 private:
  double rho_;
  double alpha1_;
  double d1_;
  double d2_;
  double eta_;
  int rounds_;
};

/// Information bits per user and the shared blocklength M.
class CodingConfig {
 public:
  CodingConfig(int n1, int n2, double m) : n1_(n1), n2_(n2), m_(m) {
    if (n1 < 1 || n2 < 1) throw ConfigError("information bits must be at least 1");
    if (!(m >= kMinBlocklength)) {
      throw RegimeError("blocklength " + std::to_string(m) +
                        " is below the normal-approximation regime (M >= 100)");
    }
  }

  [[nodiscard]] int n1() const noexcept { return n1_; }
  [[nodiscard]] int n2() const noexcept { return n2_; }
  [[nodiscard]] int bits(User u) const noexcept { return u == User::near ? n1_ : n2_; }
  [[nodiscard]] double m() const noexcept { return m_; }

  [[nodiscard]] CodingConfig with_m(double m) const { return {n1_, n2_, m}; }

 private:
  int n1_;
  int n2_;
  double m_;
};

/// Piecewise-linear surrogate of the Q-function BLER around its midpoint:
/// 1 below `upsilon`, 0 above `tau`, slope -lambda in between.
struct QLinearization {
  double lambda;
  double theta;
  double upsilon;
  double tau;
};

/// SINR at which the code rate n/m equals capacity: 2^{n/m} - 1.
[[nodiscard]] inline double threshold_sinr(double n, double m) noexcept {
  return std::exp2(n / m) - 1.0;
}

[[nodiscard]] inline QLinearization linearize(double n, double m) {
  if (!(n >= 1.0)) throw DomainError("linearize: n must be >= 1");
  if (!(m >= kMinBlocklength)) {
    throw RegimeError("linearize: blocklength " + std::to_string(m) + " below 100");
  }
  const double lambda =
      std::sqrt(m / (2.0 * std::numbers::pi * (std::exp2(2.0 * n / m) - 1.0)));
  const double theta = threshold_sinr(n, m);
  const double half_width = 1.0 / (2.0 * lambda);
  return {lambda, theta, theta - half_width, theta + half_width};
}

/// Normal-approximation block error probability
/// Q((log2(1+g) - n/m) / sqrt(V/m)), V = (log2 e)^2 (1 - (1+g)^{-2}).
/// At g = 0 the dispersion vanishes with a negative numerator; the limit 1 is returned.
[[nodiscard]] inline double instantaneous_bler(double gamma, double n, double m) {
  if (!(gamma >= 0.0)) throw DomainError("instantaneous_bler: SINR must be >= 0");
  if (gamma == 0.0) return 1.0;
  const double inv = 1.0 / (1.0 + gamma);
  const double dispersion = std::numbers::log2e * std::numbers::log2e * (1.0 - inv * inv);
  const double arg = (std::log2(1.0 + gamma) - n / m) / std::sqrt(dispersion / m);
  return specfun::q_function(arg);
}

[[nodiscard]] inline double linearized_bler(double gamma, const QLinearization& lin) {
  if (!(gamma >= 0.0)) throw DomainError("linearized_bler: SINR must be >= 0");
  if (gamma <= lin.upsilon) return 1.0;
  if (gamma >= lin.tau) return 0.0;
  return 0.5 - lin.lambda * (gamma - lin.theta);
}

/// Chase-combining (MRC) accumulation: SINRs of the combined copies add.
[[nodiscard]] inline double accumulate_sinr(std::span<const double> per_round) {
  if (per_round.empty()) throw DomainError("accumulate_sinr: no rounds");
  for (double g : per_round) {
    if (!(g >= 0.0)) throw DomainError("accumulate_sinr: negative SINR");
  }
  return std::accumulate(per_round.begin(), per_round.end(), 0.0);
}

/// Per-round SINR of the far user's message at a receiver with channel power
/// gain `gain` (|h|^2 times path-loss): rho a2 g / (rho a1 g + 1).
[[nodiscard]] inline double far_message_sinr(const SystemConfig& cfg, double gain) noexcept {
  const double s = cfg.rho() * gain;
  return s * cfg.alpha2() / (s * cfg.alpha1() + 1.0);
}

/// Per-round interference-free SINR of the near user's own message after SIC.
[[nodiscard]] inline double near_message_sinr(const SystemConfig& cfg, double gain) noexcept {
  return cfg.rho() * cfg.alpha1() * gain;
}

}  // namespace nomaharq
