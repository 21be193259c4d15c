#pragma once

// High-SNR asymptotic BLERs, the required-blocklength formula and the
// bisection search for the power split that meets both users' targets.

#include <cmath>
#include <string>
#include <vector>

#include "nomaharq/analytic.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/specfun.hpp"

namespace nomaharq {

/// Reading of Gamma(T) gamma^{-1}(T, eps) in the blocklength formula.
///   regularized: x = P^{-1}(T, eps), the exact inverse of the Gamma CDF.
///   literal:     x = Gamma(T) * gamma^{-1}(T, eps) with the unregularized inverse.
/// Both coincide for T = 1.
enum class GammaInverse { regularized, literal };

struct ReliabilityTargets {
  double eps1_req = 1e-5;
  double eps2_req = 1e-5;
  double delta = 0.1;  ///< eps12 = delta * eps11 split of u1's budget
  double nu = 1e-7;    ///< residual tolerance

  void validate() const {
    if (!(eps1_req > 0.0 && eps1_req < 1.0)) throw ConfigError("eps1_req must lie in (0,1)");
    if (!(eps2_req > 0.0 && eps2_req < 1.0)) throw ConfigError("eps2_req must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  }

  /// Budget for u1's interference-free stage: eps1_req / (1 + delta).
  [[nodiscard]] double near_own_target() const noexcept { return eps1_req / (1.0 + delta); }
};

/// Everything in a SystemConfig except the power split, which the solver chooses.
struct LinkBudget {
  double rho = 1000.0;
  double d1 = 3.0;
  double d2 = 7.0;
  double eta = 2.0;
  int rounds = 3;

  [[nodiscard]] SystemConfig with_alpha1(double alpha1) const {
    return {rho, alpha1, d1, d2, eta, rounds};
  }
  [[nodiscard]] static LinkBudget from(const SystemConfig& cfg) {
    return {cfg.rho(), cfg.d1(), cfg.d2(), cfg.eta(), cfg.rounds()};
  }
  [[nodiscard]] double mu(User u) const noexcept {
    const double d = (u == User::near) ? d1 : d2;
    return 1.0 / (1.0 + std::pow(d, eta));
  }
};

/// SIC stages: 11 = u1 own message, 12 = u1 decoding u2's message, 22 = u2.
enum class Stage { s11, s12, s22 };

/// Normalized SNR threshold x with F(scale * x) = eps for a Gamma(T, scale) sum.
[[nodiscard]] inline double gamma_threshold(int rounds, double eps, GammaInverse mode) {
  if (mode == GammaInverse::regularized) {
    return specfun::inverse_regularized_lower_gamma(rounds, eps);
  }
  const double gamma_t = specfun::factorial(rounds - 1);
  const double p = eps / gamma_t;
  return gamma_t * specfun::inverse_regularized_lower_gamma(rounds, p);
}

/// Real-valued blocklength M = n / log2(1 + scale * x(T, eps)), no regime check.
[[nodiscard]] inline double blocklength_for_target(int n_bits, double scale, int rounds,
                                                   double eps, GammaInverse mode) {
  const double x = gamma_threshold(rounds, eps, mode);
  const double rate = std::log2(1.0 + scale * x);
  if (!(rate > 0.0)) throw ConvergenceError("blocklength: threshold inversion returned zero");
  return n_bits / rate;
}

/// Asymptotic (midpoint-Riemann) BLER: the SINR CDF evaluated at theta.
[[nodiscard]] inline BlerEstimate asymptotic_bler(const SystemConfig& cfg,
                                                  const CodingConfig& coding, Stage stage,
                                                  const QuadratureConfig& quad) {
  if (stage == Stage::s11) {
    const double theta1 = threshold_sinr(coding.n1(), coding.m());
    return BlerEstimate::from_raw(cdf_near_sinr(theta1, cfg), BlerMethod::asymptotic);
  }
  const double theta2 = threshold_sinr(coding.n2(), coding.m());
  if (!cfg.far_decodable(theta2)) {
    throw FeasibilityError("asymptotic_bler: theta2 >= T*kappa");
  }
  const FarSinrSeries series(cfg, quad, stage == Stage::s12 ? User::near : User::far);
  return BlerEstimate::from_raw(series.cdf_raw(theta2), BlerMethod::asymptotic);
}

/// Blocklength at which u1's asymptotic own-message BLER equals eps1_req / (1 + delta).
[[nodiscard]] inline double required_blocklength_near(const SystemConfig& cfg, int n1,
                                                      const ReliabilityTargets& targets,
                                                      GammaInverse mode = GammaInverse::regularized) {
  targets.validate();
  const double m = blocklength_for_target(n1, near_scale(cfg), cfg.rounds(),
                                          targets.near_own_target(), mode);
  if (!(m >= kMinBlocklength)) {
    throw RegimeError("required blocklength " + std::to_string(m) +
                      " is below the normal-approximation regime (M >= 100)");
  }
  return m;
}

/// Value of G at an infeasible power split (theta2 >= T*kappa): target unreachable.
inline constexpr double kInfeasibleResidual = 1.0;

/// G(alpha1) = asymptotic eps22 at M(alpha1) minus eps2_req, where M(alpha1)
/// comes from the near-user blocklength formula.
[[nodiscard]] inline double solver_residual(double alpha1, const LinkBudget& budget, int n1,
                                            int n2, const ReliabilityTargets& targets,
                                            const QuadratureConfig& quad,
                                            GammaInverse mode = GammaInverse::regularized) {
  const SystemConfig cfg = budget.with_alpha1(alpha1);
  const double m = blocklength_for_target(n1, near_scale(cfg), cfg.rounds(),
                                          targets.near_own_target(), mode);
  const double theta2 = threshold_sinr(n2, m);
  if (!cfg.far_decodable(theta2)) return kInfeasibleResidual;
  const FarSinrSeries series(cfg, quad, User::far);
  return std::clamp(series.cdf_raw(theta2), 0.0, 1.0) - targets.eps2_req;
}

struct SolverOptions {
  GammaInverse gamma_inverse = GammaInverse::regularized;
  int max_iterations = 200;
  /// Uniform grid used to locate the first sign change of G from the left.
  int scan_points = 64;
  /// Start the bisection from [0, 0.5] exactly as written, without the scan.
  bool literal_bracket = false;
};

struct SolverOutput {
  double alpha1_star = 0.0;
  double m_req = 0.0;       ///< real-valued blocklength
  long long m_req_ceil = 0;  ///< channel uses, rounded up
  int iterations = 0;
  double residual = 0.0;
  double bracket_lo = 0.0;  ///< final bisection bracket
  double bracket_hi = 0.0;
};

/// Power allocation and required blocklength for NOMA with HARQ-CC.
[[nodiscard]] inline SolverOutput solve_power_blocklength(const LinkBudget& budget,
                                                          const ReliabilityTargets& targets,
                                                          int n1, int n2,
                                                          const QuadratureConfig& quad,
                                                          const SolverOptions& opts = {}) {
  targets.validate();
  quad.validate();
  auto G = [&](double a) {
    return solver_residual(a, budget, n1, n2, targets, quad, opts.gamma_inverse);
  };
  const double upper = std::nextafter(0.5, 0.0);

  double lo = 0.0;
  double hi = upper;
  double g_hi = 0.0;
  if (opts.literal_bracket) {
    g_hi = G(hi);
  } else {
    const int n = std::max(opts.scan_points, 2);
    bool found = false;
    double prev = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double a = (i == n) ? upper : 0.5 * i / n;
      const double g = G(a);
      if (g > 0.0) {
        if (i == 1) {
          throw FeasibilityError("infeasible targets: far-user target unreachable at every alpha1");
        }
        lo = prev;
        hi = a;
        g_hi = g;
        found = true;
        break;
      }
      if (std::abs(g) <= targets.nu) {
        // Landed on a root during the scan.
        const SystemConfig cfg = budget.with_alpha1(a);
        SolverOutput out;
        out.alpha1_star = a;
        out.m_req = required_blocklength_near(cfg, n1, targets, opts.gamma_inverse);
        out.m_req_ceil = static_cast<long long>(std::ceil(out.m_req));
        out.residual = g;
        out.bracket_lo = prev;
        out.bracket_hi = a;
        return out;
      }
      prev = a;
    }
    if (!found) {
      throw FeasibilityError("infeasible targets: G(alpha1) has no sign change on (0, 0.5)");
    }
  }

  int it = 0;
  double c = 0.0;
  double g_c = 0.0;
  do {
    if (++it > opts.max_iterations) {
      throw ConvergenceError("solver: iteration cap reached with |G| = " + std::to_string(g_c));
    }
    c = 0.5 * (lo + hi);
    g_c = G(c);
    if (std::abs(g_c) <= targets.nu) break;
    if (g_c * g_hi > 0.0) {
      hi = c;
      g_hi = g_c;
    } else {
      lo = c;
    }
  } while (true);

  SolverOutput out;
  out.alpha1_star = c;
  out.m_req = required_blocklength_near(budget.with_alpha1(c), n1, targets, opts.gamma_inverse);
  out.m_req_ceil = static_cast<long long>(std::ceil(out.m_req));
  out.iterations = it;
  out.residual = g_c;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

/// OMA blocklength: each user gets enough channel uses at full power to meet
/// its own target; u1's target carries the same (1 + delta) split as NOMA.
struct OmaBlocklength {
  double m1 = 0.0;
  double m2 = 0.0;
  double total = 0.0;
  bool m1_below_regime = false;  ///< share < 100 channel uses
  bool m2_below_regime = false;
};

[[nodiscard]] inline OmaBlocklength oma_required_blocklength(
    const LinkBudget& budget, int n1, int n2, const ReliabilityTargets& targets,
    GammaInverse mode = GammaInverse::regularized) {
  targets.validate();
  OmaBlocklength out;
  out.m1 = blocklength_for_target(n1, budget.rho * budget.mu(User::near), budget.rounds,
                                  targets.near_own_target(), mode);
  out.m2 = blocklength_for_target(n2, budget.rho * budget.mu(User::far), budget.rounds,
                                  targets.eps2_req, mode);
  out.total = out.m1 + out.m2;
  out.m1_below_regime = out.m1 < kMinBlocklength;
  out.m2_below_regime = out.m2 < kMinBlocklength;
  if (!(out.total >= kMinBlocklength)) {
    throw RegimeError("OMA blocklength " + std::to_string(out.total) + " below 100");
  }
  return out;
}

}  // namespace nomaharq
