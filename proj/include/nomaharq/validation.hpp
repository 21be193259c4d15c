#pragma once

// Oracle suite: closed forms against numerical quadrature and Monte Carlo,
// antiderivative identities, the solver round trip and the figure-level
// claims. Reports carry measured values only (no timings), so two runs with
// the same seed are byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nomaharq/analytic.hpp"
#include "nomaharq/figures.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/montecarlo.hpp"
#include "nomaharq/solver.hpp"

namespace nomaharq::validation {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string measured;
};

/// Multiplies one Stehfest weight in the closed-form route only.
struct OmegaFault {
  int k = 3;  ///< 1-based
  double factor = 1.001;
};

struct Options {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;
  QuadratureConfig quad{};
  GammaInverse gamma_inverse = GammaInverse::regularized;
  std::optional<OmegaFault> omega_fault;
};

namespace detail {

[[nodiscard]] inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

[[nodiscard]] inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Uniform draws for configuration sampling, independent of the MC streams.
class Sampler {
 public:
  Sampler(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(next_++); }
  int integer(int lo, int hi) {
    return std::min(hi, lo + static_cast<int>(uniform(0.0, 1.0) * (hi - lo + 1)));
  }

 private:
  mc::CounterStream rng_;
  std::uint64_t next_ = 0;
};

inline constexpr std::uint64_t kStreamFar = 0xC1;
inline constexpr std::uint64_t kStreamNear = 0xC2;
inline constexpr std::uint64_t kStreamIdentities = 0xC4;

}  // namespace detail

// 1 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_far_closed_form(const Options& o) {
  CriterionResult res{1, "far-user closed form vs quadrature of the series CDF (10 configs, rel 1e-9)", false, {}};
  detail::Sampler s(o.seed, detail::kStreamFar);
  double worst = 0.0;
  int done = 0;
  while (done < 10) {
    const int t = s.integer(1, 3);
    const double rho_db = s.uniform(5.0, 35.0);
    const double a1 = s.uniform(0.05, 0.45);
    const int n = s.integer(100, 400);
    const double m = s.uniform(std::max(100.0, 0.6 * n), 2.0 * n + 100.0);
    const User decoder = (done % 2 == 0) ? User::far : User::near;
    const SystemConfig cfg(db_to_linear(rho_db), a1, 3.0, 7.0, 2.0, t);
    const CodingConfig coding(n, n, m);
    const QLinearization lin = linearize(n, m);
    if (!(lin.tau < cfg.far_sinr_ceiling())) continue;

    const FarSinrSeries clean(cfg, o.quad, decoder);
    double closed = 0.0;
    if (o.omega_fault) {
      auto w = omega_coefficients_wide(o.quad.l_terms);
      w.at(static_cast<std::size_t>(o.omega_fault->k - 1)) *= o.omega_fault->factor;
      closed = avg_bler_far_decode_raw(FarSinrSeries(cfg, o.quad, decoder, std::move(w)), coding);
    } else {
      closed = avg_bler_far_decode_raw(clean, coding);
    }
    const double lo = std::max(lin.upsilon, 0.0);
    double err = 0.0;
    const double quad =
        lin.lambda * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                         [&](double x) { return clean.cdf_raw(x); }, lo, lin.tau, 8, 1e-13, &err);
    worst = std::max(worst, detail::rel_diff(closed, quad));
    ++done;
  }
  res.passed = worst <= 1e-9;
  res.measured = "max rel diff " + detail::fmt("%.3e", worst);
  return res;
}

// 2 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_near_closed_form(const Options& o) {
  CriterionResult res{2, "near-user closed form vs quadrature of the Gamma CDF (10 configs, rel 1e-10)", false, {}};
  detail::Sampler s(o.seed, detail::kStreamNear);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int t = s.integer(1, 6);
    const double rho_db = s.uniform(0.0, 35.0);
    const double a1 = s.uniform(0.05, 0.45);
    const int n = s.integer(50, 400);
    const double m = s.uniform(std::max(100.0, 0.5 * n), 1000.0);
    const SystemConfig cfg(db_to_linear(rho_db), a1, 3.0, 7.0, 2.0, t);
    const CodingConfig coding(n, n, m);
    const QLinearization lin = linearize(n, m);
    const double closed = avg_bler_near_own(cfg, coding).value;
    const double lo = std::max(lin.upsilon, 0.0);
    double err = 0.0;
    const double quad =
        lin.lambda * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                         [&](double x) { return cdf_near_sinr(x, cfg); }, lo, lin.tau, 10, 1e-13,
                         &err);
    worst = std::max(worst, detail::rel_diff(closed, quad));
  }
  res.passed = worst <= 1e-10;
  res.measured = "max rel diff " + detail::fmt("%.3e", worst);
  return res;
}

// 3 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_monte_carlo(const Options& o) {
  CriterionResult res{3, "closed-form eps22/eps11 vs Monte Carlo, T=1..3, 15/20/25 dB", false, {}};
  int checked = 0;
  int failed = 0;
  double worst_ratio = 0.0;  // |diff| / tolerance
  for (int t = 1; t <= 3; ++t) {
    for (double db : {15.0, 20.0, 25.0}) {
      const SystemConfig cfg(db_to_linear(db), 0.1, 3.0, 7.0, 2.0, t);
      const CodingConfig coding(160, 160, 200.0);
      mc::McConfig mcc;
      mcc.seed = o.seed;
      mcc.trials = o.trials;
      const mc::McReport rep = mc::simulate_avg_bler(cfg, coding, mcc);
      const double e22 = avg_bler_far_decode(cfg, coding, o.quad, User::far).value;
      const double e11 = avg_bler_near_own(cfg, coding).value;
      for (const auto& [a, m] : {std::pair{e22, rep.eps22}, std::pair{e11, rep.eps11}}) {
        if (m.value < 1e-4) continue;
        const double tol = std::max(3.0 * m.std_err.value_or(0.0), 0.2 * m.value);
        const double ratio = std::abs(a - m.value) / tol;
        worst_ratio = std::max(worst_ratio, ratio);
        ++checked;
        if (ratio > 1.0) ++failed;
      }
    }
  }
  res.passed = failed == 0 && checked > 0;
  res.measured = std::to_string(checked) + " points, " + std::to_string(failed) +
                 " outside tolerance, worst |diff|/tol " + detail::fmt("%.3f", worst_ratio);
  return res;
}

// 4 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_antiderivatives(const Options& o) {
  CriterionResult res{4, "finite-difference slopes of Omega and Upsilon (20 points each, rel 1e-5)", false, {}};
  detail::Sampler s(o.seed, detail::kStreamIdentities);
  double worst_omega = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double x = s.uniform(0.1, 10.0);
    const double y = s.uniform(0.05, 4.0) * x;
    const double h = 1e-5 * x;
    const double slope = (omega_fn(x + h, y) - omega_fn(x - h, y)) / (2.0 * h);
    worst_omega = std::max(worst_omega, detail::rel_diff(slope, -specfun::exp_integral_e1(y / x)));
  }
  double worst_upsilon = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int t = s.integer(1, 4);
    const double scale = s.uniform(0.5, 50.0);
    const double x = scale * s.uniform(0.3, 2.5) * t;
    const double h = 1e-5 * x;
    const double slope =
        (gamma_sum_cdf_integral(x + h, t, scale) - gamma_sum_cdf_integral(x - h, t, scale)) /
        (2.0 * h);
    worst_upsilon = std::max(worst_upsilon, detail::rel_diff(slope, gamma_sum_cdf(x, t, scale)));
  }
  res.passed = worst_omega <= 1e-5 && worst_upsilon <= 1e-5;
  res.measured = "Omega " + detail::fmt("%.3e", worst_omega) + ", Upsilon " +
                 detail::fmt("%.3e", worst_upsilon);
  return res;
}

// 5 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_gamma_ks(const Options& o) {
  const double n = static_cast<double>(o.trials);
  const double limit = 1.63 / std::sqrt(n) * 1.5;
  CriterionResult res{5, "KS distance of the near-user SNR CDF vs seeded samples, T=1..3", false, {}};
  double worst = 0.0;
  for (int t = 1; t <= 3; ++t) {
    const SystemConfig cfg(db_to_linear(20.0), 0.1, 3.0, 7.0, 2.0, t);
    auto samples = mc::sample_accumulated_sinr(cfg, Stage::s11, static_cast<std::size_t>(o.trials),
                                               o.seed + static_cast<std::uint64_t>(t));
    worst = std::max(worst, mc::ks_distance(std::move(samples),
                                            [&](double r) { return cdf_near_sinr(r, cfg); }));
  }
  res.passed = worst <= limit;
  res.measured = "max KS " + detail::fmt("%.4e", worst) + " (limit " + detail::fmt("%.4e", limit) + ")";
  return res;
}

// 6, 7 ----------------------------------------------------------------------

struct SolverPoint {
  double rho_db = 0.0;
  double eps2 = 0.0;
  std::optional<SolverOutput> noma;
  std::optional<OmaBlocklength> oma;
  double residual = 0.0;        ///< G recomputed at alpha1*
  double near_rel_error = 0.0;  ///< asymptotic eps11 at M vs eps1/(1+delta)
  std::string error;
};

[[nodiscard]] inline std::vector<SolverPoint> run_solver_points(const Options& o) {
  std::vector<SolverPoint> pts;
  for (double eps2 : {1e-5, 5e-6}) {
    for (double db : {30.0, 35.0, 40.0}) {
      SolverPoint p;
      p.rho_db = db;
      p.eps2 = eps2;
      ReliabilityTargets targets;
      targets.eps1_req = 1e-5;
      targets.eps2_req = eps2;
      targets.delta = 0.1;
      targets.nu = 1e-7;
      LinkBudget budget;
      budget.rho = db_to_linear(db);
      budget.rounds = 3;
      SolverOptions so;
      so.gamma_inverse = o.gamma_inverse;
      try {
        const SolverOutput out = solve_power_blocklength(budget, targets, 300, 300, o.quad, so);
        p.noma = out;
        p.residual =
            solver_residual(out.alpha1_star, budget, 300, 300, targets, o.quad, o.gamma_inverse);
        const SystemConfig cfg = budget.with_alpha1(out.alpha1_star);
        const double e11 =
            asymptotic_bler(cfg, CodingConfig(300, 300, out.m_req), Stage::s11, o.quad).value;
        p.near_rel_error = std::abs(e11 - targets.near_own_target()) / targets.near_own_target();
        p.oma = oma_required_blocklength(budget, 300, 300, targets, o.gamma_inverse);
      } catch (const std::exception& e) {
        p.error = e.what();
      }
      pts.push_back(std::move(p));
    }
  }
  return pts;
}

[[nodiscard]] inline CriterionResult check_solver_round_trip(const std::vector<SolverPoint>& pts) {
  CriterionResult res{6, "solver round trip at the Fig.-3 points (|G| <= 1e-7, eps11 to 1e-10)", false, {}};
  bool ok = !pts.empty();
  double worst_g = 0.0;
  double worst_e = 0.0;
  int errors = 0;
  for (const auto& p : pts) {
    if (!p.noma) {
      ok = false;
      ++errors;
      continue;
    }
    worst_g = std::max(worst_g, std::abs(p.residual));
    worst_e = std::max(worst_e, p.near_rel_error);
    ok = ok && std::abs(p.residual) <= 1e-7 && p.near_rel_error <= 1e-10;
  }
  res.passed = ok;
  res.measured = "max |G| " + detail::fmt("%.3e", worst_g) + ", max eps11 rel err " +
                 detail::fmt("%.3e", worst_e) + ", failed solves " + std::to_string(errors);
  return res;
}

[[nodiscard]] inline CriterionResult check_gap_claims(const std::vector<SolverPoint>& pts) {
  CriterionResult res{7, "M_OMA - M_NOMA > 0 at all six points and gap(40 dB) > gap(30 dB) at 1e-5", false, {}};
  bool positive = !pts.empty();
  std::optional<double> gap30;
  std::optional<double> gap40;
  std::ostringstream gaps;
  for (const auto& p : pts) {
    if (!p.noma || !p.oma) {
      positive = false;
      gaps << " " << detail::fmt("%g", p.rho_db) << "dB/" << detail::fmt("%g", p.eps2) << ":n/a";
      continue;
    }
    const double gap = p.oma->total - p.noma->m_req;
    positive = positive && gap > 0.0;
    gaps << " " << detail::fmt("%g", p.rho_db) << "dB/" << detail::fmt("%g", p.eps2) << ":"
         << detail::fmt("%.2f", gap);
    if (p.eps2 == 1e-5 && p.rho_db == 30.0) gap30 = gap;
    if (p.eps2 == 1e-5 && p.rho_db == 40.0) gap40 = gap;
  }
  const bool increasing = gap30 && gap40 && *gap40 > *gap30;
  res.passed = positive && increasing;
  res.measured = std::string("positive ") + (positive ? "yes" : "no") + ", increasing " +
                 (increasing ? "yes" : "no") + ";" + gaps.str();
  return res;
}

// 8 -------------------------------------------------------------------------
[[nodiscard]] inline CriterionResult check_figure_claims(const Options& o) {
  CriterionResult res{8, "Fig. 1: u2 BLER <= u1 BLER; Fig. 2: every column nonincreasing in M", false, {}};
  RunConfig f1 = figures::figure1_defaults();
  f1.quad_n = o.quad.n_nodes;
  f1.quad_l = o.quad.l_terms;
  figures::Figure1Options opts;
  opts.monte_carlo = false;
  const auto rows1 = figures::figure1(f1, opts);
  int order_violations = 0;
  int missing = 0;
  for (std::size_t i = 0; i + 1 < rows1.size(); i += 2) {
    const auto& u1 = rows1[i];
    const auto& u2 = rows1[i + 1];
    if (!u1.bler_analytic || !u2.bler_analytic) {
      ++missing;
      continue;
    }
    if (*u2.bler_analytic > *u1.bler_analytic) ++order_violations;
  }

  RunConfig f2 = figures::figure2_defaults();
  f2.quad_n = o.quad.n_nodes;
  f2.quad_l = o.quad.l_terms;
  const auto rows2 = figures::figure2(f2);
  int monotone_violations = 0;
  using Col = std::optional<double> figures::Figure2Row::*;
  for (Col c : {&figures::Figure2Row::noma_u1, &figures::Figure2Row::noma_u2,
                &figures::Figure2Row::oma20_u1, &figures::Figure2Row::oma20_u2,
                &figures::Figure2Row::oma50_u1, &figures::Figure2Row::oma50_u2}) {
    for (std::size_t i = 0; i + 1 < rows2.size(); ++i) {
      const auto& a = rows2[i].*c;
      const auto& b = rows2[i + 1].*c;
      if (!a || !b) {
        ++missing;
        continue;
      }
      if (*b > *a) ++monotone_violations;
    }
  }
  res.passed = order_violations == 0 && monotone_violations == 0 && missing == 0;
  res.measured = "Fig. 1 order violations " + std::to_string(order_violations) + "/" +
                 std::to_string(rows1.size() / 2) + ", Fig. 2 monotonicity violations " +
                 std::to_string(monotone_violations) + ", missing points " +
                 std::to_string(missing);
  return res;
}

// ---------------------------------------------------------------------------

[[nodiscard]] inline std::vector<CriterionResult> run_all(const Options& o) {
  std::vector<CriterionResult> out;
  out.push_back(check_far_closed_form(o));
  out.push_back(check_near_closed_form(o));
  out.push_back(check_monte_carlo(o));
  out.push_back(check_antiderivatives(o));
  out.push_back(check_gamma_ks(o));
  const auto pts = run_solver_points(o);
  out.push_back(check_solver_round_trip(pts));
  out.push_back(check_gap_claims(pts));
  out.push_back(check_figure_claims(o));
  return out;
}

[[nodiscard]] inline std::string format_report(const std::vector<CriterionResult>& rows,
                                               const Options& o) {
  std::ostringstream os;
  os << "# validation seed=" << o.seed << " trials=" << o.trials << " N=" << o.quad.n_nodes
     << " L=" << o.quad.l_terms << " gamma_inverse="
     << (o.gamma_inverse == GammaInverse::regularized ? "regularized" : "literal");
  if (o.omega_fault) os << " omega_fault=k" << o.omega_fault->k;
  os << "\n";
  for (const auto& r : rows) {
    os << (r.passed ? "PASS" : "FAIL") << "  " << r.id << "  " << r.title << "  |  " << r.measured
       << "\n";
  }
  return os.str();
}

[[nodiscard]] inline bool all_passed(const std::vector<CriterionResult>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

}  // namespace nomaharq::validation
