#pragma once

// Data series behind the three figures: BLER vs SNR (analytic and Monte
// Carlo), BLER vs blocklength for NOMA and two OMA splits, and the required
// blocklength of NOMA vs OMA.

#include <optional>
#include <string>
#include <vector>

#include "nomaharq/analytic.hpp"
#include "nomaharq/config_io.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/montecarlo.hpp"
#include "nomaharq/solver.hpp"

namespace nomaharq::figures {

/// Point-level outcome tags written to the `flag` column.
inline constexpr const char* kFlagOk = "";
inline constexpr const char* kFlagInfeasible = "infeasible";
inline constexpr const char* kFlagRegime = "regime";
inline constexpr const char* kFlagClamped = "clamped";

// ---------------------------------------------------------------------------
// Figure 1: average BLER of both users vs transmit SNR, T = 1..3

[[nodiscard]] inline RunConfig figure1_defaults() {
  RunConfig c;
  c.alpha1 = 0.1;
  c.n1 = c.n2 = 160;
  c.m = 200.0;
  c.sweep = SweepSpec{"rho_db", 10.0, 40.0, 2.5};
  return c;
}

struct Figure1Row {
  double rho_db = 0.0;
  int rounds = 1;
  int user = 1;
  std::optional<double> bler_analytic;
  std::optional<double> bler_mc;
  std::optional<double> mc_stderr;
  std::string flag;
};

struct Figure1Options {
  std::vector<int> rounds{1, 2, 3};
  bool monte_carlo = true;
};

[[nodiscard]] inline std::vector<Figure1Row> figure1(const RunConfig& cfg,
                                                     const Figure1Options& opts = {}) {
  if (!cfg.sweep || cfg.sweep->variable != "rho_db") {
    throw ConfigError("figure1 sweeps rho_db");
  }
  const auto rhos = cfg.sweep->points();
  const QuadratureConfig quad = cfg.quadrature();
  const CodingConfig coding = cfg.coding();

  struct Cell {
    double rho_db;
    int rounds;
  };
  std::vector<Cell> cells;
  for (double r : rhos) {
    for (int t : opts.rounds) cells.push_back({r, t});
  }
  std::vector<std::vector<Figure1Row>> out(cells.size());

  mc::detail::parallel_for(cells.size(), 0, [&](std::size_t i) {
    const Cell c = cells[i];
    RunConfig point = cfg;
    point.rho_db = c.rho_db;
    point.T = c.rounds;
    const SystemConfig sys = point.system();

    Figure1Row u1{c.rho_db, c.rounds, 1, {}, {}, {}, kFlagOk};
    Figure1Row u2{c.rho_db, c.rounds, 2, {}, {}, {}, kFlagOk};
    try {
      const UserBlerBreakdown b = avg_bler_breakdown(sys, coding, quad);
      u1.bler_analytic = b.eps1.value;
      u2.bler_analytic = b.eps2.value;
      if (b.eps11.clamp_excess > kClampTolerance || b.eps12.clamp_excess > kClampTolerance) {
        u1.flag = kFlagClamped;
      }
      if (b.eps22.clamp_excess > kClampTolerance) u2.flag = kFlagClamped;
    } catch (const FeasibilityError&) {
      u1.flag = u2.flag = kFlagInfeasible;
    }
    if (opts.monte_carlo && u1.flag != kFlagInfeasible) {
      mc::McConfig mcc = point.monte_carlo();
      mcc.threads = 1;
      const mc::McReport rep = mc::simulate_avg_bler(sys, coding, mcc);
      u1.bler_mc = rep.eps1.value;
      u1.mc_stderr = rep.eps1.std_err;
      u2.bler_mc = rep.eps2.value;
      u2.mc_stderr = rep.eps2.std_err;
    }
    out[i] = {u1, u2};
  });

  std::vector<Figure1Row> rows;
  for (auto& pair : out) rows.insert(rows.end(), pair.begin(), pair.end());
  return rows;
}

// ---------------------------------------------------------------------------
// Figure 2: average BLER vs blocklength, NOMA vs OMA with 20% / 50% for u1

[[nodiscard]] inline RunConfig figure2_defaults() {
  RunConfig c;
  c.alpha1 = 0.2;
  c.rho_db = 30.0;
  c.T = 3;
  c.n1 = c.n2 = 300;
  c.m = 1000.0;
  c.sweep = SweepSpec{"m", 500.0, 1500.0, 50.0};
  return c;
}

struct Figure2Row {
  double m = 0.0;
  std::optional<double> noma_u1;
  std::optional<double> noma_u2;
  std::optional<double> oma20_u1;
  std::optional<double> oma20_u2;
  std::optional<double> oma50_u1;
  std::optional<double> oma50_u2;
  std::string flag;
};

[[nodiscard]] inline std::vector<Figure2Row> figure2(const RunConfig& cfg) {
  if (!cfg.sweep || cfg.sweep->variable != "m") throw ConfigError("figure2 sweeps m");
  const auto ms = cfg.sweep->points();
  const SystemConfig sys = cfg.system();
  const QuadratureConfig quad = cfg.quadrature();
  // The series depend on the channel only, so they are shared by every M.
  const FarSinrSeries near_series(sys, quad, User::near);
  const FarSinrSeries far_series(sys, quad, User::far);

  std::vector<Figure2Row> rows(ms.size());
  mc::detail::parallel_for(ms.size(), 0, [&](std::size_t i) {
    Figure2Row& r = rows[i];
    r.m = ms[i];
    try {
      const CodingConfig coding(cfg.n1, cfg.n2, r.m);
      const double e11 = avg_bler_near_own(sys, coding).value;
      const double e12 = avg_bler_far_decode(near_series, coding).value;
      r.noma_u1 = combine_sic_stages(e12, e11);
      r.noma_u2 = avg_bler_far_decode(far_series, coding).value;
      r.oma20_u1 = avg_bler_oma(sys, cfg.n1, 0.2 * r.m, User::near).value;
      r.oma20_u2 = avg_bler_oma(sys, cfg.n2, 0.8 * r.m, User::far).value;
      r.oma50_u1 = avg_bler_oma(sys, cfg.n1, 0.5 * r.m, User::near).value;
      r.oma50_u2 = avg_bler_oma(sys, cfg.n2, 0.5 * r.m, User::far).value;
    } catch (const FeasibilityError&) {
      r = Figure2Row{ms[i], {}, {}, {}, {}, {}, {}, kFlagInfeasible};
    } catch (const RegimeError&) {
      r = Figure2Row{ms[i], {}, {}, {}, {}, {}, {}, kFlagRegime};
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Figure 3: required blocklength, NOMA (Algorithm 1) vs OMA

[[nodiscard]] inline RunConfig figure3_defaults() {
  RunConfig c;
  c.T = 3;
  c.n1 = c.n2 = 300;
  c.eps1_req = 1e-5;
  c.delta = 0.1;
  c.nu = 1e-7;
  c.sweep = SweepSpec{"rho_db", 30.0, 40.0, 2.5};
  return c;
}

struct Figure3Row {
  double rho_db = 0.0;
  double eps2_target = 0.0;
  std::optional<double> m_noma;
  std::optional<double> m_oma;
  std::optional<double> gap;  ///< m_oma - m_noma
  std::optional<double> alpha1_star;
  std::string flag;
};

/// Far-user targets of the figure: the configured one, or {1e-5, 5e-6}.
[[nodiscard]] inline std::vector<double> figure3_targets(const RunConfig& cfg) {
  if (cfg.eps2_req) return {*cfg.eps2_req};
  return {1e-5, 5e-6};
}

[[nodiscard]] inline Figure3Row figure3_point(const RunConfig& cfg, double rho_db,
                                              double eps2, const SolverOptions& opts) {
  RunConfig point = cfg;
  point.rho_db = rho_db;
  point.eps2_req = eps2;
  Figure3Row r;
  r.rho_db = rho_db;
  r.eps2_target = eps2;
  try {
    const ReliabilityTargets targets = point.targets();
    const LinkBudget budget = point.link_budget();
    const SolverOutput s =
        solve_power_blocklength(budget, targets, point.n1, point.n2, point.quadrature(), opts);
    const OmaBlocklength oma =
        oma_required_blocklength(budget, point.n1, point.n2, targets, opts.gamma_inverse);
    r.m_noma = s.m_req;
    r.m_oma = oma.total;
    r.gap = oma.total - s.m_req;
    r.alpha1_star = s.alpha1_star;
  } catch (const FeasibilityError&) {
    r.flag = kFlagInfeasible;
  } catch (const RegimeError&) {
    r.flag = kFlagRegime;
  } catch (const ConvergenceError&) {
    r.flag = kFlagInfeasible;
  }
  return r;
}

[[nodiscard]] inline std::vector<Figure3Row> figure3(const RunConfig& cfg,
                                                     const SolverOptions& opts = {}) {
  if (!cfg.sweep || cfg.sweep->variable != "rho_db") {
    throw ConfigError("figure3 sweeps rho_db");
  }
  (void)cfg.targets();
  const auto rhos = cfg.sweep->points();
  const auto eps2s = figure3_targets(cfg);
  std::vector<Figure3Row> rows(rhos.size() * eps2s.size());
  mc::detail::parallel_for(rows.size(), 0, [&](std::size_t i) {
    rows[i] = figure3_point(cfg, rhos[i % rhos.size()], eps2s[i / rhos.size()], opts);
  });
  return rows;
}

}  // namespace nomaharq::figures
