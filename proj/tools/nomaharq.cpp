// nomaharq: figure data, power/blocklength solver and validation report.
//
// Exit status: 0 ok, 1 validation failed, 2 input error, 3 infeasible sweep
// point (CSV still written, point flagged), 4 solver infeasible.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nomaharq/config_io.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/figures.hpp"
#include "nomaharq/solver.hpp"
#include "nomaharq/validation.hpp"

namespace {

using namespace nomaharq;
using nlohmann::json;

enum Exit { kOk = 0, kValidationFailed = 1, kInputError = 2, kSweepInfeasible = 3, kSolverInfeasible = 4 };

struct Flags {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> quad_n;
  std::optional<int> quad_l;
  std::optional<std::string> gamma_inverse;
  std::optional<int> omega_fault;
};

[[nodiscard]] std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// defaults <- config file <- flags
[[nodiscard]] RunConfig resolve(RunConfig cfg, const Flags& f) {
  if (!f.config_path.empty()) cfg = merge_config(cfg, read_file(f.config_path));
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.quad_n) cfg.quad_n = *f.quad_n;
  if (f.quad_l) cfg.quad_l = *f.quad_l;
  if (f.gamma_inverse) cfg.gamma_inverse = detail::parse_gamma_inverse(*f.gamma_inverse);
  cfg.validate();
  return cfg;
}

/// Writes to --out, or stdout when no path is given.
void emit(const Flags& f, const std::string& text) {
  if (f.out_path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(f.out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot write \"" + f.out_path + "\"");
  out << text;
  if (!out.flush()) throw ResourceError("write to \"" + f.out_path + "\" failed");
}

[[nodiscard]] std::string num(std::optional<double> v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

[[nodiscard]] std::string csv_preamble(const RunConfig& cfg) {
  return "# " + to_json(cfg).dump() + "\n";
}

[[nodiscard]] bool is_point_failure(const std::string& flag) {
  return flag == figures::kFlagInfeasible || flag == figures::kFlagRegime;
}

int run_figure1(const Flags& f) {
  const RunConfig cfg = resolve(figures::figure1_defaults(), f);
  const auto rows = figures::figure1(cfg);
  std::string csv = csv_preamble(cfg) + "rho_db,T,user,bler_analytic,bler_mc,mc_stderr,flag\n";
  bool failed = false;
  for (const auto& r : rows) {
    csv += num(r.rho_db) + "," + std::to_string(r.rounds) + "," + std::to_string(r.user) + "," +
           num(r.bler_analytic) + "," + num(r.bler_mc) + "," + num(r.mc_stderr) + "," + r.flag +
           "\n";
    failed = failed || is_point_failure(r.flag);
  }
  emit(f, csv);
  return failed ? kSweepInfeasible : kOk;
}

int run_figure2(const Flags& f) {
  const RunConfig cfg = resolve(figures::figure2_defaults(), f);
  const auto rows = figures::figure2(cfg);
  std::string csv = csv_preamble(cfg) +
                    "m,noma_u1,noma_u2,oma20_u1,oma80_u2,oma50_u1,oma50_u2,flag\n";
  bool failed = false;
  for (const auto& r : rows) {
    csv += num(r.m) + "," + num(r.noma_u1) + "," + num(r.noma_u2) + "," + num(r.oma20_u1) + "," +
           num(r.oma20_u2) + "," + num(r.oma50_u1) + "," + num(r.oma50_u2) + "," + r.flag + "\n";
    failed = failed || is_point_failure(r.flag);
  }
  emit(f, csv);
  return failed ? kSweepInfeasible : kOk;
}

int run_figure3(const Flags& f) {
  const RunConfig cfg = resolve(figures::figure3_defaults(), f);
  SolverOptions opts;
  opts.gamma_inverse = cfg.gamma_inverse;
  const auto rows = figures::figure3(cfg, opts);
  std::string csv = csv_preamble(cfg) + "rho_db,eps2_target,m_noma,m_oma,gap,alpha1_star,flag\n";
  bool failed = false;
  for (const auto& r : rows) {
    csv += num(r.rho_db) + "," + num(r.eps2_target) + "," + num(r.m_noma) + "," + num(r.m_oma) +
           "," + num(r.gap) + "," + num(r.alpha1_star) + "," + r.flag + "\n";
    failed = failed || is_point_failure(r.flag);
  }
  emit(f, csv);
  return failed ? kSweepInfeasible : kOk;
}

int run_solve(const Flags& f) {
  RunConfig defaults;
  defaults.T = 3;
  defaults.n1 = defaults.n2 = 300;
  defaults.rho_db = 35.0;
  const RunConfig cfg = resolve(defaults, f);
  const ReliabilityTargets targets = cfg.targets();
  const QuadratureConfig quad = cfg.quadrature();
  SolverOptions opts;
  opts.gamma_inverse = cfg.gamma_inverse;

  json out;
  int status = kOk;
  try {
    const SolverOutput s =
        solve_power_blocklength(cfg.link_budget(), targets, cfg.n1, cfg.n2, quad, opts);
    out = {{"alpha1_star", s.alpha1_star},
           {"m_req_real", s.m_req},
           {"m_req_ceil", s.m_req_ceil},
           {"iterations", s.iterations},
           {"residual", s.residual}};
  } catch (const FeasibilityError& e) {
    out = {{"error", "infeasible"}, {"message", e.what()}};
    status = kSolverInfeasible;
  } catch (const RegimeError& e) {
    out = {{"error", "regime"}, {"message", e.what()}};
    status = kSolverInfeasible;
  } catch (const ConvergenceError& e) {
    out = {{"error", "convergence"}, {"message", e.what()}};
    status = kSolverInfeasible;
  }
  emit(f, out.dump(2) + "\n");
  return status;
}

int run_validate(const Flags& f) {
  const RunConfig cfg = resolve(RunConfig{}, f);
  validation::Options o;
  o.seed = cfg.seed;
  o.trials = cfg.trials;
  o.quad = cfg.quadrature();
  o.gamma_inverse = cfg.gamma_inverse;
  if (f.omega_fault) {
    if (*f.omega_fault < 1 || *f.omega_fault > cfg.quad_l) {
      throw ConfigError("--omega-fault index must lie in [1, quad_l]");
    }
    o.omega_fault = validation::OmegaFault{*f.omega_fault, 1.001};
  }
  const auto rows = validation::run_all(o);
  emit(f, validation::format_report(rows, o));
  return validation::all_passed(rows) ? kOk : kValidationFailed;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out_path, "output path (default: stdout)");
  cmd->add_option("--seed", f.seed, "Monte Carlo seed");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  cmd->add_option("--quad-n", f.quad_n, "Chebyshev node count N");
  cmd->add_option("--quad-l", f.quad_l, "Stehfest series length L");
  cmd->add_option("--gamma-inverse", f.gamma_inverse, "reading of the Gamma-CDF inverse")
      ->check(CLI::IsMember({"regularized", "literal"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NOMA HARQ-CC finite-blocklength BLER analysis"};
  app.require_subcommand(1);
  Flags flags;

  auto* fig1 = app.add_subcommand("figure1", "average BLER vs transmit SNR, T = 1..3 (CSV)");
  auto* fig2 = app.add_subcommand("figure2", "average BLER vs blocklength, NOMA vs OMA (CSV)");
  auto* fig3 = app.add_subcommand("figure3", "required blocklength, NOMA vs OMA (CSV)");
  auto* solve = app.add_subcommand("solve", "power split and blocklength for two BLER targets (JSON)");
  auto* validate = app.add_subcommand("validate", "run the oracle suite and print a PASS/FAIL table");
  for (auto* cmd : {fig1, fig2, fig3, solve, validate}) add_common(cmd, flags);
  validate->add_option("--omega-fault", flags.omega_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*fig1) return run_figure1(flags);
    if (*fig2) return run_figure2(flags);
    if (*fig3) return run_figure3(flags);
    if (*solve) return run_solve(flags);
    return run_validate(flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const FeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kSweepInfeasible;
  } catch (const RegimeError& e) {
    std::cerr << "regime: " << e.what() << "\n";
    return kSweepInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
