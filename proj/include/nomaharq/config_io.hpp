#pragma once

// JSON run configuration shared by the command-line tools.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nomaharq/analytic.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/montecarlo.hpp"
#include "nomaharq/solver.hpp"

namespace nomaharq {

/// Axis of a figure sweep.
struct SweepSpec {
  std::string variable = "rho_db";  ///< "rho_db" or "m"
  double start = 10.0;
  double stop = 40.0;
  double step = 2.5;

  static constexpr std::size_t kMaxPoints = 10'000;

  void validate() const {
    if (variable != "rho_db" && variable != "m") {
      throw ConfigError("sweep.variable must be \"rho_db\" or \"m\", got \"" + variable + "\"");
    }
    if (!std::isfinite(start) || !std::isfinite(stop) || !(start < stop)) {
      throw ConfigError("sweep: need finite start < stop");
    }
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("sweep.step must be positive");
    if ((stop - start) / step + 1.0 > static_cast<double>(kMaxPoints)) {
      throw ConfigError("sweep has more than 10000 points");
    }
  }

  /// start, start + step, ... up to stop (inclusive within 1e-9 step).
  [[nodiscard]] std::vector<double> points() const {
    validate();
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
      const double v = start + static_cast<double>(i) * step;
      if (v > stop + 1e-9 * step) break;
      out.push_back(v);
    }
    return out;
  }
};

/// Flat run configuration. Keys map one-to-one to the JSON document.
struct RunConfig {
  double rho_db = 20.0;
  double alpha1 = 0.1;
  double d1 = 3.0;
  double d2 = 7.0;
  double eta = 2.0;
  int T = 2;
  int n1 = 160;
  int n2 = 160;
  double m = 200.0;
  int quad_n = 30;
  int quad_l = 18;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;

  std::optional<double> eps1_req;
  std::optional<double> eps2_req;
  double delta = 0.1;
  std::optional<double> nu;
  std::optional<SweepSpec> sweep;
  GammaInverse gamma_inverse = GammaInverse::regularized;

  [[nodiscard]] SystemConfig system() const {
    return {db_to_linear(rho_db), alpha1, d1, d2, eta, T};
  }
  [[nodiscard]] CodingConfig coding() const { return {n1, n2, m}; }
  [[nodiscard]] QuadratureConfig quadrature() const {
    QuadratureConfig q{quad_n, quad_l};
    q.validate();
    return q;
  }
  [[nodiscard]] mc::McConfig monte_carlo() const {
    mc::McConfig c;
    c.seed = seed;
    c.trials = trials;
    c.validate();
    return c;
  }
  [[nodiscard]] LinkBudget link_budget() const {
    return {db_to_linear(rho_db), d1, d2, eta, T};
  }
  /// Solver targets; eps defaults to 1e-5 when unset, nu must be present.
  [[nodiscard]] ReliabilityTargets targets() const {
    if (!nu) throw ConfigError("missing solver tolerance \"nu\"");
    ReliabilityTargets t;
    t.eps1_req = eps1_req.value_or(1e-5);
    t.eps2_req = eps2_req.value_or(1e-5);
    t.delta = delta;
    t.nu = *nu;
    t.validate();
    return t;
  }

  /// Checks every field that can be checked without a command context.
  void validate() const {
    (void)system();
    if (n1 < 1 || n2 < 1) throw ConfigError("n1 and n2 must be >= 1");
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("m must be positive");
    (void)quadrature();
    (void)monte_carlo();
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    for (const auto& [name, v] : {std::pair{"eps1_req", eps1_req}, std::pair{"eps2_req", eps2_req}}) {
      if (v && !(*v > 0.0 && *v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0,1)");
    }
    if (nu && !(*nu > 0.0)) throw ConfigError("nu must be positive");
    if (sweep) sweep->validate();
  }
};

namespace detail {

using nlohmann::json;

[[nodiscard]] inline double read_real(const json& j, std::string_view key) {
  if (!j.is_number()) throw ConfigError("\"" + std::string(key) + "\" must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("\"" + std::string(key) + "\" must be finite");
  return v;
}

template <class Int>
[[nodiscard]] Int read_integer(const json& j, std::string_view key) {
  const std::string k(key);
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      throw ConfigError("\"" + k + "\" is out of range");
    }
    return static_cast<Int>(v);
  }
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if constexpr (std::is_unsigned_v<Int>) {
      if (v < 0) throw ConfigError("\"" + k + "\" must be nonnegative");
    }
    if (v < static_cast<std::int64_t>(std::numeric_limits<Int>::min()) ||
        static_cast<std::uint64_t>(std::max<std::int64_t>(v, 0)) >
            static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      throw ConfigError("\"" + k + "\" is out of range");
    }
    return static_cast<Int>(v);
  }
  throw ConfigError("\"" + k + "\" must be an integer");
}

[[nodiscard]] inline GammaInverse parse_gamma_inverse(std::string_view s) {
  if (s == "regularized") return GammaInverse::regularized;
  if (s == "literal") return GammaInverse::literal;
  throw ConfigError("gamma_inverse must be \"regularized\" or \"literal\", got \"" +
                    std::string(s) + "\"");
}

[[nodiscard]] inline std::string_view to_string(GammaInverse g) noexcept {
  return g == GammaInverse::regularized ? "regularized" : "literal";
}

inline SweepSpec read_sweep(const json& j, SweepSpec s) {
  if (!j.is_object()) throw ConfigError("\"sweep\" must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "variable") {
      if (!val.is_string()) throw ConfigError("sweep.variable must be a string");
      s.variable = val.get<std::string>();
    } else if (key == "start") {
      s.start = read_real(val, "sweep.start");
    } else if (key == "stop") {
      s.stop = read_real(val, "sweep.stop");
    } else if (key == "step") {
      s.step = read_real(val, "sweep.step");
    } else {
      throw ConfigError("unknown key \"sweep." + key + "\"");
    }
  }
  return s;
}

}  // namespace detail

/// Overlays a JSON document on `base`. Unknown keys and wrong types throw ConfigError.
[[nodiscard]] inline RunConfig merge_config(RunConfig base, std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  for (const auto& [key, val] : doc.items()) {
    if (key == "rho_db") base.rho_db = detail::read_real(val, key);
    else if (key == "alpha1") base.alpha1 = detail::read_real(val, key);
    else if (key == "d1") base.d1 = detail::read_real(val, key);
    else if (key == "d2") base.d2 = detail::read_real(val, key);
    else if (key == "eta") base.eta = detail::read_real(val, key);
    else if (key == "T") base.T = detail::read_integer<int>(val, key);
    else if (key == "n1") base.n1 = detail::read_integer<int>(val, key);
    else if (key == "n2") base.n2 = detail::read_integer<int>(val, key);
    else if (key == "m") base.m = detail::read_real(val, key);
    else if (key == "quad_n") base.quad_n = detail::read_integer<int>(val, key);
    else if (key == "quad_l") base.quad_l = detail::read_integer<int>(val, key);
    else if (key == "seed") base.seed = detail::read_integer<std::uint64_t>(val, key);
    else if (key == "trials") base.trials = detail::read_integer<std::uint64_t>(val, key);
    else if (key == "eps1_req") base.eps1_req = detail::read_real(val, key);
    else if (key == "eps2_req") base.eps2_req = detail::read_real(val, key);
    else if (key == "delta") base.delta = detail::read_real(val, key);
    else if (key == "nu") base.nu = detail::read_real(val, key);
    else if (key == "gamma_inverse") {
      if (!val.is_string()) throw ConfigError("\"gamma_inverse\" must be a string");
      base.gamma_inverse = detail::parse_gamma_inverse(val.get<std::string>());
    }
    else if (key == "sweep") base.sweep = detail::read_sweep(val, base.sweep.value_or(SweepSpec{}));
    else throw ConfigError("unknown key \"" + key + "\"");
  }
  base.validate();
  return base;
}

[[nodiscard]] inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {
      {"rho_db", c.rho_db}, {"alpha1", c.alpha1}, {"d1", c.d1},         {"d2", c.d2},
      {"eta", c.eta},       {"T", c.T},           {"n1", c.n1},         {"n2", c.n2},
      {"m", c.m},           {"quad_n", c.quad_n}, {"quad_l", c.quad_l}, {"seed", c.seed},
      {"trials", c.trials}, {"delta", c.delta},
      {"gamma_inverse", detail::to_string(c.gamma_inverse)},
  };
  if (c.eps1_req) j["eps1_req"] = *c.eps1_req;
  if (c.eps2_req) j["eps2_req"] = *c.eps2_req;
  if (c.nu) j["nu"] = *c.nu;
  if (c.sweep) {
    j["sweep"] = {{"variable", c.sweep->variable},
                  {"start", c.sweep->start},
                  {"stop", c.sweep->stop},
                  {"step", c.sweep->step}};
  }
  return j;
}

/// Parses a complete document on top of the built-in defaults.
[[nodiscard]] inline RunConfig parse_config(std::string_view text) {
  return merge_config(RunConfig{}, text);
}

}  // namespace nomaharq
