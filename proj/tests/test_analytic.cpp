#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "nomaharq/analytic.hpp"
#include "nomaharq/errors.hpp"
#include "nomaharq/model.hpp"
#include "nomaharq/montecarlo.hpp"
#include "nomaharq/solver.hpp"

using namespace nomaharq;
using boost::math::quadrature::gauss_kronrod;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

SystemConfig fig1(double rho_db, int t, double alpha1 = 0.1) {
  return {db_to_linear(rho_db), alpha1, 3.0, 7.0, 2.0, t};
}

const CodingConfig kFig1Coding(160, 160, 200.0);

/// Stehfest weights from exact rationals, written out independently of the library.
std::vector<cpp_rational> exact_stehfest(int l) {
  const int h = l / 2;
  auto fact = [](int n) {
    cpp_int f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  std::vector<cpp_rational> w;
  for (int k = 1; k <= l; ++k) {
    cpp_rational s = 0;
    for (int j = (k + 1) / 2; j <= std::min(k, h); ++j) {
      cpp_int jp = 1;
      for (int e = 0; e < h; ++e) jp *= j;
      s += cpp_rational(jp * fact(2 * j), fact(h - j) * fact(j) * fact(j - 1) * fact(k - j) *
                                              fact(2 * j - k));
    }
    w.push_back(((h + k) % 2 == 0) ? s : cpp_rational(-s));
  }
  return w;
}

double lambda_quadrature(const FarSinrSeries& s, const CodingConfig& coding) {
  const QLinearization lin = linearize(coding.n2(), coding.m());
  return lin.lambda * gauss_kronrod<double, 31>::integrate(
                          [&](double x) { return s.cdf_raw(x); }, std::max(lin.upsilon, 0.0),
                          lin.tau, 6, 1e-13);
}

}  // namespace

TEST(ChebyshevNodes, SmallCasesAndSymmetry) {
  EXPECT_EQ(chebyshev_nodes(1), std::vector<double>{0.0});
  const auto two = chebyshev_nodes(2);
  EXPECT_NEAR(two[0], std::numbers::sqrt2 / 2, 2.3e-16);
  EXPECT_NEAR(two[1], -std::numbers::sqrt2 / 2, 2.3e-16);
  const auto n30 = chebyshev_nodes(30);
  ASSERT_EQ(n30.size(), 30u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(n30[i], -n30[29 - i], 1e-15);
  EXPECT_THROW((void)chebyshev_nodes(0), DomainError);
}

TEST(Compositions, SmallEnumerations) {
  const auto t1 = enumerate_compositions(1, 2);
  ASSERT_EQ(t1.size(), 2u);
  EXPECT_EQ(t1[0].parts, (std::vector<int>{1, 0}));
  EXPECT_EQ(t1[1].parts, (std::vector<int>{0, 1}));
  EXPECT_EQ(t1[0].weight, 1u);

  const auto t2 = enumerate_compositions(2, 2);
  ASSERT_EQ(t2.size(), 3u);
  EXPECT_EQ(t2[0].parts, (std::vector<int>{2, 0}));
  EXPECT_EQ(t2[1].parts, (std::vector<int>{1, 1}));
  EXPECT_EQ(t2[1].weight, 2u);
  EXPECT_EQ(t2[2].weight, 1u);
}

TEST(Compositions, CountsAndWeightsSumToNToTheT) {
  EXPECT_EQ(composition_count(3, 30), 4960u);
  for (int t = 1; t <= 4; ++t) {
    for (int n : {1, 2, 5, 11}) {
      const auto all = enumerate_compositions(t, n);
      ASSERT_EQ(all.size(), composition_count(t, n));
      std::uint64_t total = 0;
      std::uint64_t expected = 1;
      for (int i = 0; i < t; ++i) expected *= static_cast<std::uint64_t>(n);
      for (const auto& c : all) {
        ASSERT_EQ(std::accumulate(c.parts.begin(), c.parts.end(), 0), t);
        total += c.weight;
      }
      EXPECT_EQ(total, expected) << "t=" << t << " n=" << n;
    }
  }
}

TEST(Compositions, CapRaisesResourceError) {
  EXPECT_THROW((void)enumerate_compositions(3, 30, 1000), ResourceError);
  EXPECT_THROW(FarSinrSeries(fig1(20, 3), QuadratureConfig{30, 18}, User::far, 1000), ResourceError);
}

TEST(OmegaCoefficients, SmallestOrder) {
  const auto w = omega_coefficients(2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0], 2.0);
  EXPECT_EQ(w[1], -2.0);
}

TEST(OmegaCoefficients, MatchExactRationalsForEveryEvenOrder) {
  for (int l = 2; l <= 24; l += 2) {
    const auto w = omega_coefficients(l);
    const auto wide = omega_coefficients_wide(l);
    const auto exact = exact_stehfest(l);
    for (int k = 0; k < l; ++k) {
      ASSERT_TRUE(std::isfinite(w[k]));
      const double ref = static_cast<double>(exact[k]);
      EXPECT_NEAR(w[k], ref, 4.5e-16 * std::abs(ref)) << "L=" << l << " k=" << k + 1;
      const WideReal rel = abs(wide[k] / static_cast<WideReal>(exact[k]) - 1);
      EXPECT_LT(static_cast<double>(rel), 1e-32) << "L=" << l << " k=" << k + 1;
    }
  }
  EXPECT_GT(omega_coefficients(18)[0], 0.0);
}

TEST(OmegaCoefficients, InvertConstantAndExponentialTransforms) {
  for (int l : {2, 8, 18}) {
    const auto exact = exact_stehfest(l);
    cpp_rational sum = 0;
    cpp_rational harmonic = 0;
    for (int k = 0; k < l; ++k) {
      sum += exact[k];
      harmonic += exact[k] / (k + 1);
    }
    EXPECT_EQ(sum, 0);
    EXPECT_EQ(harmonic, 1);  // inverts 1/s exactly
  }
  // F(s) = 1/(s+1) -> e^{-t}
  const auto w = omega_coefficients(18);
  for (double t : {0.5, 1.0, 2.0}) {
    double f = 0.0;
    for (int k = 1; k <= 18; ++k) f += w[k - 1] / (k * std::numbers::ln2 / t + 1.0);
    EXPECT_NEAR(f * std::numbers::ln2 / t, std::exp(-t), 1e-5);
  }
}

TEST(OmegaCoefficients, RejectsBadOrders) {
  EXPECT_THROW((void)omega_coefficients(3), DomainError);
  EXPECT_THROW((void)omega_coefficients(0), DomainError);
  EXPECT_THROW((void)omega_coefficients(42), ResourceError);
}

TEST(Psi, ReferenceValueAndEndpoints) {
  // a1 = 0.2, mu rho = 10: (1/0.64) e^{-1}
  const SystemConfig cfg(1.0, 0.2, 0.0, 3.0, 1.0, 1);  // mu1 = 1
  const SystemConfig scaled = cfg.with_rho(10.0);
  EXPECT_NEAR(psi(0.0, scaled, User::near), std::exp(-1.0) / 0.64, 1e-15);
  EXPECT_NEAR(0.5748, psi(0.0, scaled, User::near), 5e-5);
  EXPECT_LT(psi(-1.0 + 1e-14, scaled, User::near), 1e-6);
  const double top = chebyshev_nodes(30).front();
  const double v = psi(top, fig1(20, 1), User::far);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(v, 0.0);
  EXPECT_THROW((void)psi(1.0, scaled, User::near), DomainError);
}

TEST(Skn, SingleNodeAndDotProduct) {
  const SystemConfig cfg = fig1(20, 1);
  const Composition single{{1}, 1};
  EXPECT_NEAR(s_kn(1, cfg, single, chebyshev_nodes(1)), cfg.kappa() * std::numbers::ln2 / 2.0,
              1e-15);

  const auto nodes = chebyshev_nodes(30);
  Composition c{std::vector<int>(30, 0), 6};
  c.parts[0] = c.parts[14] = c.parts[29] = 1;
  double dot = 0.0;
  for (int i : {0, 14, 29}) dot += nodes[i] + 1.0;
  EXPECT_NEAR(s_kn(4, fig1(20, 3), c, nodes), 4.0 * 9.0 * std::numbers::ln2 / 2.0 * dot, 1e-13);
}

TEST(OmegaFn, ReferenceValueAndSlope) {
  const double e1 = specfun::exp_integral_e1(1.0);
  EXPECT_NEAR(omega_fn(1.0, 1.0), std::exp(-1.0) - 2.0 * e1, 1e-15);
  EXPECT_NEAR(omega_fn(1.0, 1.0), -0.070889, 1e-6);
  const double h = 1e-5;
  EXPECT_NEAR((omega_fn(1.0 + h, 1.0) - omega_fn(1.0 - h, 1.0)) / (2 * h), -e1, 1e-5);
  EXPECT_THROW((void)omega_fn(0.0, 1.0), DomainError);
  EXPECT_THROW((void)omega_fn(1.0, -1.0), DomainError);
}

TEST(FarSinrSeries, AdaptiveSumMatchesQuadPrecision) {
  for (int t = 1; t <= 3; ++t) {
    for (double db : {15.0, 25.0, 35.0}) {
      const FarSinrSeries s(fig1(db, t), QuadratureConfig{}, User::far);
      for (double r : {0.3, 0.7411, 1.5}) {
        const double wide = static_cast<double>(s.cdf_wide(r));
        EXPECT_NEAR(s.cdf_raw(r), wide, 1e-12 * std::abs(wide) + 1e-300)
            << "T=" << t << " " << db << " dB r=" << r;
      }
    }
  }
}

TEST(FarSinrSeries, VanishesAtOriginAndIsLocallyMonotone) {
  const FarSinrSeries s(fig1(30, 2), QuadratureConfig{}, User::far);
  EXPECT_LT(std::abs(s.cdf_raw(1e-3)), 1e-12);
  const double theta = linearize(160, 200).theta;
  double prev = s.cdf_raw(theta * 0.95);
  for (double f = 0.96; f <= 1.05; f += 0.01) {
    const double v = s.cdf_raw(theta * f);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_TRUE(cdf_far_sinr(s.ceiling() + 1.0, fig1(30, 2), QuadratureConfig{}, User::far)
                  .beyond_validity);
  EXPECT_THROW((void)s.cdf_raw(0.0), DomainError);
}

TEST(FarSinrSeries, MatchesEmpiricalCdf) {
  const SystemConfig cfg = fig1(30, 2);
  const FarSinrSeries s(cfg, QuadratureConfig{}, User::far);
  const auto samples = mc::sample_accumulated_sinr(cfg, Stage::s22, 1'000'000, 11);
  for (double r : {0.5, 0.7411, 1.0}) {
    const double emp = mc::empirical_cdf(samples, r);
    const double se = std::sqrt(emp * (1.0 - emp) / 1e6);
    EXPECT_NEAR(s.cdf_raw(r), emp, 3.0 * se) << "r=" << r;
  }
}

TEST(AvgBlerFarDecode, ClosedFormEqualsQuadratureOfSeries) {
  for (User u : {User::near, User::far}) {
    const FarSinrSeries s(fig1(20, 2), QuadratureConfig{}, u);
    const double closed = avg_bler_far_decode_raw(s, kFig1Coding);
    EXPECT_NEAR(closed, lambda_quadrature(s, kFig1Coding), 1e-9 * std::abs(closed));
  }
}

TEST(AvgBlerFarDecode, AgreesWithMonteCarloAtTwentyDb) {
  const SystemConfig cfg = fig1(20, 2);
  mc::McConfig m;
  m.seed = 5;
  const auto rep = mc::simulate_avg_bler(cfg, kFig1Coding, m);
  const double e22 = avg_bler_far_decode(cfg, kFig1Coding, QuadratureConfig{}, User::far).value;
  const double e12 = avg_bler_far_decode(cfg, kFig1Coding, QuadratureConfig{}, User::near).value;
  EXPECT_NEAR(e22, rep.eps22.value, std::max(3.0 * *rep.eps22.std_err, 0.2 * rep.eps22.value));
  EXPECT_NEAR(e12, rep.eps12.value, std::max(3.0 * *rep.eps12.std_err, 0.2 * rep.eps12.value));
}

TEST(AvgBlerFarDecode, SaturatesAtLowSnr) {
  const SystemConfig cfg(1.0, 0.1, 3.0, 7.0, 2.0, 2);
  EXPECT_GE(avg_bler_far_decode(cfg, kFig1Coding, QuadratureConfig{}, User::far).value, 0.99);
}

TEST(AvgBlerFarDecode, InfeasibleThresholdThrows) {
  // T kappa = 1.22 < theta2 = 2^{1.6} - 1 = 2.03
  const SystemConfig cfg(db_to_linear(30), 0.45, 3.0, 7.0, 2.0, 1);
  const CodingConfig coding(320, 320, 200.0);
  EXPECT_THROW((void)avg_bler_far_decode(cfg, coding, QuadratureConfig{}, User::far),
               FeasibilityError);
  EXPECT_THROW((void)avg_bler_far_decode_raw(FarSinrSeries(cfg, QuadratureConfig{}, User::far),
                                             coding),
               FeasibilityError);
}

TEST(NearUser, GammaCdfSpecialCases) {
  const SystemConfig t1 = fig1(20, 1);
  const double s = near_scale(t1);
  EXPECT_EQ(cdf_near_sinr(0.0, t1), 0.0);
  for (double r : {0.1, 0.7, 3.0}) EXPECT_NEAR(cdf_near_sinr(r, t1), -std::expm1(-r / s), 1e-15);
  EXPECT_THROW((void)cdf_near_sinr(-1.0, t1), DomainError);
}

TEST(NearUser, GammaCdfMatchesEmpiricalAtThreshold) {
  const SystemConfig cfg = fig1(15, 3);
  const double theta = linearize(160, 200).theta;
  const auto samples = mc::sample_accumulated_sinr(cfg, Stage::s11, 1'000'000, 3);
  const double emp = mc::empirical_cdf(samples, theta);
  EXPECT_NEAR(cdf_near_sinr(theta, cfg), emp, 3.0 * std::sqrt(emp * (1 - emp) / 1e6));
}

TEST(NearUser, UpsilonIsTheAntiderivative) {
  for (int t = 1; t <= 3; ++t) {
    const SystemConfig cfg = fig1(20, t);
    EXPECT_EQ(upsilon_fn(0.0, cfg), 0.0);
    const double theta = linearize(160, 200).theta;
    const double h = 1e-5 * theta;
    const double slope = (upsilon_fn(theta + h, cfg) - upsilon_fn(theta - h, cfg)) / (2 * h);
    EXPECT_NEAR(slope, cdf_near_sinr(theta, cfg), 1e-5 * cdf_near_sinr(theta, cfg));
  }
  // T = 1 by hand: x(1 - e^{-dx}) + e^{-dx}(x + 1/d) - 1/d
  const SystemConfig t1 = fig1(20, 1);
  const double d = 1.0 / near_scale(t1);
  for (double x : {0.2, 1.0, 4.0}) {
    const double e = std::exp(-d * x);
    EXPECT_NEAR(upsilon_fn(x, t1), x * (1 - e) + (e * (x + 1 / d) - 1 / d), 1e-13);
  }
}

TEST(NearUser, ClosedFormEqualsQuadrature) {
  for (int t = 1; t <= 4; ++t) {
    for (double db : {5.0, 15.0, 25.0}) {
      const SystemConfig cfg = fig1(db, t);
      const QLinearization lin = linearize(160, 200);
      const double quad =
          lin.lambda * gauss_kronrod<double, 61>::integrate(
                           [&](double x) { return cdf_near_sinr(x, cfg); }, lin.upsilon, lin.tau,
                           10, 1e-14);
      const double closed = avg_bler_near_own(cfg, kFig1Coding).value;
      EXPECT_NEAR(closed, quad, 1e-10 * quad) << "T=" << t << " " << db << " dB";
    }
  }
}

TEST(NearUser, VanishesAtHighSnrAndMatchesMonteCarlo) {
  // with one round the near CDF decays only like 1/rho
  EXPECT_LE(avg_bler_near_own(SystemConfig(1e6, 0.1, 3.0, 7.0, 2.0, 2), kFig1Coding).value, 1e-6);
  EXPECT_LE(avg_bler_near_own(SystemConfig(1e6, 0.1, 3.0, 7.0, 2.0, 1), kFig1Coding).value, 1e-4);

  const SystemConfig cfg = fig1(15, 1);
  mc::McConfig m;
  m.seed = 9;
  const auto rep = mc::simulate_avg_bler(cfg, kFig1Coding, m);
  EXPECT_NEAR(avg_bler_near_own(cfg, kFig1Coding).value, rep.eps11.value,
              3.0 * *rep.eps11.std_err);
}

TEST(UserCombination, ProductAndAdditiveForms) {
  const SystemConfig cfg = fig1(25, 2);
  const auto b = avg_bler_breakdown(cfg, kFig1Coding, QuadratureConfig{});
  EXPECT_DOUBLE_EQ(b.eps1.value, b.eps12.value + (1 - b.eps12.value) * b.eps11.value);
  EXPECT_DOUBLE_EQ(b.eps1_additive.value, b.eps12.value + b.eps11.value);
  EXPECT_GE(b.eps1_additive.value, b.eps1.value);
  EXPECT_DOUBLE_EQ(avg_bler_user(cfg, kFig1Coding, QuadratureConfig{}, User::near).value,
                   b.eps1.value);
  EXPECT_DOUBLE_EQ(avg_bler_user(cfg, kFig1Coding, QuadratureConfig{}, User::far).value,
                   b.eps22.value);
}

TEST(StageBlers, MonotoneInSnrRoundsAndBlocklength) {
  const QuadratureConfig q;
  for (int t = 1; t <= 3; ++t) {
    double prev11 = 1.0, prev12 = 1.0, prev22 = 1.0;
    for (double db = 10.0; db <= 30.0; db += 5.0) {
      const auto b = avg_bler_breakdown(fig1(db, t), kFig1Coding, q);
      EXPECT_LE(b.eps11.value, prev11);
      EXPECT_LE(b.eps12.value, prev12);
      EXPECT_LE(b.eps22.value, prev22);
      prev11 = b.eps11.value;
      prev12 = b.eps12.value;
      prev22 = b.eps22.value;
    }
  }
  for (double db : {15.0, 25.0}) {
    double prev = 1.0;
    for (int t = 1; t <= 3; ++t) {
      const auto b = avg_bler_breakdown(fig1(db, t), kFig1Coding, q);
      EXPECT_LE(b.eps22.value, prev);
      prev = b.eps22.value;
    }
  }
  const SystemConfig cfg(db_to_linear(30), 0.2, 3, 7, 2, 3);
  double p11 = 1.0, p22 = 1.0;
  for (double m = 500; m <= 1500; m += 250) {
    const CodingConfig c(300, 300, m);
    const double e11 = avg_bler_near_own(cfg, c).value;
    const double e22 = avg_bler_far_decode(cfg, c, q, User::far).value;
    EXPECT_LE(e11, p11);
    EXPECT_LE(e22, p22);
    p11 = e11;
    p22 = e22;
  }
}

TEST(ClampDiagnostics, NoExcessOnFigureOneGrid) {
  diagnostics::reset();
  for (int t = 1; t <= 3; ++t) {
    for (double db = 10.0; db <= 40.0; db += 5.0) {
      const auto b = avg_bler_breakdown(fig1(db, t), kFig1Coding, QuadratureConfig{});
      EXPECT_LE(b.eps12.clamp_excess, kClampTolerance);
      EXPECT_LE(b.eps22.clamp_excess, kClampTolerance);
    }
  }
  EXPECT_EQ(diagnostics::clamp_violations.load(), 0u);
  const auto e = BlerEstimate::from_raw(1.5, BlerMethod::closed_form);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(e.clamp_excess, 0.5);
  EXPECT_EQ(diagnostics::clamp_violations.load(), 1u);
  EXPECT_FALSE(e.std_err.has_value());
}

TEST(Oma, BaselineProperties) {
  const SystemConfig cfg = fig1(20, 2);
  // full power, same window: no worse than NOMA's interference-free stage
  EXPECT_LE(avg_bler_oma(cfg, 160, 200, User::near).value,
            avg_bler_near_own(cfg, kFig1Coding).value);

  const QLinearization lin = linearize(160, 300);
  const double scale = cfg.rho() * cfg.mu(User::far);
  const double quad = lin.lambda * gauss_kronrod<double, 61>::integrate(
                                       [&](double x) { return gamma_sum_cdf(x, 2, scale); },
                                       std::max(lin.upsilon, 0.0), lin.tau, 10, 1e-14);
  const auto oma = avg_bler_oma(cfg, 160, 300, User::far);
  EXPECT_NEAR(oma.value, quad, 1e-10 * quad);
  EXPECT_EQ(oma.method, BlerMethod::oma_closed_form);
  EXPECT_THROW((void)avg_bler_oma(cfg, 160, 99.0, User::far), RegimeError);
}

TEST(Oma, FigureTwoOrdering) {
  const SystemConfig noma(db_to_linear(30), 0.2, 3, 7, 2, 3);
  const QuadratureConfig q;
  for (double m : {500.0, 1000.0, 1500.0}) {
    const CodingConfig c(300, 300, m);
    const double u1_noma = combine_sic_stages(avg_bler_far_decode(noma, c, q, User::near).value,
                                              avg_bler_near_own(noma, c).value);
    EXPECT_LT(u1_noma, avg_bler_oma(noma, 300, 0.2 * m, User::near).value);
    EXPECT_LT(avg_bler_oma(noma, 300, 0.5 * m, User::near).value, u1_noma);
    EXPECT_GT(avg_bler_oma(noma, 300, 0.5 * m, User::far).value,
              avg_bler_oma(noma, 300, 0.8 * m, User::far).value);
  }
}
