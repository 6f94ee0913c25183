#include "htune/stability.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using htune::HtState;
using htune::Step;
using htune::Vector;
using htune::Verdict;

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

TEST(Coefficients, ClosedFormExample) {
  const auto c = htune::c_coeffs(1.25, 1.0, 0.8, 1.0, 1.0, 1.0);
  EXPECT_NEAR(c.c5, -0.875, 1e-12);
  EXPECT_NEAR(c.c6, 3.0, 1e-12);
  EXPECT_NEAR(c.c7, -24.0, 1e-12);
  EXPECT_NEAR(c.discriminant(), 75.0, 1e-10);
}

TEST(Coefficients, OutsideTheRegion) {
  const auto c = htune::c_coeffs(1.6, 1.0, 0.625, 1.0, 1.0, 1.0);
  EXPECT_NEAR(c.c5, -0.28, 1e-12);
  EXPECT_NEAR(c.c6, 4.4, 1e-12);
  EXPECT_NEAR(c.c7, 1.0 - 1.0 / (0.375 * 0.375), 1e-12);
  EXPECT_LT(c.discriminant(), 0.0);
  EXPECT_NEAR(c.discriminant(), 4.0 * -0.28 * (1.0 - 1.0 / 0.140625) - 4.4 * 4.4, 1e-10);
}

TEST(Coefficients, DegenerateBetaIsRejected) {
  EXPECT_THROW(htune::c_coeffs(1.0, 1.0, 1.0, 1.0, 1.0, 1.0), htune::DegenerateBeta);
  EXPECT_THROW(htune::cor1_coeffs(1.0), htune::DegenerateBeta);
}

TEST(Coefficients, CorollaryFormMatchesGeneralForm) {
  for (double g : {1.1, 1.25, 1.4, 2.0, 3.7}) {
    const auto a = htune::cor1_coeffs(g);
    const auto b = htune::c_coeffs(g, 1.0, 1.0 / g, 1.0, 1.0, 1.0);
    EXPECT_NEAR(a.c5, b.c5, 1e-12);
    EXPECT_NEAR(a.c6, b.c6, 1e-12);
    EXPECT_NEAR(a.c7, b.c7, 1e-9 * std::fabs(b.c7));
  }
  // The boundary is exact in the corollary form.
  EXPECT_EQ(htune::cor1_coeffs(1.5).discriminant(), 0.0);
}

TEST(Thm2, Verdicts) {
  EXPECT_EQ(htune::check_thm2(1.25, 1.0, 0.8, 1.0, 1.0, 1.0).thm2, Verdict::Stable);
  EXPECT_EQ(htune::check_thm2(1.6, 1.0, 0.625, 1.0, 1.0, 1.0).thm2, Verdict::Unstable);
  EXPECT_EQ(htune::check_thm2(2.0, 1.0, 0.5, 1.0, 1.0, 1.0).thm2, Verdict::Unstable);
}

TEST(Thm2, BetaOneIsDegenerate) {
  // GD: gamma = mu = beta = 1. c5 = 1 - (1 + lambda) < 0 iff lambda > 0.
  const auto with_lambda = htune::check_thm2(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
  EXPECT_EQ(with_lambda.thm2, Verdict::DegenerateStable);
  EXPECT_TRUE(with_lambda.thm2_ok());
  EXPECT_FALSE(with_lambda.note.empty());
  const auto without = htune::check_thm2(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
  EXPECT_EQ(without.thm2, Verdict::Unstable);
  EXPECT_FALSE(without.thm2_ok());
}

TEST(Thm2, ReportsCompanionConditionSets) {
  const auto p = htune::check_thm2(0.5, 1.0, 0.25, 0.0, 1.0, 1.0);
  EXPECT_TRUE(p.prop1_ok);
  EXPECT_FALSE(p.cor1_ok);
  const auto c = htune::check_thm2(1.25, 1.0, 0.8, 1.0, 1.0, 1.0);
  EXPECT_TRUE(c.cor1_ok);
  EXPECT_FALSE(c.prop1_ok);
  const auto l = htune::check_thm2(htune::legacy_gamma_cap(0.5), 1.0, 0.5, 0.0, 1.0, 1.0);
  EXPECT_TRUE(l.legacy_ok);
}

TEST(Prop1, Conditions) {
  const double eps = 1e-6;
  EXPECT_TRUE(htune::check_prop1(0.0, 1.0, 0.5, eps));
  EXPECT_TRUE(htune::check_prop1(1.0, 0.5, 0.25, eps));
  EXPECT_TRUE(htune::check_prop1(0.5, 1.0, 0.5 + 1e-13, eps));
  EXPECT_FALSE(htune::check_prop1(0.5, 1.0, 0.5 + 1e-9, eps));
  EXPECT_FALSE(htune::check_prop1(0.5, 1.0, 1.0, eps));
  EXPECT_FALSE(htune::check_prop1(1.1, 1.0, 0.5, eps));
  EXPECT_FALSE(htune::check_prop1(0.5, 1e-7, 5e-8, eps));
  EXPECT_FALSE(htune::check_prop1(0.5, 1.2, 0.6, eps));
  EXPECT_THROW(htune::check_prop1(0.5, 1.0, 0.5, 0.0), htune::InvalidHyperParameter);
}

TEST(Legacy, Conditions) {
  const double cap = htune::legacy_gamma_cap(0.5);
  EXPECT_TRUE(htune::check_legacy(cap, 0.5));
  EXPECT_FALSE(htune::check_legacy(cap * (1 + 1e-12), 0.5));
  EXPECT_FALSE(htune::check_legacy(0.01, 1.0));
  EXPECT_FALSE(htune::check_legacy(0.01, 0.0));
}

TEST(Cor1, BoundaryAndOutside) {
  EXPECT_TRUE(htune::check_cor1(1.5).thm2_ok());
  EXPECT_EQ(htune::check_cor1(1.5).discriminant, 0.0);
  EXPECT_FALSE(htune::check_cor1(1.5 + 1e-9).thm2_ok());
  EXPECT_FALSE(htune::check_cor1(2.0).thm2_ok());
  EXPECT_EQ(htune::check_cor1(1.0).thm2, Verdict::DegenerateStable);
  EXPECT_TRUE(htune::check_cor1(1.2).cor1_ok);
  EXPECT_FALSE(htune::check_cor1(1.7).cor1_ok);
}

TEST(Cor1, DiscriminantClosedForm) {
  // Under mu = 1, beta = 1/gamma, lambda = xi = 1:
  // c5 = 2 gamma^2 - 4 gamma + 1, c6 = 4 gamma - 2, c7 = 1 - gamma^2/(gamma - 1)^2.
  for (double g = 1.05; g < 4.0; g += 0.05) {
    const auto c = htune::cor1_coeffs(g);
    EXPECT_NEAR(c.c5, 2 * g * g - 4 * g + 1, 1e-12);
    EXPECT_NEAR(c.c6, 4 * g - 2, 1e-12);
    EXPECT_NEAR(c.c7, 1 - g * g / ((g - 1) * (g - 1)), 1e-9 * (1 + std::fabs(c.c7)));
    EXPECT_EQ(c.discriminant() >= 0.0 && c.c5 < 0.0, g <= 1.5) << g;
  }
}

TEST(Omega, FrozenExample) {
  // mu = 1, sigma = 1, N = 1, beta = 0.5, nu = 0.5:
  // terms (1 - 0.5)(1 - 0.25) = 0.375 and 0.5*0.5*0.75/(0.5*0.25 + 0.5*0.75) = 0.375.
  const auto r = htune::omega(1.0, 1.0, 1.0, 0.5, 0.5);
  EXPECT_EQ(r.rho, 0.5);
  EXPECT_NEAR(r.omega, 0.375, 1e-15);
  EXPECT_FALSE(r.zero_rate);
  // mu = 1, sigma/N = 0.5, beta = 2/3, nu = 0.5: terms 4/9 and 0.2352941176470588.
  const auto s = htune::omega(1.0, 1.0, 2.0, 2.0 / 3.0, 0.5);
  EXPECT_EQ(s.rho, 0.25);
  EXPECT_NEAR(s.omega, 0.2352941176470588, 1e-12);
}

TEST(Omega, BetaOneGivesMinOfOneMinusNuAndRho) {
  EXPECT_NEAR(htune::omega(1.0, 1.0, 4.0, 1.0, 0.5).omega, 0.125, 1e-15);
  EXPECT_NEAR(htune::omega(1.0, 1.0, 1.0, 1.0, 0.7).omega, 0.3, 1e-15);
}

TEST(Omega, SmallNuShrinksTheRate) {
  EXPECT_LT(htune::omega(1.0, 1.0, 1.0, 0.5, 1e-9).omega, 1e-8);
}

TEST(Omega, LiesInTheUnitIntervalOnAGrid) {
  for (double beta = 0.05; beta <= 1.0; beta += 0.05) {
    for (double nu = 0.05; nu < 1.0; nu += 0.05) {
      for (double ratio : {1e-3, 0.1, 0.5, 1.0}) {
        const auto r = htune::omega(1.0, ratio, 1.0, beta, nu);
        EXPECT_GT(r.omega, 0.0);
        EXPECT_LT(r.omega, 1.0);
      }
    }
  }
}

TEST(Omega, BetaZeroCollapsesTheRate) {
  const auto r = htune::omega(1.0, 1.0, 1.0, 0.0, 0.5);
  EXPECT_EQ(r.omega, 0.0);
  EXPECT_TRUE(r.zero_rate);
}

TEST(Omega, Validation) {
  EXPECT_THROW(htune::omega(1.0, 0.0, 1.0, 0.5, 0.5), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::omega(1.0, 2.0, 1.0, 0.5, 0.5), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::omega(1.0, 1.0, 1.0, 0.5, 1.0), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::omega(1.0, 1.0, 1.0, 1.5, 0.5), htune::InvalidHyperParameter);
}

TEST(Lyapunov, Candidates) {
  const Vector xs = v({0.0, 0.0});
  EXPECT_EQ(htune::lyapunov_v(v({3.0, 4.0}), v({3.0, 4.0}), xs), 25.0);
  EXPECT_EQ(htune::lyapunov_v(v({4.0, 4.0}), v({3.0, 4.0}), xs), 26.0);
  EXPECT_EQ(htune::lyapunov_w(v({5.0, 4.0}), v({3.0, 4.0}), xs, 0.5), 27.0);
  // x = 0.5 z + 0.5 y = [4, 4]; (25 + 1) / 2.
  EXPECT_EQ(htune::legacy_lyapunov(v({5.0, 4.0}), v({3.0, 4.0}), xs, 2.0, 0.5), 13.0);
  EXPECT_THROW(htune::lyapunov_v(v({1.0}), v({1.0, 2.0}), xs), htune::ShapeError);
}

TEST(Monitor, DecreaseBound) {
  // Delta = -1, bound = 2 (0.5/1)(0 - 1) = -1 -> holds exactly.
  auto m = htune::monitor_decrease({10.0, 9.0, 0.5, 1.0, 1.0, 0.0, 0.0});
  EXPECT_EQ(m.delta, -1.0);
  EXPECT_EQ(m.bound, -1.0);
  EXPECT_TRUE(m.holds);
  // Within the relative tolerance.
  EXPECT_TRUE(htune::monitor_decrease({10.0, 9.0 + 1e-9, 0.5, 1.0, 1.0, 0.0, 0.0}).holds);
  EXPECT_FALSE(htune::monitor_decrease({10.0, 9.0 + 1e-7, 0.5, 1.0, 1.0, 0.0, 0.0}).holds);
  // lambda = 1 turns the bound into Delta <= 0.
  m = htune::monitor_decrease({10.0, 10.0, 0.5, 1.0, 1.0, 0.0, 1.0});
  EXPECT_EQ(m.bound, 0.0);
  EXPECT_TRUE(m.holds);
}

TEST(Monitor, ExponentialCheck) {
  const std::vector<double> rates(2, 0.375);
  EXPECT_TRUE(htune::check_exponential(std::vector<double>{25.0, 12.5, 7.03125}, rates));
  EXPECT_FALSE(htune::check_exponential(std::vector<double>{25.0, 16.0, 7.0}, rates));
  EXPECT_FALSE(htune::check_exponential(std::vector<double>{3.0, 3.0}, std::vector<double>{0.2}));
  EXPECT_TRUE(htune::check_exponential(std::vector<double>{25.0}, std::vector<double>{}));
  EXPECT_THROW(htune::check_exponential(std::vector<double>{1.0, 0.5, 0.2}, std::vector<double>{0.1}),
               htune::ShapeError);
}

TEST(Monitor, SimpleConditionsDecreaseOnRandomRuns) {
  std::mt19937_64 rng(99);
  const htune::LogSumExpObjective obj(htune::ParamSchedule::constant(5.0), htune::ParamSchedule::constant(7.0),
                                      htune::ParamSchedule({{0, 0.0}, {100, 3.0}}));
  for (double beta : {0.0, 0.25, 0.5, 0.9}) {
    for (int trial = 0; trial < 10; ++trial) {
      HtState s = HtState::at(htune::oracle::random_in_ball(rng, 1, 10.0));
      for (Step t = 0; t < 200; ++t) {
        const Vector xs = *obj.optimum(t);
        const auto r = htune::ht_step(s, t, obj, {0.5, 1.0, beta, 49.0});
        const double now = htune::lyapunov_v(s.y, s.z, xs), next = htune::lyapunov_v(r.next.y, r.next.z, xs);
        const auto m = htune::monitor_decrease({now, next, 0.5, 49.0, obj.value(t, r.x), obj.value(t, xs), 0.0});
        ASSERT_TRUE(m.holds) << "beta=" << beta << " t=" << t << " delta=" << m.delta << " bound=" << m.bound;
        s = r.next;
      }
    }
  }
}

}  // namespace
