#include "htune/optimizers.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <atomic>

namespace {

using htune::HtHyperParams;
using htune::HtState;
using htune::LogSumExpObjective;
using htune::ParamSchedule;
using htune::Step;
using htune::Vector;

Vector v1(double x) { return Vector::Constant(1, x); }

LogSumExpObjective lse(double b = 7.0, ParamSchedule c = ParamSchedule::constant(0.0)) {
  return {ParamSchedule::constant(5.0), ParamSchedule::constant(b), std::move(c)};
}

/// Wraps an objective and counts gradient calls per step.
class CountingObjective final : public htune::TimeVaryingObjective {
 public:
  explicit CountingObjective(const htune::TimeVaryingObjective& inner) : inner_(inner) {}
  std::size_t dim() const override { return inner_.dim(); }
  double value(Step t, const Vector& x) const override { return inner_.value(t, x); }
  Vector grad(Step t, const Vector& x) const override {
    ++calls_;
    steps_.push_back(t);
    return inner_.grad(t, x);
  }
  double smoothness_bound(Step t) const override { return inner_.smoothness_bound(t); }
  int calls() const { return calls_; }
  const std::vector<Step>& steps() const { return steps_; }

 private:
  const htune::TimeVaryingObjective& inner_;
  mutable int calls_ = 0;
  mutable std::vector<Step> steps_;
};

/// f_t(x) = s x with a constant gradient; lets the updates be checked by hand.
class LinearObjective final : public htune::TimeVaryingObjective {
 public:
  explicit LinearObjective(double slope) : slope_(slope) {}
  std::size_t dim() const override { return 1; }
  double value(Step, const Vector& x) const override { return slope_ * x[0]; }
  Vector grad(Step, const Vector&) const override { return v1(slope_); }
  double smoothness_bound(Step) const override { return 1.0; }

 private:
  double slope_;
};

// ---------------------------------------------------------------------------
// HT

TEST(HtStep, MatchesFrozenExample) {
  const auto obj = lse();
  HtState s{v1(1.0), v1(3.0), std::nullopt};
  const auto r = htune::ht_step(s, 0, obj, {1.5, 1.0, 1.0 / 3.0, 49.0});
  EXPECT_NEAR(r.x[0], htune::oracle::kHtExampleX, 1e-15);
  EXPECT_NEAR(r.grad[0], htune::oracle::kHtExampleGrad, 1e-14);
  EXPECT_NEAR(r.next.y[0], htune::oracle::kHtExampleY, 1e-14);
  EXPECT_NEAR(r.next.z[0], htune::oracle::kHtExampleZ, 1e-14);
  ASSERT_TRUE(r.next.last_x.has_value());
  EXPECT_EQ((*r.next.last_x)[0], r.x[0]);
}

TEST(HtStep, LinearObjectiveByHand) {
  const LinearObjective obj(2.0);
  HtState s{v1(1.0), v1(3.0), std::nullopt};
  // x = 0.5*3 + 0.5*1 = 2; y' = 2 - (1/4)*2 = 1.5; z' = 3 - (0.5/4)*2 = 2.75.
  const auto r = htune::ht_step(s, 0, obj, {0.5, 1.0, 0.5, 4.0});
  EXPECT_EQ(r.x[0], 2.0);
  EXPECT_EQ(r.next.y[0], 1.5);
  EXPECT_EQ(r.next.z[0], 2.75);
}

TEST(HtStep, BetaEndpointsSelectState) {
  const LinearObjective obj(0.0);
  HtState s{v1(1.0), v1(3.0), std::nullopt};
  EXPECT_EQ(htune::ht_step(s, 0, obj, {1.0, 1.0, 1.0, 1.0}).x[0], 3.0);
  EXPECT_EQ(htune::ht_step(s, 0, obj, {1.0, 1.0, 0.0, 1.0}).x[0], 1.0);
}

TEST(HtStep, EvaluatesExactlyOneGradientAtTheCurrentStep) {
  const auto inner = lse();
  const CountingObjective obj(inner);
  HtState s = HtState::at(v1(5.0));
  for (Step t = 0; t < 10; ++t) s = htune::ht_step(s, t, obj, {1.5, 1.0, 2.0 / 3.0, 49.0}).next;
  EXPECT_EQ(obj.calls(), 10);
  for (Step t = 0; t < 10; ++t) EXPECT_EQ(obj.steps()[static_cast<std::size_t>(t)], t);
}

TEST(HtStep, MatchesScalarReferenceRecursion) {
  const ParamSchedule c({{0, 0.0}, {50, 5.0}});
  const auto obj = lse(7.0, c);
  const auto ref = htune::oracle::scalar_ht_lse(
      7.0, [&](Step t) { return c.at(t); }, 5.0, 1.5, 1.0, 2.0 / 3.0, 49.0, 200);
  HtState s = HtState::at(v1(5.0));
  for (Step t = 0; t < 200; ++t) {
    const auto r = htune::ht_step(s, t, obj, {1.5, 1.0, 2.0 / 3.0, 49.0});
    EXPECT_EQ(r.x[0], ref[static_cast<std::size_t>(t)]) << t;
    s = r.next;
  }
}

TEST(HtStep, RejectsInvalidParameters) {
  const auto obj = lse();
  const HtState s = HtState::at(v1(0.0));
  EXPECT_THROW(htune::ht_step(s, 0, obj, {1.0, 1.0, 1.0, 0.0}), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::ht_step(s, 0, obj, {1.0, 2.0, 1.0, 1.0}), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::ht_step(s, 0, obj, {1.0, 1.0, 1.5, 1.0}), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::ht_step(HtState::at(Vector::Zero(2)), 0, obj, {}), htune::ShapeError);
}

TEST(HtStep, DivergenceIsSignalled) {
  const LinearObjective obj(1.0);
  HtState s = HtState::at(v1(0.0));
  EXPECT_THROW(
      {
        for (Step t = 0; t < 100; ++t) s = htune::ht_step(s, t, obj, {1.0, 1.0, 1.0, 1e-7}).next;
      },
      htune::DivergenceError);
  try {
    htune::ht_step(HtState::at(v1(0.0)), 3, obj, {1.0, 1.0, 1.0, 1e-9});
    FAIL() << "expected divergence";
  } catch (const htune::DivergenceError& e) {
    EXPECT_EQ(e.step(), 3);
    EXPECT_GT(std::fabs(e.state()[0]), htune::kDivergenceBound);
  }
}

// ---------------------------------------------------------------------------
// Legacy discretization

TEST(LegacyHt, UsesNextObjectiveForTheYUpdate) {
  const ParamSchedule c({{0, 0.0}, {1, 10.0}});
  const auto inner = lse(1.0, c);
  const CountingObjective obj(inner);
  HtState s{v1(2.0), v1(2.0), std::nullopt};
  const auto r = htune::legacy_ht_step(s, 0, obj, 0.5, 0.5, 1.0);
  EXPECT_EQ(obj.calls(), 2);
  EXPECT_EQ(obj.steps(), (std::vector<Step>{0, 1}));
  const double g_now = std::tanh(2.0), g_next = std::tanh(2.0 - 10.0);
  EXPECT_DOUBLE_EQ(r.next.y[0], 2.0 - 0.25 * g_next);
  EXPECT_DOUBLE_EQ(r.next.z[0], 2.0 - 0.5 * g_now);
  EXPECT_DOUBLE_EQ(r.grad[0], g_now);
}

TEST(LegacyHt, GammaCap) {
  EXPECT_NEAR(htune::legacy_gamma_cap(0.5), htune::oracle::kLegacyCapHalf, 1e-12);
  EXPECT_NEAR(htune::legacy_gamma_cap(0.5), 0.75 / 16.25, 1e-12);
  EXPECT_THROW(htune::legacy_gamma_cap(0.0), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::legacy_gamma_cap(1.0), htune::InvalidHyperParameter);
}

// ---------------------------------------------------------------------------
// GD and Nesterov

TEST(Gd, MatchesFrozenStep) {
  const auto obj = lse();
  EXPECT_NEAR(htune::gd_step(v1(5.0), 0, obj, 49.0)[0], htune::oracle::kGdLseFrom5, 1e-15);
}

TEST(Gd, TimeNormalizedTracksSmoothness) {
  const auto obj = htune::LogSumExpObjective(ParamSchedule::constant(5.0), ParamSchedule({{0, 7.0}, {50, 21.0}}),
                                             ParamSchedule::constant(0.0));
  const Vector x = v1(0.1);
  EXPECT_EQ(htune::tn_gd_step(x, 10, obj)[0], htune::gd_step(x, 10, obj, 49.0)[0]);
  EXPECT_EQ(htune::tn_gd_step(x, 60, obj)[0], htune::gd_step(x, 60, obj, 441.0)[0]);
}

TEST(Gd, CoincidesBitwiseWithHtAtUnitParameters) {
  const auto obj = lse(7.0, ParamSchedule({{0, 0.0}, {50, 5.0}}));
  Vector x = v1(5.0);
  HtState s = HtState::at(v1(5.0));
  for (Step t = 0; t < 500; ++t) {
    const auto r = htune::ht_step(s, t, obj, {1.0, 1.0, 1.0, 49.0});
    ASSERT_EQ(r.x[0], x[0]) << t;
    x = htune::gd_step(x, t, obj, 49.0);
    s = r.next;
  }
}

TEST(Nagd, Parameters) {
  const auto h1 = htune::nagd_params(1, 49.0);
  EXPECT_EQ(h1.gamma, 0.5);
  EXPECT_EQ(h1.mu, 1.0);
  EXPECT_EQ(h1.beta, 1.0);
  const auto h3 = htune::nagd_params(3, 49.0);
  EXPECT_EQ(h3.gamma, 1.5);
  EXPECT_EQ(h3.beta, 0.5);
  EXPECT_EQ(h3.normalizer, 49.0);
  EXPECT_THROW(htune::nagd_params(0, 1.0), htune::InvalidHyperParameter);
  const auto sched = htune::nagd_schedule(4, 2.0);
  ASSERT_EQ(sched.size(), 4u);
  EXPECT_EQ(sched[3].gamma, 2.0);
  EXPECT_EQ(sched[3].beta, 0.4);
  EXPECT_THROW(htune::nagd_schedule(0), htune::InvalidHyperParameter);
}

TEST(Nagd, ConvergesOnAFixedQuadratic) {
  const htune::DiagonalQuadratic obj(Vector::Constant(2, 1.0), Vector::Constant(2, 3.0));
  HtState s = HtState::at(Vector::Zero(2));
  for (Step k = 1; k <= 300; ++k) s = htune::ht_step(s, k - 1, obj, htune::nagd_params(k, 1.0)).next;
  EXPECT_LT((s.y - Vector::Constant(2, 3.0)).norm(), 1e-6);
}

// ---------------------------------------------------------------------------
// Adaptive baselines

TEST(Adam, MatchesTextbookRecursion) {
  const auto obj = lse();
  const auto ref =
      htune::oracle::scalar_adam([&](double x) { return 7.0 * std::tanh(7.0 * x); }, 5.0, 1.0, 100);
  auto s = htune::AccumulatorState::at(v1(5.0));
  for (int k = 0; k < 100; ++k) {
    s = htune::adam_step(s, k, obj, 1.0);
    EXPECT_NEAR(s.x[0], ref[static_cast<std::size_t>(k + 1)], 1e-13) << k;
  }
  EXPECT_EQ(s.step_count, 100);
}

TEST(Adam, FirstStepMovesByAlpha) {
  // Bias correction makes the first update sign(g) * alpha (up to eps).
  const LinearObjective obj(3.0);
  const auto s = htune::adam_step(htune::AccumulatorState::at(v1(0.0)), 0, obj, 0.5);
  EXPECT_NEAR(s.x[0], -0.5, 1e-8);
}

TEST(Adam, RejectsInvalidSettings) {
  const LinearObjective obj(1.0);
  const auto s = htune::AccumulatorState::at(v1(0.0));
  EXPECT_THROW(htune::adam_step(s, 0, obj, 0.0), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::adam_step(s, 0, obj, 1.0, 1.0), htune::InvalidHyperParameter);
  EXPECT_THROW(htune::adam_step(s, 0, obj, 1.0, 0.9, 0.999, 0.0), htune::InvalidHyperParameter);
}

TEST(Adagrad, MatchesTextbookRecursion) {
  const auto obj = lse();
  const auto ref =
      htune::oracle::scalar_adagrad([&](double x) { return 7.0 * std::tanh(7.0 * x); }, 5.0, 1.0, 100);
  auto s = htune::AccumulatorState::at(v1(5.0));
  for (int k = 0; k < 100; ++k) {
    s = htune::adagrad_step(s, k, obj, 1.0);
    EXPECT_NEAR(s.x[0], ref[static_cast<std::size_t>(k + 1)], 1e-13) << k;
  }
}

TEST(Adagrad, ZeroGradientCoordinatesStayPut) {
  const auto obj = htune::SwitchingRegression::streaming_example(10);
  auto s = htune::AccumulatorState::at(Vector::Zero(2));
  for (Step t = 0; t < 10; ++t) s = htune::adagrad_step(s, t, obj, 1.0);
  EXPECT_EQ(s.x[1], 0.0);
  EXPECT_NE(s.x[0], 0.0);
}

}  // namespace
