#include "ismpc/disturbance.hpp"
#include "ismpc/simulation.hpp"
#include "ismpc/trace_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

using namespace ismpc;

namespace {

ScenarioConfig walking(StabilityMode mode, double duration) {
  ScenarioConfig c;
  c.name = "walk";
  GaitGenerator gen;
  c.steps = gen.generate();
  c.mpc.mode = mode;
  c.duration = duration;
  return c;
}

void setConstant(ScenarioConfig& c, double dx, double dy) {
  c.disturbance[0].signal = ConstantSignal{dx};
  c.disturbance[1].signal = ConstantSignal{dy};
}

double maxComDifference(const ScenarioResult& a, const ScenarioResult& b) {
  double m = 0.0;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < n; ++k)
    for (int ax = 0; ax < 2; ++ax) {
      m = std::max(m, std::abs(a.samples[k].state[ax].com_pos - b.samples[k].state[ax].com_pos));
      m = std::max(m, std::abs(a.samples[k].state[ax].zmp_pos - b.samples[k].state[ax].zmp_pos));
    }
  return m;
}

}  // namespace

TEST(DisturbanceSignal, Kinds) {
  EXPECT_EQ(DisturbanceSignal(ConstantSignal{0.4}).at(3.0), 0.4);
  const DisturbanceSignal s = SinusoidSignal{0.2, 0.15, 2.0, 0.5};
  EXPECT_NEAR(s.at(1.2), 0.2 + 0.15 * std::sin(2.4 + 0.5), 1e-15);
  const DisturbanceSignal r = RampSignal{0.1, 0.2, 1.0};
  EXPECT_EQ(r.at(0.5), 0.1);
  EXPECT_NEAR(r.at(2.0), 0.3, 1e-15);
  const DisturbanceSignal f = ForceSignal{1.8, 4.5};
  EXPECT_NEAR(f.at(0.0), 0.4, 1e-15);
  const DisturbanceSignal sum = SumSignal{{ConstantSignal{0.1}, ForceSignal{0.9, 4.5}}};
  EXPECT_NEAR(sum.at(0.0), 0.3, 1e-15);
  const DisturbanceSignal table = TableSignal{0.0, 0.1, {0.0, 1.0, 0.0}};
  EXPECT_NEAR(table.at(0.05), 0.5, 1e-15);
  EXPECT_EQ(table.at(5.0), 0.0);
  EXPECT_EQ(table.at(-1.0), 0.0);
  EXPECT_TRUE(DisturbanceSignal::zero().isZero());
  EXPECT_FALSE(s.isZero());
}

TEST(DisturbanceSignal, SecantSlopeReproducesEndpoints) {
  const DisturbanceSignal s = SinusoidSignal{0.2, 0.15, 2.0 * M_PI, 0.0};
  const double t = 0.13, dt = 0.01;
  EXPECT_NEAR(s.at(t) + s.secantSlope(t, dt) * dt, s.at(t + dt), 1e-15);
}

TEST(DisturbanceSignal, Validation) {
  EXPECT_THROW(DisturbanceSignal(ForceSignal{1.0, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW(DisturbanceSignal(TableSignal{0.0, 0.0, {1.0}}).validate(), std::invalid_argument);
  EXPECT_THROW(DisturbanceSignal(SumSignal{{ForceSignal{1.0, -1.0}}}).validate(), std::invalid_argument);
}

TEST(Pendulum, RestAndMasslessGiveZero) {
  PendulumEmulator p(PendulumParams{});
  EXPECT_EQ(p.disturbance(0.0), 0.0);
  for (int k = 0; k < 100; ++k) p.advance(0.0, 0.01);
  EXPECT_EQ(p.angle(), 0.0);
  PendulumParams massless;
  massless.mass = 0.0;
  const auto sig = pendulumDisturbance(massless, std::vector<double>(200, 3.0), 0.01);
  for (double t = 0.0; t < 2.0; t += 0.1) EXPECT_EQ(sig.at(t), 0.0);
  PendulumParams bad;
  bad.length = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Pendulum, SmallSwingFrequency) {
  PendulumParams pp;
  pp.damping = 0.0;
  pp.initial_angle = 0.01;
  PendulumEmulator p(pp);
  // Count zero crossings of the angle over 10 s.
  int crossings = 0;
  double prev = p.angle();
  for (int k = 0; k < 100000; ++k) {
    p.advance(0.0, 1e-4);
    if ((prev > 0) != (p.angle() > 0)) ++crossings;
    prev = p.angle();
  }
  const double f = std::sqrt(pp.gravity / pp.length) / (2 * M_PI);
  EXPECT_NEAR(crossings / 20.0, f, 0.1);
}

TEST(Scenario, ValidationErrors) {
  ScenarioConfig c = walking(StabilityMode::Nominal, 1.0);
  c.steps.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = walking(StabilityMode::Nominal, 0.0);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = walking(StabilityMode::Nominal, 30.0);
  c.plan_options.periodic_extension = false;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = walking(StabilityMode::ObserverBased, 1.0);
  c.observer.poles = {{-80, 0}, {-81, 0}, {-82, 0}, {-83, 0}, {-84, 0}};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Scenario, TerminationStrings) {
  EXPECT_EQ(Termination{}.toString(), "completed");
  EXPECT_EQ((Termination{TerminationKind::Infeasible, 57}.toString()), "infeasible_at(57)");
  EXPECT_EQ((Termination{TerminationKind::Diverged, 3}.toString()), "diverged_at(3)");
}

TEST(Scenario, NominalWalkStaysInsideRegions) {
  const ScenarioResult r = runScenario(walking(StabilityMode::Nominal, 6.0));
  ASSERT_TRUE(r.completed());
  EXPECT_EQ(r.samples.size(), 600u);
  const RunMetrics m = computeMetrics(r);
  EXPECT_LE(m.max_region_violation, 1e-8);
  EXPECT_LT(m.max_divergence.maxCoeff(), 0.05);
  for (std::size_t k = 0; k < r.samples.size(); ++k) {
    EXPECT_NEAR(r.samples[k].time, 0.01 * static_cast<double>(k), 1e-12);
    EXPECT_LE(r.samples[k].mpc.stability_residual.maxCoeff(), 1e-8);
  }
}

TEST(Scenario, ZmpTraceIsPiecewiseLinear) {
  const ScenarioResult r = runScenario(walking(StabilityMode::Nominal, 2.0));
  for (std::size_t k = 0; k + 1 < r.samples.size(); ++k)
    for (int a = 0; a < 2; ++a)
      EXPECT_NEAR(r.samples[k + 1].state[a].zmp_pos,
                  r.samples[k].state[a].zmp_pos + 0.01 * r.samples[k].zmp_vel(a), 1e-15);
}

TEST(Scenario, Deterministic) {
  ScenarioConfig c = walking(StabilityMode::ObserverBased, 2.0);
  setConstant(c, 0.4, 0.4);
  c.measurement_noise = 1e-4;
  c.seed = 7;
  const ScenarioResult a = runScenario(c);
  const ScenarioResult b = runScenario(c);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].state[0].com_pos, b.samples[k].state[0].com_pos);
    EXPECT_EQ(a.samples[k].estimate[1].estimate, b.samples[k].estimate[1].estimate);
  }
}

TEST(Scenario, ZeroDisturbanceObserverMatchesNominal) {
  const ScenarioResult a = runScenario(walking(StabilityMode::Nominal, 5.0));
  const ScenarioResult b = runScenario(walking(StabilityMode::ObserverBased, 5.0));
  ASSERT_TRUE(a.completed() && b.completed());
  EXPECT_LT(maxComDifference(a, b), 1e-6);
}

TEST(Scenario, ObserverConvergesUnderConstantDisturbance) {
  ScenarioConfig c = walking(StabilityMode::ObserverBased, 6.0);
  setConstant(c, 0.4, 0.4);
  const ScenarioResult r = runScenario(c);
  ASSERT_TRUE(r.completed()) << r.termination.toString();
  for (const auto& s : r.samples)
    if (s.time >= 2.0) {
      for (int a = 0; a < 2; ++a) EXPECT_LT(std::abs(s.estimate[a].disturbance() - 0.4), 0.004) << s.time;
    }
}

TEST(Scenario, SlowSinusoidCompletes) {
  ScenarioConfig c = walking(StabilityMode::ObserverBased, 10.0);
  for (int a = 0; a < 2; ++a) c.disturbance[a].signal = SinusoidSignal{0.2, 0.15, 0.45 * M_PI, 0.0};
  const ScenarioResult r = runScenario(c);
  ASSERT_TRUE(r.completed()) << r.termination.toString();
  EXPECT_LT(computeMetrics(r).max_divergence.maxCoeff(), 0.1);
}

TEST(Scenario, NominalModeFailsUnderUnknownDisturbance) {
  ScenarioConfig c = walking(StabilityMode::Nominal, 5.0);
  setConstant(c, 0.4, 0.4);
  const ScenarioResult r = runScenario(c);
  EXPECT_EQ(r.termination.kind, TerminationKind::Infeasible);
  // The infeasible iteration is the last recorded sample.
  ASSERT_FALSE(r.samples.empty());
  EXPECT_FALSE(r.samples.back().feasible);
  EXPECT_EQ(r.samples.back().sample, r.termination.sample);
}

TEST(Scenario, PiecewiseLinearDisturbanceEstimateConverges) {
  ScenarioConfig c = walking(StabilityMode::ObserverBased, 6.0);
  c.disturbance[0].signal = RampSignal{0.1, 0.05, 1.0};
  c.disturbance[1].signal = ConstantSignal{0.2};
  const ScenarioResult r = runScenario(c);
  ASSERT_TRUE(r.completed()) << r.termination.toString();
  for (const auto& s : r.samples)
    if (s.time >= 3.0) {
      for (int a = 0; a < 2; ++a) EXPECT_LT(std::abs(s.estimate[a].disturbance() - s.disturbance(a)), 1e-3);
    }
}

TEST(Scenario, PendulumWalkIsBoundedAndOscillatesWithTheGait) {
  ScenarioConfig c = walking(StabilityMode::ObserverBased, 20.0);
  c.disturbance[1].pendulum = PendulumParams{};
  const ScenarioResult r = runScenario(c);
  ASSERT_TRUE(r.completed()) << r.termination.toString();
  std::vector<double> d;
  for (const auto& s : r.samples)
    if (s.time >= 5.0) d.push_back(s.disturbance(1));
  double peak = 0.0;
  for (double v : d) peak = std::max(peak, std::abs(v));
  EXPECT_GT(peak, 1e-3);
  EXPECT_LT(peak, 2.0);
  // Dominant frequency by a direct DFT scan; one lateral gait cycle is two steps.
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  const double gait_freq = 1.0 / (2.0 * (c.timing.ss_duration + c.timing.ds_duration));
  double best_f = 0.0, best_p = -1.0;
  for (double f = 0.1; f <= 5.0; f += 0.01) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k)
      acc += (d[k] - mean) * std::exp(std::complex<double>(0.0, -2.0 * M_PI * f * 0.01 * static_cast<double>(k)));
    if (std::abs(acc) > best_p) {
      best_p = std::abs(acc);
      best_f = f;
    }
  }
  EXPECT_NEAR(best_f, gait_freq, 0.1 * gait_freq);
}

TEST(Scenario, PlanAndRealizedFootstepsRecorded) {
  const ScenarioResult r = runScenario(walking(StabilityMode::Nominal, 3.0));
  ASSERT_FALSE(r.planned_steps.empty());
  EXPECT_EQ(r.planned_steps.size(), r.realized_steps.size());
  // 3 s: SS of steps 0..4 starts at samples 60, 110, 160, 210, 260.
  EXPECT_EQ(r.realized_steps.size(), 5u);
}
