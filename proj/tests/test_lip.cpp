#include "ismpc/lip.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ismpc;

namespace {

const LipParamsd kLip(9.81, 0.33);

oracle::LipState toOracle(const AxisStated& s) { return {s.com_pos, s.com_vel, s.zmp_pos}; }

}  // namespace

TEST(LipParams, NaturalFrequencyFromComHeight) {
  EXPECT_NEAR(kLip.eta(), std::sqrt(9.81 / 0.33), 1e-15);
  EXPECT_NEAR(kLip.eta(), 5.45227, 1e-5);
  EXPECT_NEAR(kLip.eta2(), 29.7273, 1e-4);
}

TEST(LipParams, RejectsNonPositiveValues) {
  EXPECT_THROW(LipParamsd(9.81, 0.0), std::invalid_argument);
  EXPECT_THROW(LipParamsd(-1.0, 0.33), std::invalid_argument);
}

TEST(Decompose, OriginAndRestStates) {
  const auto o = decompose(AxisStated{0.0, 0.0, 0.0}, kLip);
  EXPECT_EQ(o.unstable, 0.0);
  EXPECT_EQ(o.stable, 0.0);
  const auto r = decompose(AxisStated{0.1, 0.0, 0.0}, LipParamsd(3.0, 1.0));
  EXPECT_DOUBLE_EQ(r.unstable, 0.1);
  EXPECT_DOUBLE_EQ(r.stable, 0.1);
}

TEST(Decompose, DivergentComponentValue) {
  const auto d = decompose(AxisStated{0.1, 0.05, 0.0}, kLip);
  EXPECT_NEAR(d.unstable, 0.1 + 0.05 / 5.45227, 1e-6);
  EXPECT_NEAR(d.unstable, 0.10917, 1e-5);
}

TEST(Recompose, FromDecomposedCoordinates) {
  const auto s = recompose(DecomposedStated{0.2, 0.0}, 0.0, kLip);
  EXPECT_NEAR(s.com_pos, 0.1, 1e-15);
  EXPECT_NEAR(s.com_vel, kLip.eta() * 0.1, 1e-12);
  EXPECT_NEAR(s.com_vel, 0.54523, 1e-5);
  const auto z = recompose(DecomposedStated{0.0, 0.0}, 0.0, kLip);
  EXPECT_EQ(z.com_pos, 0.0);
  EXPECT_EQ(z.com_vel, 0.0);
  EXPECT_EQ(z.zmp_pos, 0.0);
}

TEST(Recompose, RoundTripRandomStates) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const AxisStated s{u(rng), u(rng), u(rng)};
    const AxisStated r = recompose(decompose(s, kLip), s.zmp_pos, kLip);
    EXPECT_NEAR(r.com_pos, s.com_pos, 1e-12);
    EXPECT_NEAR(r.com_vel, s.com_vel, 1e-12);
    EXPECT_EQ(r.zmp_pos, s.zmp_pos);
  }
}

TEST(StepExact, EquilibriumIsFixedPoint) {
  const AxisStated s{0.3, 0.0, 0.3};
  const AxisStated n = stepExact(s, 0.0, AffineDisturbanced{}, 0.01, kLip);
  EXPECT_NEAR(n.com_pos, 0.3, 1e-15);
  EXPECT_NEAR(n.com_vel, 0.0, 1e-15);
  EXPECT_EQ(n.zmp_pos, 0.3);
}

TEST(StepExact, ConstantDisturbanceOffsetIsStationary) {
  const double d = 0.4;
  const double offset = d / kLip.eta2();
  EXPECT_NEAR(offset, 0.4 * 0.33 / 9.81, 1e-15);
  EXPECT_NEAR(offset, 0.013456, 1e-6);
  // The fixed point of c'' = eta^2 (c - z) + d has the CoM behind the ZMP.
  AxisStated s{-offset, 0.0, 0.0};
  for (int k = 0; k < 500; ++k) s = stepExact(s, 0.0, AffineDisturbanced{d, 0.0}, 0.01, kLip);
  EXPECT_NEAR(s.zmp_pos - s.com_pos, offset, 1e-10);
  EXPECT_NEAR(s.com_vel, 0.0, 1e-9);
}

TEST(StepExact, MatchesFineStepIntegrator) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const AxisStated s{0.1 * u(rng), 0.5 * u(rng), 0.1 * u(rng)};
    const double v = 0.5 * u(rng);
    const AffineDisturbanced d{u(rng), 3.0 * u(rng)};
    const double dt = 0.005 + 0.02 * (u(rng) + 1.0);
    const AxisStated n = stepExact(s, v, d, dt, kLip);
    const auto ref = oracle::integrateLip(toOracle(s), v, [&](double t) { return d.value + d.slope * t; }, 0.0, dt,
                                          kLip.eta2());
    EXPECT_NEAR(n.com_pos, ref.c, 1e-9);
    EXPECT_NEAR(n.com_vel, ref.cd, 1e-9);
    EXPECT_NEAR(n.zmp_pos, ref.z, 1e-12);
  }
}

TEST(StepExact, RejectsNonPositiveStep) {
  EXPECT_THROW(stepExact(AxisStated{}, 0.0, AffineDisturbanced{}, 0.0, kLip), std::invalid_argument);
}

TEST(UnstableFlow, DivergentEquilibriumAndFrozenZmp) {
  EXPECT_DOUBLE_EQ(unstableFlow(0.2, 0.2, 0.0, AffineDisturbanced{}, 0.01, kLip), 0.2);
  const double xu = 0.05, xz = 0.01, dt = 0.03;
  EXPECT_NEAR(unstableFlow(xu, xz, 0.0, AffineDisturbanced{}, dt, kLip),
              xz + std::exp(kLip.eta() * dt) * (xu - xz), 1e-15);
}

TEST(UnstableFlow, AffineInputsMatchIntegrator) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const AxisStated s{0.1 * u(rng), 0.3 * u(rng), 0.1 * u(rng)};
    const double v = 0.4 * u(rng);
    const AffineDisturbanced d{u(rng), u(rng)};
    const double dt = 0.01;
    const auto ref = oracle::integrateLip(toOracle(s), v, [&](double t) { return d.value + d.slope * t; }, 0.0, dt,
                                          kLip.eta2());
    const double xu_ref = ref.c + ref.cd / kLip.eta();
    const double xs_ref = ref.c - ref.cd / kLip.eta();
    const auto dec = decompose(s, kLip);
    EXPECT_NEAR(unstableFlow(dec.unstable, s.zmp_pos, v, d, dt, kLip), xu_ref, 1e-9);
    EXPECT_NEAR(stableFlow(dec.stable, s.zmp_pos, v, d, dt, kLip), xs_ref, 1e-9);
  }
}

TEST(LipDiscreteModel, AgreesWithExactStepWithoutDisturbance) {
  const LipDiscreteModel<double> m(kLip, 0.01);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const AxisStated s{u(rng), u(rng), u(rng)};
    const double v = u(rng);
    const Eigen::Vector3d a = m.step(s.vector(), v);
    const AxisStated b = stepExact(s, v, AffineDisturbanced{}, 0.01, kLip);
    EXPECT_NEAR(a(0), b.com_pos, 1e-13);
    EXPECT_NEAR(a(1), b.com_vel, 1e-12);
    EXPECT_NEAR(a(2), b.zmp_pos, 1e-15);
  }
}

TEST(LipTemplates, InstantiateWithLongDouble) {
  const LipParams<long double> p(9.81L, 0.33L);
  const AxisState<long double> s{0.01L, 0.02L, 0.0L};
  const auto n = stepExact(s, 0.1L, AffineDisturbance<long double>{0.1L, 0.0L}, 0.01L, p);
  const AxisStated nd = stepExact(AxisStated{0.01, 0.02, 0.0}, 0.1, AffineDisturbanced{0.1, 0.0}, 0.01, kLip);
  EXPECT_NEAR(static_cast<double>(n.com_pos), nd.com_pos, 1e-14);
}

TEST(ExpRatios, SeriesBranchIsContinuous) {
  for (double x : {1e-6, -1e-6, 2e-5, -2e-5}) {
    const double a = detail::expm1Ratio(x);
    const double b = std::expm1(x) / x;
    EXPECT_NEAR(a, b, 1e-12);
  }
}
