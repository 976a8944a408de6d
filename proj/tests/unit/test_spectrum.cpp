#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "magflow/spectrum.hpp"

using namespace magflow;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

SurfaceModel periodicPerturbed() {
  return SurfaceModel(0.6, {{0.01, {0.4, 1.1}, 1.0}}, {}).withPeriod(2.0);
}

SurfaceModel perturbed() {
  return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

const UnitVector kV{{0.1, 1.0}, 1.3};

}  // namespace

TEST(Quotient, ValidatesInvariance) {
  const SurfaceModel bump(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {});
  EXPECT_THROW(CyclicQuotient(bump, 2.0), ConfigError);
  const SurfaceModel periodic = periodicPerturbed();
  EXPECT_THROW(CyclicQuotient(periodic, 3.0), ConfigError);
  const SurfaceModel flat(0.6);
  EXPECT_THROW(CyclicQuotient(flat, -1.0), ConfigError);
  const CyclicQuotient q(periodic, 4.0);
  EXPECT_LT(q.invarianceResidual(), 1e-10);
}

TEST(PeriodicOrbit, GeodesicAxis) {
  const SurfaceModel m(0.0);
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  EXPECT_NEAR(o.period, 2.0, 1e-10);
  EXPECT_NEAR(o.v.base.x, 0.0, 1e-10);
  EXPECT_NEAR(o.v.base.y, 1.0, 1e-10);
  EXPECT_NEAR(o.v.angle, kHalfPi, 1e-10);
}

TEST(PeriodicOrbit, ConstantFieldEquidistant) {
  const SurfaceModel m(0.6);
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const double d = std::atanh(0.6);
  EXPECT_NEAR(o.offset, d, 1e-8);
  EXPECT_NEAR(o.offset, std::log(2.0), 1e-8);
  EXPECT_NEAR(o.period, 2.0 * std::cosh(d), 1e-8);
  EXPECT_NEAR(o.period, 2.5, 1e-8);
}

TEST(PeriodicOrbit, InvarianceResidual) {
  for (const SurfaceModel& m : {SurfaceModel(0.6), periodicPerturbed()}) {
    const CyclicQuotient q(m, 2.0);
    const PeriodicOrbit o = findPeriodicOrbit(q, 1e-10);
    EXPECT_LT(o.residual, 1e-10);
    const UnitVector e = flow(m, o.v, o.period, 1e-12);
    const Point image = q.generator().apply(o.v.base);
    EXPECT_LT(distance(m, e.base, image), 1e-9);
    EXPECT_NEAR(wrapAngle(e.angle - o.v.angle), 0.0, 1e-9);
  }
}

TEST(PeriodicOrbit, PerturbedOrbitLeavesTheEquidistant) {
  const SurfaceModel m = periodicPerturbed();
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  EXPECT_GT(std::abs(o.period - 2.5), 1e-4);
  EXPECT_GT(std::abs(o.angleShift), 1e-5);
}

TEST(PeriodicLyapunov, ClosedForms) {
  {
    const SurfaceModel m(0.0);
    const CyclicQuotient q(m, 2.0);
    const LyapunovData l = periodicLyapunov(q, findPeriodicOrbit(q));
    EXPECT_NEAR(l.lambdaMinus, -1.0, 1e-8);
    EXPECT_NEAR(l.multiplier, std::exp(-2.0), 1e-8);
  }
  const double kappa = 0.6, lambda = std::sqrt(1.0 - kappa * kappa);
  const SurfaceModel m(kappa);
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const LyapunovData l = periodicLyapunov(q, o);
  EXPECT_NEAR(l.lambdaMinus, -lambda, 1e-8);
  EXPECT_NEAR(l.multiplier, std::exp(-lambda * 2.0 * std::cosh(std::atanh(kappa))), 1e-8);
  EXPECT_NEAR(l.uMinus, -lambda, 1e-8);
  EXPECT_NEAR(l.uPlus, lambda, 1e-8);
}

TEST(PeriodicLyapunov, SymmetricPairAndBounds) {
  for (const SurfaceModel& m : {SurfaceModel(0.6), periodicPerturbed()}) {
    const CyclicQuotient q(m, 2.0);
    const PeriodicOrbit o = findPeriodicOrbit(q);
    const LyapunovData l = periodicLyapunov(q, o);
    EXPECT_NEAR(l.lambdaPlus + l.lambdaMinus, 0.0, 1e-8);
    // Forward cross-check: the Wronskian makes y_+ y_- = 1 over a period.
    EXPECT_NEAR(l.multiplier * l.multiplierPlus, 1.0, 1e-8);
    EXPECT_NEAR(l.lambdaMinus, std::log(l.multiplier) / o.period, 1e-8);
    EXPECT_GT(l.multiplier, 0.0);
    EXPECT_LT(l.multiplier, 1.0);
    const ModelBounds& b = m.bounds();
    EXPECT_LE(b.q1, -l.lambdaMinus + 1e-12);
    EXPECT_LE(-l.lambdaMinus, b.q0 + 1e-12);
  }
}

TEST(PeriodicLyapunov, MultiplierCocycle) {
  const SurfaceModel m = periodicPerturbed();
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const double y = periodicLyapunov(q, o).multiplier;
  EXPECT_NEAR(periodicMultiplier(q, o, 1), y, 1e-10);
  for (int n : {2, 3}) {
    const double yn = periodicMultiplier(q, o, n);
    EXPECT_LT(std::abs(yn / std::pow(y, n) - 1.0), n * 1e-7) << n;
  }
  EXPECT_THROW(periodicMultiplier(q, o, 0), ConfigError);
}

TEST(ScalingIdentity, ConstantQuotient) {
  const SurfaceModel m(0.6);
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const ScalingCheck c = scalingIdentityCheck(q, o, 20);
  ASSERT_EQ(c.samples.size(), 20u);
  EXPECT_NEAR(c.multiplier, std::exp(-2.0), 1e-8);
  EXPECT_LT(c.maxResidual, 1e-5);
}

TEST(ScalingIdentity, BasePointIsZero) {
  const SurfaceModel m(0.6);
  const CyclicQuotient q(m, 2.0);
  const ScalingCheck c = scalingIdentityCheck(q, findPeriodicOrbit(q), 3);
  EXPECT_EQ(c.samples[1].s, 0.0);
  EXPECT_NEAR(c.samples[1].pushed, 0.0, 1e-9);
  EXPECT_NEAR(c.samples[1].scaled, 0.0, 1e-9);
}

TEST(ScalingIdentity, PeriodicPerturbedQuotient) {
  const SurfaceModel m = periodicPerturbed();
  const CyclicQuotient q(m, 2.0);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const ScalingCheck c = scalingIdentityCheck(q, o, 20);
  EXPECT_LT(c.maxResidual, 1e-4);
  // The identity is linear in E_v(z): residuals stay small relative to it.
  for (const ScalingSample& s : c.samples)
    if (std::abs(s.scaled) > 1e-3) EXPECT_LT(s.residual / std::abs(s.scaled), 1e-4) << s.s;
}

TEST(LyapunovConstancy, ConstantModel) {
  const SurfaceModel m(0.6);
  const UnitVector v{{0.0, 1.0}, 1.0};
  const HorocycleCurve c = traceHorocycle(m, v, 1.0);
  const HorocycleNode& nd = c.node(0.5);
  for (double horizon : {5.0, 20.0}) {
    const LyapunovPair p = lyapunovConstancyWCS(m, v, {nd.point, nd.angle}, horizon);
    EXPECT_NEAR(p.chi, 0.8, 1e-8);
    EXPECT_NEAR(p.chiPrime, 0.8, 1e-8);
  }
}

TEST(LyapunovConstancy, TimeShift) {
  const SurfaceModel m = perturbed();
  constexpr double kS = 0.7, kT = 20.0;
  const UnitVector vp = flow(m, kV, kS, 1e-12);
  const LyapunovPair p = lyapunovConstancyWCS(m, kV, vp, kT);
  EXPECT_NEAR(p.offset, kS, 1e-6);
  EXPECT_LE(p.gap, 2.0 * m.bounds().q0 * kS / kT);
  EXPECT_LE(p.gap, p.bound);
}

TEST(LyapunovConstancy, PerturbedHorizon20) {
  const SurfaceModel m = perturbed();
  const HorocycleCurve c = traceHorocycle(m, kV, 1.0);
  for (double s : {-1.0, 0.5, 1.0}) {
    const HorocycleNode& nd = c.node(s);
    const LyapunovPair p = lyapunovConstancyWCS(m, kV, {nd.point, nd.angle}, 20.0);
    EXPECT_LE(p.gap, std::abs(p.logTransfer) / 20.0 + 1e-6) << s;
  }
  const UnitVector w = asymptoticVector(m, {0.35, 1.2}, kV);
  const LyapunovPair p = lyapunovConstancyWCS(m, kV, w, 20.0);
  EXPECT_LE(p.gap, p.bound);
  EXPECT_THROW(lyapunovConstancyWCS(m, kV, w, 0.0), ConfigError);
}
