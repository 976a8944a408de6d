#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "magflow/horocycle.hpp"

using namespace magflow;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

SurfaceModel perturbed() {
  return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

}  // namespace

TEST(Horocycle, OsculatingEndpointsOfGeodesics) {
  const SurfaceModel m;
  EXPECT_EQ(osculatingEndpoint(m, {{0, 1}, kHalfPi}).b, 0.0);
  EXPECT_NEAR(osculatingEndpoint(m, {{0, 1}, 0.0}).value(), 1.0, 1e-14);
  EXPECT_NEAR(osculatingEndpoint(m, {{0, 1}, std::numbers::pi}).value(), -1.0, 1e-14);
  EXPECT_NEAR(osculatingEndpoint(m, {{2, 3}, -kHalfPi}).value(), 2.0, 1e-14);
}

TEST(Horocycle, EndpointIsConstantAlongConstantFieldOrbit) {
  const SurfaceModel m(0.6);
  const UnitVector v{{0.3, 1.2}, -0.4};
  const BoundaryPoint e0 = osculatingEndpoint(m, v);
  for (double t : {1.0, 3.0, 7.0})
    EXPECT_LT(e0.separation(osculatingEndpoint(m, flow(m, v, t))), 1e-8);
  // Straight chart lines ending at infinity have cos(angle) = kappa.
  EXPECT_EQ(osculatingEndpoint(m, {{0, 1}, std::acos(0.6)}).b, 0.0);
}

TEST(Horocycle, AsymptoticVectorOnOwnOrbit) {
  const SurfaceModel m = perturbed();
  const UnitVector v{{0.1, 1.0}, 0.3};
  const UnitVector w = flow(m, v, 1.5);
  const UnitVector a = asymptoticVector(m, w.base, v);
  EXPECT_NEAR(wrapAngle(a.angle - w.angle), 0.0, 1e-8);
}

TEST(Horocycle, AsymptoticVectorToInfinityIsVertical) {
  const SurfaceModel m;
  const AsymptoticField f(m, BoundaryPoint::infinity());
  for (Point p : {Point{0.5, 0.3}, Point{-2, 4}, Point{7, 1}})
    EXPECT_NEAR(f.at(p).angle, kHalfPi, 1e-10);
}

TEST(Horocycle, AsymptoticContractionRate) {
  const SurfaceModel m(0.6);
  const UnitVector v{{0, 1}, 1.0};
  const UnitVector w = asymptoticVector(m, {0.3, 1.1}, v);
  // Same-time distances between asymptotic orbits contract along a horocycle
  // pair only up to a constant time offset; compare with the offset removed.
  const double offset = busemann(m, v, w.base);
  std::vector<double> d;
  for (double t : {2.0, 4.0, 6.0})
    d.push_back(hyperbolicDistance(flow(m, v, t + offset).base, flow(m, w, t).base));
  EXPECT_NEAR(d[1] / d[0], std::exp(-1.6), 1e-3);
  EXPECT_NEAR(d[2] / d[1], std::exp(-1.6), 1e-3);
}

TEST(Horocycle, BusemannClosedForms) {
  const SurfaceModel g;
  const UnitVector up{{0, 1}, kHalfPi};
  for (Point z : {Point{0.4, 2.0}, Point{-1.0, 0.5}})
    EXPECT_NEAR(busemann(g, up, z), std::log(z.y), 1e-8);
  const SurfaceModel m(0.6);
  for (Point z : {Point{0.4, 2.0}, Point{-1.0, 0.5}})
    EXPECT_NEAR(busemann(m, {{0, 1}, std::acos(0.6)}, z), std::log(z.y) / 0.8, 1e-8);
}

TEST(Horocycle, BusemannAlongFlow) {
  const SurfaceModel m = perturbed();
  const UnitVector v{{0.1, 1.0}, 0.3};
  const BusemannFunction b(m, v);
  EXPECT_EQ(b(v.base), 0.0);
  for (double t : {0.7, 2.0, -1.0}) EXPECT_NEAR(b(flow(m, v, t).base), t, 1e-6);
}

TEST(Horocycle, StablePush) {
  const SurfaceModel m = perturbed();
  const UnitVector v{{0.1, 1.0}, 0.3};
  const AsymptoticField f(m, v, 1e-12);
  const Point p{0.4, 1.3};
  const Point p0 = stablePush(m, v, p, 0.0);
  EXPECT_EQ(p0.x, p.x);
  const Point a = stablePush(f, v.base, 1.2), b = flow(m, v, 1.2).base;
  EXPECT_NEAR(a.x, b.x, 1e-8);
  EXPECT_NEAR(a.y, b.y, 1e-8);
  const Point c = stablePush(f, stablePush(f, p, 0.5), 0.8), d = stablePush(f, p, 1.3);
  EXPECT_NEAR(c.x, d.x, 1e-6);
  EXPECT_NEAR(c.y, d.y, 1e-6);
}

TEST(Horocycle, ClassicalHorocycle) {
  const SurfaceModel g;
  const HorocycleCurve c = traceHorocycle(g, {{0, 1}, kHalfPi}, 1.0);
  for (const auto& nd : c.nodes()) {
    EXPECT_NEAR(nd.point.y, 1.0, 1e-6);
    EXPECT_NEAR(nd.point.x, -nd.s, 1e-6);
    EXPECT_NEAR(nd.kappaMinus, -1.0, 1e-6);
    EXPECT_NEAR(nd.busemannResidual, 0.0, 1e-5);
  }
}

TEST(Horocycle, ConstantFieldHorocycle) {
  const SurfaceModel m(0.6);
  const HorocycleCurve c = traceHorocycle(m, {{0, 1}, 0.4}, 1.0);
  for (const auto& nd : c.nodes()) {
    EXPECT_NEAR(std::abs(nd.kappaMinus), 1.0, 1e-4);
    EXPECT_NEAR(nd.normalization, 1.0, 1e-6);
    EXPECT_NEAR(nd.busemannResidual, 0.0, 1e-5);
    EXPECT_FALSE(nd.flagged);
  }
}

TEST(Horocycle, PerturbedHorocycleInvariants) {
  const SurfaceModel m = perturbed();
  const HorocycleCurve c = traceHorocycle(m, {{0.1, 1.0}, 0.3}, 1.0);
  const double c1 = m.bounds().c1();
  for (const auto& nd : c.nodes()) {
    EXPECT_NEAR(nd.normalization, 1.0, 1e-6);
    EXPECT_GE(nd.speed, 1.0 - 1e-12);
    EXPECT_LE(nd.speed, c1);
    EXPECT_NEAR(nd.busemannResidual, 0.0, 1e-5);
    EXPECT_FALSE(nd.flagged) << nd.s << ' ' << nd.kappaMinus << ' ' << nd.kappaIdentity;
  }
}

TEST(Horocycle, TransportIdentityAndNorm) {
  const SurfaceModel m = perturbed();
  const HorocycleCurve c = traceHorocycle(m, {{0.1, 1.0}, 0.3}, 0.5);
  const HorocyclicTransport id = horocyclicTransport(c, 0.0, 2.0);
  EXPECT_EQ(id.zeta, 0.0);
  EXPECT_EQ(id.transport, 0.0);
  const HorocyclicTransport chi = horocyclicTransport(c, 0.5, 2.0);
  const TangentVector xi{chi.from, 0.3, -0.2};
  EXPECT_NEAR(metricNorm(m, chi.apply(m, xi)), metricNorm(m, xi), 1e-8);
}
