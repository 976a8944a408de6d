#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "magflow/geometry.hpp"

using namespace magflow;

namespace {

SurfaceModel perturbed(double eps) {
  return SurfaceModel(0.0, {{eps, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

// Flat Laplacian of rho by a five-point stencil; rho from the model log factor.
double fdCurvature(const SurfaceModel& m, Point p, double h) {
  auto rho = [&](double x, double y) { return m.fields({x, y}).rho; };
  const double lap = (rho(p.x + h, p.y) + rho(p.x - h, p.y) + rho(p.x, p.y + h) +
                      rho(p.x, p.y - h) - 4.0 * rho(p.x, p.y)) /
                     (h * h);
  return -std::exp(-2.0 * rho(p.x, p.y)) * lap;
}

// Geodesic arc of the hyperbolic metric from p to q, sampled by its circle.
std::vector<Point> hyperbolicArc(Point p, Point q, int n) {
  const double xc = ((q.x * q.x + q.y * q.y) - (p.x * p.x + p.y * p.y)) / (2.0 * (q.x - p.x));
  const double r = std::hypot(p.x - xc, p.y);
  const double a0 = std::atan2(p.y, p.x - xc), a1 = std::atan2(q.y, q.x - xc);
  std::vector<Point> out;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * i / n;
    out.push_back({xc + r * std::cos(a), r * std::sin(a)});
  }
  return out;
}

// Interior angle at b between the arcs to a and c.
double vertexAngle(Point a, Point b, Point c) {
  auto tangent = [](Point from, Point to) {
    const double xc =
        ((to.x * to.x + to.y * to.y) - (from.x * from.x + from.y * from.y)) / (2.0 * (to.x - from.x));
    double tx = -from.y, ty = from.x - xc;
    if (tx * (to.x - from.x) + ty * (to.y - from.y) < 0) tx = -tx, ty = -ty;
    return std::atan2(ty, tx);
  };
  return std::abs(wrapAngle(tangent(b, a) - tangent(b, c)));
}

}  // namespace

TEST(Geometry, HyperbolicCurvatureIsMinusOne) {
  SurfaceModel m;
  EXPECT_DOUBLE_EQ(gaussCurvature(m, {0, 1}), -1.0);
  EXPECT_NEAR(gaussCurvature(m, {3, 0.2}), -1.0, 1e-15);
}

TEST(Geometry, CurvatureMatchesFiniteDifferenceLaplacian) {
  const SurfaceModel m = perturbed(0.05);
  for (Point p : {Point{0.3, 1.2}, Point{0.9, 1.0}, Point{-0.4, 2.5}}) {
    EXPECT_NEAR(gaussCurvature(m, p), fdCurvature(m, p, 1e-4), 1e-6);
  }
}

TEST(Geometry, CurvatureOutsideDomainThrows) {
  SurfaceModel m;
  EXPECT_THROW(gaussCurvature(m, {0, 0}), DomainError);
  EXPECT_THROW(gaussCurvature(m, {0, -1}), DomainError);
}

TEST(Geometry, BoundsArePinched) {
  const SurfaceModel m = perturbed(0.05);
  const ModelBounds& b = m.bounds();
  EXPECT_GT(b.k1, 0.0);
  EXPECT_GT(b.q1, 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(-4, 4), uy(-2.5, 2.5);
  for (int i = 0; i < 2000; ++i) {
    const Point p{ux(rng), std::exp(uy(rng))};
    const double k = m.gaussCurvature(p);
    EXPECT_LE(k, -b.k1 * b.k1);
    EXPECT_GE(k, -b.k0 * b.k0);
  }
}

TEST(Geometry, StrongBumpIsRejected) {
  EXPECT_THROW(SurfaceModel(0.0, {{2.0, {0, 1}, 0.5}}, {}), ConfigError);
  EXPECT_THROW(SurfaceModel(1.2), ConfigError);
}

TEST(Geometry, RotateN) {
  SurfaceModel m;
  const TangentVector r = rotateN(m, {{0, 1}, 1, 0});
  EXPECT_DOUBLE_EQ(r.cx, 0.0);
  EXPECT_DOUBLE_EQ(r.cy, 1.0);
  const SurfaceModel pm = perturbed(0.05);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    const TangentVector xi{{g(rng), std::exp(g(rng))}, g(rng), g(rng)};
    const TangentVector nn = rotateN(pm, rotateN(pm, xi));
    EXPECT_DOUBLE_EQ(nn.cx, -xi.cx);
    EXPECT_DOUBLE_EQ(nn.cy, -xi.cy);
    EXPECT_NEAR(metricInner(pm, rotateN(pm, xi), xi), 0.0, 1e-14);
    EXPECT_NEAR(metricNorm(pm, rotateN(pm, xi)), metricNorm(pm, xi), 1e-14);
  }
}

TEST(Geometry, TransportAlongConstantCurveIsIdentity) {
  const SurfaceModel m = perturbed(0.05);
  const std::vector<Point> path{{0.2, 1.1}, {0.2, 1.1}};
  const TangentVector xi{{0.2, 1.1}, 0.3, -0.7};
  const TangentVector out = parallelTransport(m, path, xi);
  EXPECT_DOUBLE_EQ(out.cx, xi.cx);
  EXPECT_DOUBLE_EQ(out.cy, xi.cy);
}

TEST(Geometry, HolonomyOfGeodesicTriangleIsMinusArea) {
  SurfaceModel m;
  const Point a{0.0, 1.0}, b{0.05, 1.02}, c{-0.02, 1.06};
  const double area = std::numbers::pi - vertexAngle(c, a, b) - vertexAngle(a, b, c) -
                      vertexAngle(b, c, a);
  std::vector<Point> loop;
  for (auto [p, q] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
    auto arc = hyperbolicArc(p, q, 400);
    loop.insert(loop.end(), arc.begin() + (loop.empty() ? 0 : 1), arc.end());
  }
  ASSERT_GT(area, 0.0);
  EXPECT_NEAR(transportRotation(m, loop), -area, 1e-4 * area);
}

TEST(Geometry, TransportPreservesNormAndInverts) {
  const SurfaceModel m = perturbed(0.05);
  std::vector<Point> path;
  for (int i = 0; i <= 500; ++i) {
    const double s = i / 500.0;
    path.push_back({-1.0 + 2.0 * s, 1.0 + 0.8 * std::sin(3.0 * s)});
  }
  const TangentVector xi{path.front(), 0.4, 0.9};
  const TangentVector out = parallelTransport(m, path, xi);
  EXPECT_NEAR(metricNorm(m, out), metricNorm(m, xi), 1e-8);
  std::vector<Point> back(path.rbegin(), path.rend());
  const TangentVector ret = parallelTransport(m, back, out);
  EXPECT_NEAR(ret.cx, xi.cx, 1e-8);
  EXPECT_NEAR(ret.cy, xi.cy, 1e-8);
}

TEST(Geometry, Distance) {
  SurfaceModel m;
  EXPECT_NEAR(distance(m, {0, 1}, {0, std::exp(1.0)}), 1.0, 1e-15);
  const SurfaceModel pm = perturbed(0.05);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 0.5);
  for (int i = 0; i < 10; ++i) {
    const Point p{g(rng), std::exp(g(rng))}, q{g(rng), std::exp(g(rng))};
    EXPECT_NEAR(distance(pm, p, q), distance(pm, q, p), 1e-8);
  }
}

TEST(Geometry, ZeroAmplitudeDistanceMatchesClosedForm) {
  const SurfaceModel zero(0.0, {{0.0, {0.3, 1.2}, 2.0}}, {});
  const Point p{-0.3, 0.8}, q{0.7, 1.9};
  EXPECT_NEAR(distance(zero, p, q), hyperbolicDistance(p, q), 1e-6);
  // Numeric shooting through a vanishing bump must agree as well.
  const SurfaceModel tiny(0.0, {{1e-12, {0.3, 1.2}, 2.0}}, {});
  EXPECT_NEAR(distance(tiny, p, q), hyperbolicDistance(p, q), 1e-6);
}

TEST(Geometry, GeodesicInverseHitsTarget) {
  const SurfaceModel pm = perturbed(0.05);
  const Point p{-0.5, 0.7}, q{1.1, 2.3};
  const GeodesicChord g = geodesicInverse(pm, p, q);
  const UnitVector e = geodesicEndpoint(pm, {p, g.angle}, g.length);
  EXPECT_NEAR(e.base.x, q.x, 1e-9);
  EXPECT_NEAR(e.base.y, q.y, 1e-9);
}

TEST(Geometry, MobiusActsIsometrically) {
  const Mobius g{2.0, 1.0, 0.5, 0.75};
  const Point p{0.3, 0.7}, q{-1.0, 2.0};
  EXPECT_NEAR(hyperbolicDistance(g.apply(p), g.apply(q)), hyperbolicDistance(p, q), 1e-12);
  const Mobius id = g.compose(g.inverse());
  const Point r = id.apply(p);
  EXPECT_NEAR(r.x, p.x, 1e-14);
  EXPECT_NEAR(r.y, p.y, 1e-14);
}

TEST(Geometry, PeriodicFieldsAreInvariant) {
  const SurfaceModel m = SurfaceModel(0.6, {{0.01, {0.4, 1.1}, 1.0}}, {}).withPeriod(2.0);
  const double f = std::exp(2.0);
  for (Point p : {Point{0.4, 1.1}, Point{0.1, 0.9}, Point{-0.3, 1.4}}) {
    const LocalFields a = m.fields(p), b = m.fields({f * p.x, f * p.y});
    EXPECT_NEAR(a.curvature, b.curvature, 1e-10);
    EXPECT_NEAR(a.rho - std::log(1.0 / p.y), b.rho - std::log(1.0 / (f * p.y)), 1e-10);
    EXPECT_NEAR(a.kappa, b.kappa, 1e-10);
  }
}
