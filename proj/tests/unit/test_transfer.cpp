#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "magflow/transfer.hpp"

using namespace magflow;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

SurfaceModel perturbed() {
  return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

SurfaceModel perturbedGeodesic() { return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {}); }

const UnitVector kV{{0.1, 1.0}, 1.3};

}  // namespace

TEST(Transfer, IdentityPairIsOne) {
  const SurfaceModel m = perturbed();
  EXPECT_EQ(stableTransfer(m, kV, kV).value, 1.0);
  EXPECT_EQ(unstableTransfer(m, kV, kV).value, 1.0);
}

TEST(Transfer, ConstantModelClosedForm) {
  const SurfaceModel m(0.6);
  const UnitVector v{{0, 1}, 1.0};
  const StableTransferContext ctx(m, v);
  // On the horocycle of v the decay rates agree; off it X = 1 / y_-(v, r) = e^{0.8 r}.
  const HorocycleCurve c = traceHorocycle(m, v, 1.0);
  for (double s : {-1.0, 0.5, 1.0}) {
    const HorocycleNode& nd = c.node(s);
    EXPECT_NEAR(ctx({nd.point, nd.angle}).value, 1.0, 1e-6) << s;
  }
  const double lambda = std::sqrt(1.0 - 0.36);
  for (Point p : {Point{0.4, 1.3}, Point{-0.5, 0.7}}) {
    const TransferValue x = ctx(ctx.field().at(p));
    EXPECT_NEAR(x.value, std::exp(lambda * x.offset), 1e-6);
    EXPECT_GT(std::abs(x.offset), 0.05);
  }
}

TEST(Transfer, ReciprocityAndCocycle) {
  const SurfaceModel m = perturbed();
  const StableTransferContext ctx(m, kV);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dx(-0.5, 0.5), dy(0.7, 1.5);
  std::vector<UnitVector> w;
  for (int i = 0; i < 4; ++i) w.push_back(ctx.field().at({dx(rng), dy(rng)}));
  for (const UnitVector& a : w) {
    const double forward = stableTransfer(m, kV, a).value;
    const double back = stableTransfer(m, a, kV).value;
    EXPECT_NEAR(forward * back, 1.0, 1e-6);
  }
  const double xac = stableTransfer(m, w[0], w[2]).value;
  const double xab = stableTransfer(m, w[0], w[1]).value;
  const double xbc = stableTransfer(m, w[1], w[2]).value;
  EXPECT_NEAR(xac, xab * xbc, 1e-5);
}

TEST(Transfer, HorizonDoublingWithinErrorBand) {
  const SurfaceModel m = perturbed();
  const StableTransferContext ctx(m, kV);
  const UnitVector w = ctx.field().at({-0.3, 0.9});
  const TransferValue x = ctx(w);
  EXPECT_FALSE(x.flagged);
  EXPECT_GT(x.value, 0.0);
  TransferOptions opt;
  opt.horizon = 2.0 * x.horizon;
  const TransferValue y = ctx(w, x.offset, opt);
  EXPECT_LE(std::abs(y.value - x.value), x.error + y.error + 1e-12);
  // The band shrinks with the horizon.
  opt.horizon = 1.0;
  const TransferValue early = ctx(w, x.offset, opt);
  EXPECT_GT(early.error, x.error);
}

TEST(Transfer, PeriodicModelConverges) {
  const SurfaceModel m = SurfaceModel(0.6, {{0.01, {0.4, 1.1}, 1.0}}, {}).withPeriod(2.0);
  const UnitVector v{{0.05, 1.0}, 1.0};
  const StableTransferContext ctx(m, v);
  const UnitVector w = ctx.field().at({0.3, 1.1});
  const TransferValue x = ctx(w);
  EXPECT_FALSE(x.flagged);
  EXPECT_NEAR(x.value * stableTransfer(m, w, v).value, 1.0, 1e-6);
}

TEST(Transfer, RejectsNonAsymptoticPairs) {
  const SurfaceModel m = perturbed();
  EXPECT_THROW(stableTransfer(m, kV, {{0.4, 1.1}, -1.0}), PreconditionError);
}

TEST(Transfer, ExtendedStableTransfer) {
  const SurfaceModel m = perturbed();
  const UnitVector w = asymptoticVector(m, {0.35, 1.2}, kV);
  const double x = stableTransfer(m, kV, w).value;
  const TangentVector t0 = toTangent(m, kV), n0 = rotateN(m, t0);
  const TangentVector tw = toTangent(m, w), nw = rotateN(m, tw);
  const TangentVector a = extendedStableTransfer(m, kV, w, x, tw);
  EXPECT_NEAR(a.cx, t0.cx, 1e-12);
  EXPECT_NEAR(a.cy, t0.cy, 1e-12);
  const TangentVector b = extendedStableTransfer(m, kV, w, x, nw);
  EXPECT_NEAR(b.cx, x * n0.cx, 1e-12);
  EXPECT_NEAR(b.cy, x * n0.cy, 1e-12);
  const TangentVector mix{w.base, 2.0 * tw.cx - 0.5 * nw.cx, 2.0 * tw.cy - 0.5 * nw.cy};
  const TangentVector c = extendedStableTransfer(m, kV, w, x, mix);
  EXPECT_NEAR(c.cx, 2.0 * a.cx - 0.5 * b.cx, 1e-10);
  EXPECT_NEAR(c.cy, 2.0 * a.cy - 0.5 * b.cy, 1e-10);
}

TEST(Transfer, UnstableTransfer) {
  const SurfaceModel c(0.6);
  const UnitVector v{{0, 1}, 1.0};
  const HorocycleCurve h = traceHorocycle(c, v, 0.5);
  const HorocycleNode& nd = h.node(0.5);
  EXPECT_NEAR(unstableTransfer(c, v, {nd.point, nd.angle}).value, 1.0, 1e-6);

  const SurfaceModel m = perturbed();
  const UnitVector w = asymptoticVector(m, {-0.3, 1.3}, kV);
  const TransferValue u = unstableTransfer(m, kV, w);
  EXPECT_FALSE(u.flagged);
  const double band = std::max(1e-8, std::exp(-m.bounds().q1 * 10.0)) * 10.0;
  EXPECT_LE(std::abs(u.value - u.crossCheck), band * u.value);
}

// --- linearization ------------------------------------------------------------------

TEST(Linearization, HyperbolicHorocyclicCoordinates) {
  const SurfaceModel m;
  const Linearization lin(m, {{0, 1}, kHalfPi});
  for (Point p : {Point{0.3, 1.5}, Point{-0.5, 0.7}, Point{1.2, 2.0}}) {
    const LinearizationSample e = lin(p);
    EXPECT_NEAR(e.longitudinal, std::log(p.y), 1e-8);
    // N(v) points towards negative x.
    EXPECT_NEAR(e.transverse, -p.x, 1e-8);
  }
}

TEST(Linearization, ConstantModelHorocycleAndOrbit) {
  const SurfaceModel m(0.6);
  const UnitVector v{{0.1, 1.0}, 1.0};
  const Linearization lin(m, v);
  for (double s : {-1.2, 0.5, 1.7}) {
    const LinearizationSample e = lin(lin.horocycle().point(s));
    EXPECT_NEAR(e.longitudinal, 0.0, 1e-7);
    EXPECT_NEAR(e.transverse, s, 1e-6);
  }
  for (double t : {-1.0, 1.5}) {
    const LinearizationSample e = lin(flow(m, v, t).base);
    EXPECT_NEAR(e.longitudinal, t, 1e-7);
    EXPECT_NEAR(e.transverse, 0.0, 1e-7);
  }
}

TEST(Linearization, BusemannAndPushEquivariance) {
  const SurfaceModel m = perturbed();
  const Linearization lin(m, kV);
  const BusemannFunction b(m, kV, 1e-10);
  for (Point z : {Point{0.3, 1.4}, Point{-0.4, 0.8}}) {
    const LinearizationSample e = lin(z);
    EXPECT_NEAR(e.longitudinal, b(z), 1e-5);
    for (double t : {-2.0, 0.7, 2.0}) {
      const LinearizationSample f = lin(stablePush(lin.transfer().field(), z, t));
      EXPECT_NEAR(f.longitudinal, e.longitudinal + t, 1e-5);
      EXPECT_NEAR(f.transverse, e.transverse, 1e-5);
    }
  }
}

TEST(Linearization, FlowEquivariance) {
  EXPECT_EQ(linearizationEquivariance(perturbed(), kV, {0.4, 1.3}, 0.0), 0.0);
  EXPECT_LT(linearizationEquivariance(SurfaceModel(0.6), kV, {0.4, 1.3}, 1.0), 1e-5);
  for (double t : {0.5, 2.0})
    EXPECT_LT(linearizationEquivariance(perturbed(), kV, {-0.3, 1.2}, t), 1e-4) << t;
}

TEST(Linearization, DerivativeAtBaseIsIdentityForGeodesics) {
  const DerivativeReport d = linearizationDerivative(perturbedGeodesic(), kV, kV.base);
  EXPECT_EQ(d.analytic.a11, 1.0);
  EXPECT_NEAR(d.analytic.a12, 0.0, 1e-12);
  EXPECT_EQ(d.analytic.a22, 1.0);
  EXPECT_LT(d.relativeError, 1e-3);
}

TEST(Linearization, DerivativeConstantModelClosedForm) {
  const SurfaceModel m(0.6);
  const Linearization lin(m, kV);
  const Point p{0.4, 1.3};
  const DerivativeReport d = lin.derivative(p);
  const double r = lin(p).longitudinal;
  // w_- = -kappa / lambda = -0.75 and X = e^{0.8 r}.
  EXPECT_NEAR(d.finiteDifference.a11, 1.0, 1e-6);
  EXPECT_NEAR(d.finiteDifference.a12, 0.75, 1e-6);
  EXPECT_NEAR(d.finiteDifference.a21, 0.0, 1e-6);
  EXPECT_NEAR(d.finiteDifference.a22, std::exp(0.8 * r), 1e-6);
}

TEST(Linearization, DerivativeMatchesTransfer) {
  const SurfaceModel g = perturbedGeodesic(), m = perturbed();
  const Linearization geo(g, kV);
  for (Point p : {Point{0.4, 1.3}, Point{-0.3, 0.9}}) {
    const DerivativeReport d = geo.derivative(p);
    EXPECT_LT(d.relativeError, 1e-3);
    EXPECT_NEAR(d.diagonalForm.a22, d.finiteDifference.a22, 1e-3 * d.diagonalForm.a22);
    EXPECT_NEAR(d.finiteDifference.a12, 0.0, 1e-3);
  }
  const Linearization mag(m, kV);
  const DerivativeReport d = mag.derivative({0.2, 1.2});
  EXPECT_LT(d.relativeError, 1e-3);
  EXPECT_NEAR(d.analytic.det(), d.transfer, 1e-12);
  EXPECT_GT(d.finiteDifference.det(), 0.0);
}

TEST(Linearization, FiniteTimeExpressionConverges) {
  const SurfaceModel m = perturbed();
  const Linearization lin(m, kV);
  const double s = 0.6;
  const Point z = lin.horocycle().point(s);
  std::vector<double> f;
  for (int t = 0; t <= 6; ++t) f.push_back(lin.finiteTimeTransverse(z, t));
  const double factor = std::exp(m.bounds().q1) / 2.0;
  for (int t = 2; t <= 6; ++t) {
    const double d1 = std::abs(f[t - 1] - f[t - 2]), d2 = std::abs(f[t] - f[t - 1]);
    EXPECT_GE(d1 / d2, factor) << t;
  }
  EXPECT_NEAR(f.back(), lin.transverseAt(s), 1e-4);
}

TEST(Linearization, MatchComparator) {
  const std::vector<Point> grid{{-0.3, 0.8}, {0.0, 1.25}, {0.3, 1.0}};
  const SurfaceModel m = perturbed();
  const auto id = [](Point p) { return p; };
  EXPECT_LT(linearizationMatch(m, m, id, kV, kV, grid).supResidual, 1e-6);

  const Mobius g{2.0, 1.0, 1.0, 1.0};
  const SurfaceModel pushed = m.pushforward(g);
  const MatchReport iso = linearizationMatch(m, pushed, [&](Point p) { return g.apply(p); }, kV,
                                             g.apply(kV), grid);
  EXPECT_LT(iso.supResidual, 1e-5);

  const MatchReport diff =
      linearizationMatch(SurfaceModel(0.0), SurfaceModel(0.1), id, kV, kV, grid);
  EXPECT_GT(diff.supResidual, 1e-2);
}
