#include "magflow_cli/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

#include "magflow/parallel.hpp"
#include "magflow/spectrum.hpp"
#include "magflow/transfer.hpp"

namespace magflow::cli {

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceModel perturbed() {
  return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {{0.3, {-0.2, 0.9}, 2.0}});
}

SurfaceModel perturbedGeodesic() { return SurfaceModel(0.0, {{0.05, {0.3, 1.2}, 2.0}}, {}); }

SurfaceModel periodicPerturbed() {
  return SurfaceModel(0.6, {{0.01, {0.4, 1.1}, 1.0}}, {}).withPeriod(2.0);
}

const UnitVector kV{{0.1, 1.0}, 1.3};

class Sampler {
 public:
  explicit Sampler(unsigned seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  Point point() { return {uniform(-0.5, 0.5), uniform(0.7, 1.5)}; }
  UnitVector vector() { return {point(), uniform(-kPi, kPi)}; }

 private:
  std::mt19937 rng_;
};

class Recorder {
 public:
  Recorder(std::vector<SuiteRow>& rows, const std::function<void(const SuiteRow&)>& progress)
      : rows_(rows), progress_(progress) {}

  // pass when measured <= threshold
  void atMost(int c, const std::string& name, double measured, double threshold) {
    push({c, name, measured, threshold, measured <= threshold});
  }
  // pass when measured >= threshold
  void atLeast(int c, const std::string& name, double measured, double threshold) {
    push({c, name, measured, threshold, measured >= threshold});
  }

 private:
  void push(SuiteRow r) {
    if (!std::isfinite(r.measured)) r.pass = false;
    rows_.push_back(r);
    if (progress_) progress_(rows_.back());
  }
  std::vector<SuiteRow>& rows_;
  const std::function<void(const SuiteRow&)>& progress_;
};

// --- 1: constant-model closed forms ---------------------------------------------------

void closedForms(Recorder& rec, const SurfaceModel& m) {
  const double k = m.kappaBase(), lambda = std::sqrt(1.0 - k * k);
  const std::vector<UnitVector> vs{{{0.0, 1.0}, 1.0}, {{0.3, 1.4}, -2.0}, {{-0.5, 0.8}, 0.4}};
  double du = 0.0, dw = 0.0;
  for (const UnitVector& v : vs) {
    const StabilityData d = stabilityData(m, v, 1e-10);
    du = std::max(du, std::abs(d.uMinus + lambda));
    dw = std::max(dw, std::abs(d.wMinus + k / lambda));
  }
  rec.atMost(1, "uMinus = -sqrt(1 - kappa^2)", du, 1e-8);
  rec.atMost(1, "wMinus = -kappa / sqrt(1 - kappa^2)", dw, 1e-6);

  const HorocycleCurve c = traceHorocycle(m, vs[0], 1.0);
  double dk = 0.0;
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0})
    dk = std::max(dk, std::abs(std::abs(horocycleCurvature(c, s)) - 1.0));
  rec.atMost(1, "horocycle |kappa_-| = 1", dk, 1e-4);

  const StableTransferContext ctx(m, vs[0]);
  double dx = 0.0;
  for (double s : {-1.0, -0.5, 0.5, 1.0}) {
    const HorocycleNode& nd = c.node(s);
    dx = std::max(dx, std::abs(ctx({nd.point, nd.angle}).value - 1.0));
  }
  rec.atMost(1, "transfer on the horocycle = 1", dx, 1e-6);

  constexpr double kEll = 2.0;
  const CyclicQuotient q(m, kEll);
  const PeriodicOrbit o = findPeriodicOrbit(q);
  const LyapunovData l = periodicLyapunov(q, o);
  const double period = kEll * std::cosh(std::atanh(k));
  rec.atMost(1, "periodic T = ell cosh(artanh kappa)", std::abs(o.period - period), 1e-6);
  rec.atMost(1, "periodic lambda_- = -sqrt(1 - kappa^2)", std::abs(l.lambdaMinus + lambda), 1e-6);
  rec.atMost(1, "periodic multiplier = e^{-lambda T}",
             std::abs(l.multiplier - std::exp(-lambda * period)), 1e-6);
}

// --- 2, 3: Riccati data along random orbits ---------------------------------------------

struct OrbitProfiles {
  std::shared_ptr<Orbit> orbit;
  std::unique_ptr<RiccatiProfile> stable, unstable;
};

OrbitProfiles profiles(const SurfaceModel& m, const UnitVector& v, double t1) {
  OrbitProfiles p;
  p.orbit = std::make_shared<Orbit>(m, v, 1e-11);
  p.stable = std::make_unique<RiccatiProfile>(p.orbit, Branch::Stable, 0.0, t1, 1e-11);
  p.unstable = std::make_unique<RiccatiProfile>(p.orbit, Branch::Unstable, 0.0, t1, 1e-11);
  return p;
}

void symplectic(Recorder& rec) {
  const SurfaceModel m = perturbed();
  const ModelBounds& b = m.bounds();
  Sampler rng(2);
  std::vector<UnitVector> vs(20);
  for (UnitVector& v : vs) v = rng.vector();
  std::vector<double> residual(vs.size()), margin(vs.size());
  parallelFor(vs.size(), [&](std::size_t i) {
    const OrbitProfiles p = profiles(m, vs[i], 6.0);
    auto gap = [&](double t) { return p.unstable->u(t) - p.stable->u(t); };
    const double g0 = gap(0.0);
    double res = 0.0, mar = std::min(g0 - 2.0 * b.q1, 2.0 * b.q0 - g0);
    for (double t : {1.0, 3.0, 6.0}) {
      const double rhs = std::exp(p.stable->logY(t) + p.unstable->logY(t)) * gap(t);
      res = std::max(res, std::abs(g0 - rhs) / g0);
      mar = std::min({mar, gap(t) - 2.0 * b.q1, 2.0 * b.q0 - gap(t)});
    }
    residual[i] = res;
    margin[i] = mar;
  });
  rec.atMost(2, "symplectic identity, relative residual",
             *std::max_element(residual.begin(), residual.end()), 1e-6);
  rec.atLeast(2, "2 q1 <= u_+ - u_- <= 2 q0, worst margin",
              *std::min_element(margin.begin(), margin.end()), 0.0);
}

void jacobiBound(Recorder& rec) {
  const SurfaceModel m = perturbed();
  const double c1 = m.bounds().c1();
  Sampler rng(3);
  std::vector<UnitVector> vs(20);
  for (UnitVector& v : vs) v = rng.vector();
  std::vector<double> worst(vs.size());
  parallelFor(vs.size(), [&](std::size_t i) {
    auto orbit = std::make_shared<Orbit>(m, vs[i], 1e-11);
    const RiccatiProfile p(orbit, Branch::Stable, 0.0, 10.0, 1e-10);
    double r = 0.0;
    for (int k = 0; k <= 40; ++k) {
      const double t = 0.25 * k;
      const double y = std::exp(p.logY(t)), x = p.w(t) * y;
      const double dy = p.u(t) * y, dx = m.kappa(orbit->at(t).base) * y;
      r = std::max(r, (std::hypot(x, y) + std::hypot(dx, dy)) / (c1 * y));
    }
    worst[i] = r;
  });
  rec.atMost(3, "(|j| + |j'|) / (C1 y_-), max over t in [0, 10]",
             *std::max_element(worst.begin(), worst.end()), 1.0);
}

// --- 4: transfer --------------------------------------------------------------------------

void transfers(Recorder& rec) {
  const SurfaceModel m = perturbed();
  Sampler rng(4);
  struct Pair {
    UnitVector v, w;
  };
  std::vector<Pair> pairs(20);
  for (Pair& p : pairs) {
    p.v = rng.vector();
    p.w = {{p.v.base.x + rng.uniform(-0.4, 0.4), p.v.base.y * std::exp(rng.uniform(-0.3, 0.3))}, 0.0};
  }
  std::vector<double> recip(pairs.size());
  parallelFor(pairs.size(), [&](std::size_t i) {
    const StableTransferContext ctx(m, pairs[i].v);
    const UnitVector w = ctx.field().at(pairs[i].w.base);
    recip[i] = std::abs(ctx(w).value * stableTransfer(m, w, pairs[i].v).value - 1.0);
  });
  rec.atMost(4, "reciprocity X(v,v') X(v',v) = 1",
             *std::max_element(recip.begin(), recip.end()), 1e-6);

  const StableTransferContext base(m, kV);
  std::vector<UnitVector> ws;
  for (int i = 0; i < 6; ++i) ws.push_back(base.field().at(rng.point()));
  double cocycle = 0.0;
  for (int i = 0; i + 1 < 6; i += 2) {
    const double direct = base(ws[i + 1]).value;
    const double chained = base(ws[i]).value * stableTransfer(m, ws[i], ws[i + 1]).value;
    cocycle = std::max(cocycle, std::abs(direct - chained));
  }
  rec.atMost(4, "cocycle X(v,v'') = X(v,v') X(v',v'')", cocycle, 1e-5);

  double doubling = 0.0;
  for (const UnitVector& w : ws) {
    const TransferValue x = base(w);
    TransferOptions opt;
    opt.horizon = 2.0 * x.horizon;
    const TransferValue y = base(w, x.offset, opt);
    doubling = std::max(doubling, std::abs(y.value - x.value) / (x.error + y.error + 1e-12));
  }
  rec.atMost(4, "horizon doubling / error band", doubling, 1.0);
}

// --- 5: linearization contract ---------------------------------------------------------------

void linearizationContract(Recorder& rec) {
  const SurfaceModel m = perturbed();
  const Linearization lin(m, kV);
  const BusemannFunction bus(m, kV, 1e-10);
  Sampler rng(5);
  std::vector<Point> pts;
  for (int i = 0; i < 6; ++i) pts.push_back({rng.uniform(-0.4, 0.4), rng.uniform(0.8, 1.4)});
  double dl = 0.0, dp = 0.0;
  for (const Point& p : pts) {
    const LinearizationSample e = lin(p);
    dl = std::max(dl, std::abs(e.longitudinal - bus(p)));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const LinearizationSample e = lin(pts[i]);
    for (double t : {-2.0, -1.0, 1.0, 2.0}) {
      const LinearizationSample f = lin(stablePush(lin.transfer().field(), pts[i], t));
      dp = std::max({dp, std::abs(f.longitudinal - e.longitudinal - t),
                     std::abs(f.transverse - e.transverse)});
    }
  }
  rec.atMost(5, "<E_v(z), v> - B_v(z)", dl, 1e-5);
  rec.atMost(5, "push equivariance, t in [-2, 2]", dp, 1e-5);

  double df = 0.0;
  const SurfaceModel g = perturbedGeodesic();
  for (double t : {-1.0, 2.0}) df = std::max(df, linearizationEquivariance(m, kV, pts[3], t));
  df = std::max(df, linearizationEquivariance(g, kV, pts[4], 0.5));
  rec.atMost(5, "flow equivariance", df, 1e-4);

  double ratio = std::numeric_limits<double>::infinity();
  for (double s : {0.6, -0.4}) {
    const Point z = lin.horocycle().point(s);
    std::vector<double> f;
    for (int t = 0; t <= 6; ++t) f.push_back(lin.finiteTimeTransverse(z, t));
    for (int t = 2; t <= 6; ++t)
      ratio = std::min(ratio, std::abs(f[t - 1] - f[t - 2]) / std::abs(f[t] - f[t - 1]));
  }
  rec.atLeast(5, "finite-time Cauchy ratio per unit t", ratio, std::exp(m.bounds().q1) / 2.0);
}

// --- 6: derivative -----------------------------------------------------------------------------

double relativeFrobenius(const FrameMatrix& a, const FrameMatrix& b) {
  const double d = std::hypot(std::hypot(a.a11 - b.a11, a.a12 - b.a12), std::hypot(a.a21 - b.a21, a.a22 - b.a22));
  return d / std::hypot(std::hypot(a.a11, a.a12), std::hypot(a.a21, a.a22));
}

void derivativeIdentity(Recorder& rec) {
  const SurfaceModel g = perturbedGeodesic(), m = perturbed();
  const Linearization geo(g, kV), mag(m, kV);
  Sampler rng(6);
  std::vector<Point> pts(20);
  for (Point& p : pts) p = {rng.uniform(-0.4, 0.4), rng.uniform(0.8, 1.4)};
  std::vector<double> eg(pts.size()), em(pts.size());
  parallelFor(pts.size(), [&](std::size_t i) {
    const DerivativeReport a = geo.derivative(pts[i]);
    eg[i] = relativeFrobenius(a.diagonalForm, a.finiteDifference);
    em[i] = mag.derivative(pts[i]).relativeError;
  });
  rec.atMost(6, "finite differences vs extended transfer, geodesic field",
             *std::max_element(eg.begin(), eg.end()), 1e-3);
  rec.atMost(6, "finite differences vs transfer frame map, magnetic field",
             *std::max_element(em.begin(), em.end()), 1e-3);

  constexpr int kN = 50;
  const double x0 = -0.4, x1 = 0.4, y0 = 0.8, y1 = 1.4;
  const double hx = (x1 - x0) / (kN - 1), hy = (y1 - y0) / (kN - 1);
  std::vector<LinearizationSample> e(kN * kN);
  parallelFor(e.size(), [&](std::size_t k) {
    e[k] = mag({x0 + hx * static_cast<double>(k % kN), y0 + hy * static_cast<double>(k / kN)});
  });
  auto at = [&](int i, int j) { return e[static_cast<std::size_t>(j * kN + i)]; };
  double minDet = std::numeric_limits<double>::infinity();
  for (int j = 0; j < kN; ++j)
    for (int i = 0; i < kN; ++i) {
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, kN - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, kN - 1);
      const double dxl = (at(ir, j).longitudinal - at(il, j).longitudinal) / ((ir - il) * hx);
      const double dxt = (at(ir, j).transverse - at(il, j).transverse) / ((ir - il) * hx);
      const double dyl = (at(i, jr).longitudinal - at(i, jl).longitudinal) / ((jr - jl) * hy);
      const double dyt = (at(i, jr).transverse - at(i, jl).transverse) / ((jr - jl) * hy);
      // Orientation of (x, y) -> (E_long, E_trans), signed against the frame (v, N(v)).
      minDet = std::min(minDet, dxl * dyt - dyl * dxt);
    }
  rec.atLeast(6, "Jacobian determinant on a 50x50 grid, minimum", minDet, 0.0);

  double minImage = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < e.size(); ++a)
    for (std::size_t b = a + 1; b < e.size(); ++b) {
      const double src = std::hypot(e[a].p.x - e[b].p.x, e[a].p.y - e[b].p.y);
      if (src < 1e-2) continue;
      minImage = std::min(minImage, std::hypot(e[a].longitudinal - e[b].longitudinal,
                                               e[a].transverse - e[b].transverse));
    }
  rec.atLeast(6, "injectivity, minimum image separation", minImage, 1e-6);
}

// --- 7, 8: spectrum ---------------------------------------------------------------------------

void scaling(Recorder& rec, const SurfaceModel& constant) {
  const CyclicQuotient qc(constant, 2.0);
  rec.atMost(7, "scaling identity, constant quotient",
             scalingIdentityCheck(qc, findPeriodicOrbit(qc), 20).maxResidual, 1e-5);
  const SurfaceModel p = periodicPerturbed();
  const CyclicQuotient qp(p, 2.0);
  rec.atMost(7, "scaling identity, periodic perturbed quotient",
             scalingIdentityCheck(qp, findPeriodicOrbit(qp), 20).maxResidual, 1e-4);
}

void lyapunovConstancy(Recorder& rec) {
  constexpr double kT = 20.0;
  double excess = -std::numeric_limits<double>::infinity();
  for (const SurfaceModel& m : {perturbed(), perturbedGeodesic()}) {
    const HorocycleCurve c = traceHorocycle(m, kV, 1.0);
    for (double s : {-1.0, 0.5, 1.0}) {
      const HorocycleNode& nd = c.node(s);
      const LyapunovPair p = lyapunovConstancyWCS(m, kV, {nd.point, nd.angle}, kT);
      excess = std::max(excess, p.gap - std::abs(p.logTransfer) / kT);
    }
  }
  rec.atMost(8, "exponent gap - |ln X| / T at T = 20", excess, 1e-6);
}

// --- 9: horocyclic transport -------------------------------------------------------------------

void transportDecay(Recorder& rec) {
  const SurfaceModel m = perturbed();
  const ModelBounds& b = m.bounds();
  const HorocycleCurve c = traceHorocycle(m, kV, 0.5);
  const double k = (2.0 * b.k0 * b.k0 + b.gradKappaSup) * b.c1();
  double worst = 0.0;
  for (double s : {0.5, -0.5}) {
    const HorocyclicTransportField f(c, s, 64, 6.0);
    std::vector<double> zeta;
    for (int i = 0; i <= 12; ++i) zeta.push_back(f.at(0.5 * i).zeta);
    for (int i = 0; i <= 12; ++i)
      for (int j = i + 1; j <= 12; ++j) {
        const double bound =
            2.0 * k * std::abs(s) * (std::exp(-b.q1 * 0.5 * i) - std::exp(-b.q1 * 0.5 * j)) / b.q1;
        worst = std::max(worst, std::abs(wrapAngle(zeta[i] - zeta[j])) / bound);
      }
  }
  rec.atMost(9, "transport discrepancy / decay bound", worst, 1.0);
}

}  // namespace

std::vector<SuiteRow> runSuite(const SuiteOptions& opt,
                               const std::function<void(const SuiteRow&)>& progress) {
  const SurfaceModel constant = opt.constantModel ? *opt.constantModel : SurfaceModel(0.6);
  if (!constant.isConstant()) throw ConfigError("closed-form checks need a constant-field model");
  auto wanted = [&](int c) {
    return opt.criteria.empty() ||
           std::find(opt.criteria.begin(), opt.criteria.end(), c) != opt.criteria.end();
  };
  std::vector<SuiteRow> rows;
  Recorder rec(rows, progress);
  if (wanted(1)) closedForms(rec, constant);
  if (wanted(2)) symplectic(rec);
  if (wanted(3)) jacobiBound(rec);
  if (wanted(4)) transfers(rec);
  if (wanted(5)) linearizationContract(rec);
  if (wanted(6)) derivativeIdentity(rec);
  if (wanted(7)) scaling(rec, constant);
  if (wanted(8)) lyapunovConstancy(rec);
  if (wanted(9)) transportDecay(rec);
  return rows;
}

bool allPass(const std::vector<SuiteRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const SuiteRow& r) { return r.pass; });
}

std::string suiteCsv(const std::vector<SuiteRow>& rows) {
  std::string out = "criterion,check,measured,threshold,pass\n";
  for (const SuiteRow& r : rows)
    out += std::to_string(r.criterion) + ",\"" + r.check + "\"," + formatNumber(r.measured) + "," +
           formatNumber(r.threshold) + "," + (r.pass ? "1" : "0") + "\n";
  return out;
}

Json suiteJson(const std::vector<SuiteRow>& rows) {
  Json arr = Json::array();
  for (const SuiteRow& r : rows)
    arr.push_back({{"criterion", r.criterion}, {"check", r.check}, {"measured", r.measured},
                   {"threshold", r.threshold}, {"pass", r.pass}});
  return Json{{"pass", allPass(rows)}, {"rows", std::move(arr)}};
}

std::string suiteText(const std::vector<SuiteRow>& rows) {
  std::string out;
  char buf[256];
  for (const SuiteRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-4s %2d  %-58s %12.4e  %10.3e\n", r.pass ? "PASS" : "FAIL",
                  r.criterion, r.check.c_str(), r.measured, r.threshold);
    out += buf;
  }
  return out;
}

}  // namespace magflow::cli
