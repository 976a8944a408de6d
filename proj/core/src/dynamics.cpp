#include "magflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace magflow {

double jacobiEndomorphism(const SurfaceModel& model, const UnitVector& v) {
  requireDomain(v.base);
  const LocalFields f = model.fields(v.base);
  const double gradN = f.invFactor * (-std::sin(v.angle) * f.kappaX + std::cos(v.angle) * f.kappaY);
  return f.curvature + f.kappa * f.kappa - gradN;
}

// --- Orbit --------------------------------------------------------------------

Orbit::Orbit(const SurfaceModel& model, const UnitVector& v, double tol)
    : model_(&model), v_(v), tol_(tol) {
  requireDomain(v.base);
}

double Orbit::lower() const { return backward_.empty() ? 0.0 : backward_.back().endTime(); }
double Orbit::upper() const { return forward_.empty() ? 0.0 : forward_.back().endTime(); }

bool Orbit::extendTo(double t) {
  const bool fwd = t > 0.0;
  auto& pieces = fwd ? forward_ : backward_;
  bool& exited = fwd ? exitedForward_ : exitedBackward_;
  const double end = fwd ? upper() : lower();
  if (fwd ? t <= end : t >= end) return true;
  if (exited) return false;
  const detail::FlowState y0 = pieces.empty() ? detail::stateOf(v_) : pieces.back().final();
  auto sol = integrateDense<3>(detail::FlowRhs{model_, 1.0}, end, y0, t,
                               detail::flowOptions(tol_), detail::FlowScale{},
                               detail::InsideChart{});
  if (sol.status() == IntegrationStatus::Stopped) exited = true;
  if (!sol.steps().empty()) pieces.push_back(std::move(sol));
  return !exited;
}

detail::FlowState Orbit::stateAt(double t) const {
  if (!covers(t)) throw DomainError("orbit time outside the integrated span");
  const auto& pieces = t >= 0.0 ? forward_ : backward_;
  if (pieces.empty() || t == 0.0) return detail::stateOf(v_);
  // Pieces are contiguous and ordered away from 0.
  auto it = std::find_if(pieces.begin(), pieces.end(),
                         [&](const DenseSolution<3>& p) { return p.covers(t); });
  if (it == pieces.end()) it = std::prev(pieces.end());
  return (*it)(t);
}

UnitVector Orbit::at(double t) const { return detail::vectorOf(stateAt(t)); }

std::vector<OrbitNode> Orbit::nodes() const {
  std::vector<std::pair<double, detail::FlowState>> raw{{0.0, detail::stateOf(v_)}};
  for (const auto* pieces : {&forward_, &backward_}) {
    for (const auto& p : *pieces) {
      for (const auto& s : p.steps()) raw.emplace_back(s.t, s.rcont[0]);
      raw.emplace_back(p.endTime(), p.final());
    }
  }
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<OrbitNode> out;
  for (const auto& [t, s] : raw) {
    if (!out.empty() && out.back().t == t) continue;
    const UnitVector v = detail::vectorOf(s);
    out.push_back({t, v, model_->kappa(v.base), jacobiEndomorphism(*model_, v)});
  }
  return out;
}

Orbit integrateFlow(const SurfaceModel& model, const UnitVector& v, double ta, double tb,
                    double tol) {
  if (ta > 0.0 || tb < 0.0) throw ConfigError("time span must contain 0");
  Orbit orbit(model, v, tol);
  orbit.extendTo(tb);
  orbit.extendTo(ta);
  return orbit;
}

UnitVector flow(const SurfaceModel& model, const UnitVector& v, double t, double tol) {
  Orbit orbit(model, v, tol);
  if (!orbit.extendTo(t)) throw DomainError("orbit left the chart");
  return orbit.at(t);
}

double curveGeodesicCurvature(const SurfaceModel& model, Point a, Point b, Point c) {
  // Circle through the three samples; exact for orbits that are Euclidean circles.
  const double abx = b.x - a.x, aby = b.y - a.y, acx = c.x - a.x, acy = c.y - a.y;
  const double cross = abx * acy - aby * acx;
  const double lab = std::hypot(abx, aby), lac = std::hypot(acx, acy);
  const double lbc = std::hypot(c.x - b.x, c.y - b.y);
  const double kFlat = 2.0 * cross / (lab * lac * lbc);
  // Left unit normal at b: perpendicular to the circle tangent at b.
  double nx, ny;
  if (std::abs(kFlat) < 1e-300) {
    nx = -acy / lac;
    ny = acx / lac;
  } else {
    const double d = 2.0 * cross;
    const double ab2 = abx * abx + aby * aby, ac2 = acx * acx + acy * acy;
    const double ox = a.x + (acy * ab2 - aby * ac2) / d;
    const double oy = a.y + (abx * ac2 - acx * ab2) / d;
    const double r = std::hypot(ox - b.x, oy - b.y);
    const double sgn = kFlat > 0.0 ? 1.0 : -1.0;
    nx = sgn * (ox - b.x) / r;
    ny = sgn * (oy - b.y) / r;
  }
  const LocalFields f = model.fields(b);
  return f.invFactor * (kFlat - f.rhoX * nx - f.rhoY * ny);
}

// --- Jacobi fields ------------------------------------------------------------

double wronskian(const JacobiComponents& j1, const JacobiComponents& j2) {
  return j1.y * j2.yPrime - j2.y * j1.yPrime;
}

namespace {

using JState = State<6>;

struct JacobiRhs {
  const SurfaceModel* model;
  void operator()(double t, const JState& s, JState& d) const {
    detail::FlowState fs{s[0], s[1], s[2]}, fd;
    detail::FlowRhs{model, 1.0}(t, fs, fd);
    const UnitVector v = detail::vectorOf(fs);
    const double q = jacobiEndomorphism(*model, v);
    d[0] = fd[0];
    d[1] = fd[1];
    d[2] = fd[2];
    d[3] = model->kappa(v.base) * s[4];
    d[4] = s[5];
    d[5] = -q * s[4];
  }
};

struct JacobiScale {
  void operator()(const JState& s, JState& sc) const {
    sc[0] = std::exp(s[1]);
    sc[1] = sc[2] = 1.0;
    const double m = std::max({std::abs(s[3]), std::abs(s[4]), std::abs(s[5])});
    sc[3] = sc[4] = sc[5] = m;
  }
};

DenseSolution<6> jacobiPiece(const SurfaceModel& model, const JState& y0, double t1, double tol) {
  IntegratorOptions o = detail::flowOptions(tol);
  o.atol = 1e-300;
  return integrateDense<6>(JacobiRhs{&model}, 0.0, y0, t1, o, JacobiScale{},
                           [](double, const JState&) { return true; });
}

}  // namespace

const DenseSolution<6>& JacobiSolution::piece(double t) const {
  if (t < lower() - 1e-12 || t > upper() + 1e-12)
    throw DomainError("Jacobi time outside the integrated span");
  return t >= 0.0 ? forward_ : backward_;
}

JacobiComponents JacobiSolution::at(double t) const {
  const JState s = piece(t)(t);
  return {s[3], s[4], s[5]};
}

UnitVector JacobiSolution::vectorAt(double t) const {
  const JState s = piece(t)(t);
  return detail::vectorOf({s[0], s[1], s[2]});
}

JacobiSolution evolveJacobi(const Orbit& orbit, const JacobiComponents& init) {
  const detail::FlowState f = detail::stateOf(orbit.initial());
  const JState y0{f[0], f[1], f[2], init.x, init.y, init.yPrime};
  return JacobiSolution(jacobiPiece(orbit.model(), y0, orbit.upper(), orbit.tol()),
                        jacobiPiece(orbit.model(), y0, orbit.lower(), orbit.tol()));
}

// --- Riccati ------------------------------------------------------------------

double riccatiHorizon(const ModelBounds& b, double tol) {
  return std::log(1.0 / tol) / (2.0 * b.q1) + 5.0 / b.q1;
}

double tangentialHorizon(const ModelBounds& b, double tol) {
  if (b.kappaSup == 0.0) return 0.0;
  return std::max(0.0, std::log(b.kappaSup / (b.q1 * tol)) / b.q1);
}

namespace {

struct RiccatiRhs {
  const Orbit* orbit;
  double sign;  // -1 stable, +1 unstable
  void operator()(double t, const State<3>& s, State<3>& d) const {
    const UnitVector v = orbit->at(t);
    const double q = jacobiEndomorphism(orbit->model(), v);
    const double k = orbit->model().kappa(v.base);
    d[0] = -s[0] * s[0] - q;
    d[1] = sign * s[0];
    d[2] = sign * k * std::exp(sign * s[1]);
  }
};

}  // namespace

RiccatiProfile::RiccatiProfile(std::shared_ptr<Orbit> orbit, Branch branch, double t0, double t1,
                               double tol, double seed, bool tangential)
    : orbit_(std::move(orbit)), branch_(branch), t0_(t0), t1_(t1) {
  const ModelBounds& b = orbit_->model().bounds();
  horizon_ = riccatiHorizon(b, tol);
  if (tangential) horizon_ = std::max(horizon_, tangentialHorizon(b, tol));
  const bool stable = branch == Branch::Stable;
  const double start = stable ? t1 + horizon_ : t0 - horizon_;
  const double stop = stable ? t0 : t1;
  if (!orbit_->extendTo(start) || !orbit_->extendTo(stop))
    throw DomainError("orbit left the chart within the Riccati horizon");
  if (std::isnan(seed)) seed = stable ? -b.q1 : b.q1;
  IntegratorOptions o;
  o.rtol = o.atol = std::min(1e-11, 1e-3 * tol);
  o.maxStep = 0.5;
  sol_ = integrateDense<3>(
      RiccatiRhs{orbit_.get(), stable ? -1.0 : 1.0}, start, State<3>{seed, 0.0, 0.0}, stop, o,
      [](const State<3>& y, State<3>& sc) {
        for (int i = 0; i < 3; ++i) sc[i] = std::abs(y[i]);
      },
      [](double, const State<3>& y) { return std::isfinite(y[0]) && std::abs(y[0]) < 1e6; });
  if (sol_.status() == IntegrationStatus::Stopped)
    throw NumericError("Riccati solution blew up; model bounds are invalid");
  error_ = (b.q0 - b.q1) * std::exp(-2.0 * b.q1 * horizon_) + o.rtol;
  if (tangential) error_ += b.kappaSup * std::exp(-b.q1 * horizon_) / b.q1;
}

State<3> RiccatiProfile::state(double t) const {
  if (t < t0_ - 1e-12 || t > t1_ + 1e-12) throw DomainError("time outside the Riccati window");
  return sol_(t);
}

double RiccatiProfile::u(double t) const { return state(t)[0]; }

double RiccatiProfile::logYBetween(double a, double b) const {
  // Stable: A' = -u, so ln y = A(a) - A(b).  Unstable: B' = u, ln y = B(b) - B(a).
  const double ya = state(a)[1], yb = state(b)[1];
  return branch_ == Branch::Stable ? ya - yb : yb - ya;
}

double RiccatiProfile::w(double t) const {
  const State<3> s = state(t);
  return branch_ == Branch::Stable ? -std::exp(s[1]) * s[2] : std::exp(-s[1]) * s[2];
}

StabilityData stabilityData(const SurfaceModel& model, const UnitVector& v, double tol) {
  auto orbit = std::make_shared<Orbit>(model, v, std::min(1e-10, 1e-2 * tol));
  const RiccatiProfile st(orbit, Branch::Stable, 0.0, 0.0, tol);
  const RiccatiProfile un(orbit, Branch::Unstable, 0.0, 0.0, tol);
  StabilityData d;
  d.uMinus = st.u(0.0);
  d.uPlus = un.u(0.0);
  d.wMinus = st.w(0.0);
  d.wPlus = un.w(0.0);
  d.horizon = st.horizon();
  d.errorEstimate = std::max(st.errorEstimate(), un.errorEstimate());
  return d;
}

double uMinus(const SurfaceModel& model, const UnitVector& v, double tol) {
  auto orbit = std::make_shared<Orbit>(model, v, std::min(1e-10, 1e-2 * tol));
  return RiccatiProfile(orbit, Branch::Stable, 0.0, 0.0, tol).u(0.0);
}

double wMinus(const SurfaceModel& model, const UnitVector& v, double tol) {
  auto orbit = std::make_shared<Orbit>(model, v, std::min(1e-10, 1e-2 * tol));
  return RiccatiProfile(orbit, Branch::Stable, 0.0, 0.0, tol).w(0.0);
}

}  // namespace magflow
