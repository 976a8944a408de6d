#include "magflow/horocycle.hpp"

#include "magflow/detail/finite_difference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/roots.hpp>

namespace magflow {

namespace {

using Complex = std::complex<double>;
constexpr double kPi = std::numbers::pi;

}  // namespace

// --- boundary points ---------------------------------------------------------

BoundaryPoint BoundaryPoint::normalized(double a, double b) {
  const double n = std::hypot(a, b);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("degenerate boundary point");
  a /= n;
  b /= n;
  if (b < 0.0 || (b == 0.0 && a < 0.0)) {
    a = -a;
    b = -b;
  }
  return {a, b};
}

BoundaryPoint BoundaryPoint::fromReal(double x) {
  if (std::isinf(x)) return infinity();
  return normalized(x, 1.0);
}

double BoundaryPoint::value() const {
  return b == 0.0 ? std::numeric_limits<double>::infinity() : a / b;
}

double BoundaryPoint::separation(const BoundaryPoint& o) const {
  return std::atan2(std::abs(a * o.b - b * o.a), std::abs(a * o.a + b * o.b));
}

BoundaryPoint osculatingEndpoint(const SurfaceModel& model, const UnitVector& v) {
  requireDomain(v.base);
  const double kappa = model.kappa(v.base);
  if (!(std::abs(kappa) < 1.0)) throw DomainError("field too strong: orbits do not reach the boundary");
  // Work in the chart z -> (z - x)/y, which sends the footpoint to i.
  const double cphi = std::cos(v.angle), sphi = std::sin(v.angle);
  const double kFlat = kappa - cphi;
  const double c = std::sqrt(1.0 - kappa * kappa);
  double num, den;
  if (std::abs(kFlat) < 1e-14) {
    // Straight chart line.
    num = -cphi;
    den = sphi;
    if (sphi > 0.0) num = 1.0, den = 0.0;
  } else {
    const double sg = kFlat > 0.0 ? 1.0 : -1.0;
    const double a0 = std::atan2(-sg * cphi, sg * sphi);
    double best = std::numeric_limits<double>::infinity(), ca = c;
    for (double cand : {c, -c}) {
      double d = sg * (std::atan2(-sg * kappa, cand) - a0);
      d = std::fmod(d, 2.0 * kPi);
      if (d < 0.0) d += 2.0 * kPi;
      if (d < best) best = d, ca = cand;
    }
    const double n1 = sg * ca - sphi, n2 = sg * ca + sphi;
    if (std::abs(n1) >= std::abs(n2)) {
      num = n1;
      den = kFlat;
    } else {
      num = -(cphi + kappa);
      den = n2;
    }
  }
  return BoundaryPoint::normalized(v.base.x * den + v.base.y * num, den);
}

double endpointHorizon(const SurfaceModel& model, double tol) {
  const double base = riccatiHorizon(model.bounds(), std::max(tol, 1e-14));
  return model.period() ? 1.5 * base : base;
}

namespace {

// Reads the endpoint once the orbit is past the horizon and outside every support.
BoundaryPoint endpointOfOrbit(const SurfaceModel& model, const UnitVector& v, double horizon,
                              double tol) {
  Orbit o(model, v, tol);
  double t = horizon;
  if (!o.extendTo(t)) throw DomainError("orbit left the chart before its endpoint was resolved");
  if (!model.period()) {
    const double tMax = horizon + 200.0;
    while (t < tMax && model.insideSupport(o.at(t).base)) {
      t += 2.0;
      if (!o.extendTo(t)) throw DomainError("orbit left the chart inside a bump support");
    }
  }
  return osculatingEndpoint(model, o.at(t));
}

}  // namespace

BoundaryPoint forwardEndpoint(const SurfaceModel& model, const UnitVector& v, double tol) {
  return endpointOfOrbit(model, v, endpointHorizon(model, tol), tol);
}

// --- asymptotic vectors -------------------------------------------------------

AsymptoticField::AsymptoticField(const SurfaceModel& model, BoundaryPoint theta, double tol)
    : model_(&model), theta_(theta), tol_(tol), horizon_(endpointHorizon(model, tol)) {}

AsymptoticField::AsymptoticField(const SurfaceModel& model, const UnitVector& v, double tol)
    : AsymptoticField(model, forwardEndpoint(model, v, tol), tol) {}

double AsymptoticField::endpointMismatch(const UnitVector& u) const {
  const BoundaryPoint eta = endpointOfOrbit(*model_, u, horizon_, tol_);
  const Mobius r = theta_.toInfinity();
  // R_theta on [a : b], then the affine map sending R_theta(p) to i.
  const double a1 = r.a * eta.a + r.b * eta.b;
  const double b1 = r.c * eta.a + r.d * eta.b;
  const Point p = r.apply(u.base);
  const double num = a1 - p.x * b1, den = p.y * b1;
  if (num == 0.0) return kPi;
  return -2.0 * std::atan(den / num);
}

UnitVector AsymptoticField::at(Point p, std::optional<double> guess) const {
  requireDomain(p);
  const Complex z(p.x, p.y);
  const double shift = 2.0 * std::arg(-theta_.b * z + theta_.a);
  const double k = std::clamp(model_->kappa(p), -1.0, 1.0);
  const double phi0 = guess ? *guess : wrapAngle(std::acos(k) + shift);

  auto f = [&](double phi) { return endpointMismatch({p, phi}); };
  const double f0 = f(phi0);
  if (f0 == 0.0) return {p, wrapAngle(phi0)};
  double lo = phi0, hi = phi0, flo = f0, fhi = f0;
  bool found = false;
  double best = std::abs(f0);
  for (double delta = 0.02; delta < 3.2 && !found; delta *= 2.0) {
    const double fa = f(phi0 - delta), fb = f(phi0 + delta);
    best = std::min({best, std::abs(fa), std::abs(fb)});
    // A sign change with a jump near pi is the cut opposite the root.
    if (f0 * fb <= 0.0 && std::abs(fb - f0) < kPi) {
      lo = phi0, flo = f0, hi = phi0 + delta, fhi = fb, found = true;
    } else if (f0 * fa <= 0.0 && std::abs(fa - f0) < kPi) {
      lo = phi0 - delta, flo = fa, hi = phi0, fhi = f0, found = true;
    }
  }
  if (!found) throw NumericError("asymptotic vector: bracketing failed", best);
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                   boost::math::tools::eps_tolerance<double>(48),
                                                   iters);
  return {p, wrapAngle(0.5 * (r.first + r.second))};
}

UnitVector asymptoticVector(const SurfaceModel& model, Point p, const UnitVector& v, double tol) {
  const AsymptoticField field(model, v, tol);
  // On the orbit of v itself the flow direction is the answer; the solver
  // reproduces it, but the guess from v's angle speeds it up when p = pi v.
  if (p.x == v.base.x && p.y == v.base.y) return field.at(p, v.angle);
  return field.at(p);
}

// --- Busemann functions --------------------------------------------------------

BusemannFunction::BusemannFunction(const SurfaceModel& model, const UnitVector& v, double tol)
    : BusemannFunction(AsymptoticField(model, v, std::min(1e-12, tol)), v, tol) {}

BusemannFunction::BusemannFunction(const AsymptoticField& field, const UnitVector& v, double tol)
    : field_(field), v_(v), tol_(tol),
      orbit_(std::make_shared<Orbit>(field.model(), v, field.tol())),
      mutex_(std::make_shared<std::shared_mutex>()) {
  orbit_->extendTo(60.0);
  orbit_->extendTo(-20.0);
}

double BusemannFunction::referenceLogHeight(double t) const {
  {
    std::shared_lock lock(*mutex_);
    if (orbit_->covers(t)) return logHeight(*orbit_, t);
  }
  std::unique_lock lock(*mutex_);
  if (!orbit_->extendTo(t)) throw DomainError("orbit left the chart");
  return logHeight(*orbit_, t);
}

double BusemannFunction::logHeight(const Orbit& o, double t) const {
  const UnitVector u = o.at(t);
  const Complex z(u.base.x, u.base.y);
  const BoundaryPoint& th = field_.theta();
  return std::log(u.base.y) - 2.0 * std::log(std::abs(-th.b * z + th.a));
}

double BusemannFunction::value(const UnitVector& w) const {
  const SurfaceModel& model = field_.model();
  Orbit ow(model, w, field_.tol());
  const double lambda = std::sqrt(std::max(1e-3, 1.0 - model.kappaBase() * model.kappaBase()));
  constexpr double kStep = 2.0;
  constexpr int kMaxSteps = 24;
  double r = 0.0, prev = std::numeric_limits<double>::quiet_NaN();
  double bestDiff = std::numeric_limits<double>::infinity(), bestR = 0.0;
  for (int k = 0; k <= kMaxSteps; ++k) {
    const double t = k * kStep;
    if (!ow.extendTo(t)) throw DomainError("orbit left the chart while evaluating Busemann");
    const double target = logHeight(ow, t);
    auto g = [&](double rr) { return referenceLogHeight(t + rr) - target; };
    const double r0 = r - g(r) / lambda;
    double lo = r0 - 0.25, hi = r0 + 0.25, glo = g(lo), ghi = g(hi);
    bool ok = glo * ghi <= 0.0;
    for (int e = 0; e < 12 && !ok; ++e) {
      lo -= (hi - lo);
      hi += (hi - lo) / 3.0;
      glo = g(lo);
      ghi = g(hi);
      ok = glo * ghi <= 0.0;
    }
    if (!ok) continue;  // height not yet monotone along the reference orbit
    std::uintmax_t iters = 100;
    const auto sol = boost::math::tools::toms748_solve(
        g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(50), iters);
    r = 0.5 * (sol.first + sol.second);
    if (!std::isnan(prev)) {
      const double diff = std::abs(r - prev);
      if (diff < 0.1 * tol_) return r;
      if (diff < bestDiff) bestDiff = diff, bestR = r;
      // Past the numerical floor the differences grow again.
      if (diff > 4.0 * bestDiff && bestDiff < std::sqrt(tol_)) return bestR;
    }
    prev = r;
  }
  if (bestDiff < std::sqrt(tol_)) return bestR;
  throw NumericError("Busemann function: no Cauchy convergence", bestDiff);
}

double BusemannFunction::operator()(Point z) const {
  if (z.x == v_.base.x && z.y == v_.base.y) return 0.0;
  return value(field_.at(z));
}

double busemann(const SurfaceModel& model, const UnitVector& v, Point z, double tol) {
  return BusemannFunction(model, v, tol)(z);
}

Point stablePush(const AsymptoticField& field, Point p, double t) {
  return flow(field.model(), field.at(p), t, field.tol()).base;
}

Point stablePush(const SurfaceModel& model, const UnitVector& v, Point p, double t, double tol) {
  if (t == 0.0) return p;
  return stablePush(AsymptoticField(model, v, tol), p, t);
}

// --- horocycle tracing ------------------------------------------------------------

namespace {

struct HoroState {
  double x, y, phi;
};

struct HoroRate {
  double dx, dy, dphi;
  double u, w, kappa;
};

HoroRate horoRate(const SurfaceModel& model, const HoroState& s, double tol) {
  const UnitVector v{{s.x, s.y}, s.phi};
  requireDomain(v.base);
  auto orbit = std::make_shared<Orbit>(model, v, std::min(1e-11, tol));
  const RiccatiProfile prof(orbit, Branch::Stable, 0.0, 0.0, tol);
  const double u = prof.u(0.0), w = prof.w(0.0);
  const LocalFields f = model.fields(v.base);
  const double c = std::cos(s.phi), sn = std::sin(s.phi);
  HoroRate r;
  r.dx = f.invFactor * (w * c - sn);
  r.dy = f.invFactor * (w * sn + c);
  r.dphi = (u + f.kappa * w) - (f.rhoX * r.dy - f.rhoY * r.dx);
  r.u = u;
  r.w = w;
  r.kappa = f.kappa;
  return r;
}

}  // namespace

HorocycleCurve traceHorocycle(const SurfaceModel& model, const UnitVector& v, double S,
                              const HorocycleOptions& opt) {
  if (!(S >= 0.0) || !(opt.step > 0.0)) throw ConfigError("invalid horocycle extent or step");
  HorocycleCurve curve;
  curve.v_ = v;
  curve.field_ = std::make_shared<AsymptoticField>(model, v, 1e-12);
  const int n = static_cast<int>(std::ceil(S / opt.step - 1e-9));
  curve.h_ = n > 0 ? S / n : opt.step;
  const double h = curve.h_;
  const double rtol = std::min(opt.tol, 1e-9);
  const BusemannFunction bus(*curve.field_, v, 1e-9);

  struct Raw {
    double s;
    HoroState st;
    HoroRate rate;
  };
  std::vector<Raw> raw;
  for (double dir : {-1.0, 1.0}) {
    HoroState st{v.base.x, v.base.y, v.angle};
    HoroRate k1 = horoRate(model, st, rtol);
    if (dir > 0.0) raw.push_back({0.0, st, k1});
    for (int i = 1; i <= n; ++i) {
      const double hs = dir * h;
      auto add = [](const HoroState& a, const HoroRate& r, double c) {
        return HoroState{a.x + c * r.dx, a.y + c * r.dy, a.phi + c * r.dphi};
      };
      const HoroRate k2 = horoRate(model, add(st, k1, 0.5 * hs), rtol);
      const HoroRate k3 = horoRate(model, add(st, k2, 0.5 * hs), rtol);
      const HoroRate k4 = horoRate(model, add(st, k3, hs), rtol);
      st.x += hs / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
      st.y += hs / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
      st.phi += hs / 6.0 * (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi);
      if (opt.reprojectEvery > 0 && i % opt.reprojectEvery == 0) {
        const UnitVector w = curve.field_->at({st.x, st.y}, st.phi);
        const double b = bus.value(w);
        const double drift = std::max(std::abs(b), std::abs(wrapAngle(w.angle - st.phi)));
        curve.maxDrift_ = std::max(curve.maxDrift_, drift);
        if (drift > 1e-4) throw NumericError("horocycle drift exceeds re-projection tolerance", drift);
        const UnitVector back = flow(model, w, -b, 1e-12);
        st = {back.base.x, back.base.y, w.angle + wrapAngle(back.angle - w.angle)};
      }
      k1 = horoRate(model, st, rtol);
      raw.push_back({i * hs, st, k1});
    }
  }
  std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.s < b.s; });

  const std::size_t m = raw.size();
  std::vector<double> ax(m), ay(m), ws(m), speed(m);
  curve.angleRate_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    ax[i] = raw[i].rate.dx;
    ay[i] = raw[i].rate.dy;
    ws[i] = raw[i].rate.w;
    speed[i] = std::sqrt(1.0 + ws[i] * ws[i]);
    curve.angleRate_[i] = raw[i].rate.dphi;
  }
  const std::vector<double> dax = detail::derivative4(ax, h), day = detail::derivative4(ay, h);
  const std::vector<double> dspeed = detail::derivative4(speed, h);
  std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> wSpline;
  if (m >= 5)
    wSpline = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        ws.begin(), ws.end(), raw.front().s, h, detail::derivative4(ws, h).front(),
        detail::derivative4(ws, h).back());

  curve.nodes_.resize(m);
  std::size_t zero = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Raw& r = raw[i];
    HorocycleNode& nd = curve.nodes_[i];
    nd.s = r.s;
    if (r.s == 0.0) zero = i;
    nd.point = {r.st.x, r.st.y};
    nd.angle = wrapAngle(r.st.phi);
    nd.uMinus = r.rate.u;
    nd.wMinus = r.rate.w;
    nd.kappa = r.rate.kappa;
    const TangentVector vel{nd.point, ax[i], ay[i]};
    nd.speed = metricNorm(model, vel);
    nd.normalization = metricInner(model, vel, rotateN(model, toTangent(model, {nd.point, nd.angle})));
    // Covariant derivative of dc/ds with the conformal Christoffel symbols.
    const LocalFields f = model.fields(nd.point);
    const double A = ax[i], B = ay[i];
    const double bx = dax[i] + f.rhoX * A * A + 2.0 * f.rhoY * A * B - f.rhoX * B * B;
    const double by = day[i] - f.rhoY * A * A + 2.0 * f.rhoX * A * B + f.rhoY * B * B;
    nd.kappaMinus = f.invFactor * (A * by - B * bx) / std::pow(std::hypot(A, B), 3);
    const double w = nd.wMinus, ww = 1.0 + w * w;
    double dw = 0.0;
    if (wSpline) {
      const double hd = 1e-3;
      const double lo = raw.front().s, hi = raw.back().s;
      if (r.s - hd >= lo && r.s + hd <= hi)
        dw = ((*wSpline)(r.s + hd) - (*wSpline)(r.s - hd)) / (2.0 * hd);
      else
        dw = wSpline->prime(r.s);
    }
    nd.kappaIdentity = (ww * (nd.uMinus + nd.kappa * w) - dw) / std::pow(ww, 1.5);
    nd.flagged = std::abs(nd.kappaMinus - nd.kappaIdentity) * std::pow(ww, 1.5) > 1e-3;
  }
  // Arc length by the trapezoid rule with endpoint-derivative correction.
  for (std::size_t i = zero + 1; i < m; ++i)
    curve.nodes_[i].arcLength = curve.nodes_[i - 1].arcLength + 0.5 * h * (speed[i - 1] + speed[i]) +
                                h * h / 12.0 * (dspeed[i - 1] - dspeed[i]);
  for (std::size_t i = zero; i-- > 0;)
    curve.nodes_[i].arcLength = curve.nodes_[i + 1].arcLength - 0.5 * h * (speed[i] + speed[i + 1]) -
                                h * h / 12.0 * (dspeed[i] - dspeed[i + 1]);
  if (opt.busemannResiduals) {
    for (HorocycleNode& nd : curve.nodes_) {
      if (nd.s == 0.0) continue;
      const UnitVector w = curve.field_->at(nd.point, nd.angle);
      nd.angle = w.angle;
      nd.busemannResidual = bus.value(w);
    }
  }
  return curve;
}

std::size_t HorocycleCurve::index(double s, double& frac) const {
  const double s0 = nodes_.front().s;
  const double pos = (s - s0) / h_;
  if (pos < -1e-9 || pos > static_cast<double>(nodes_.size() - 1) + 1e-9)
    throw DomainError("horocycle parameter outside the traced range");
  std::size_t j = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0,
                                                      static_cast<double>(nodes_.size() - 2)));
  if (nodes_.size() == 1) j = 0;
  frac = pos - static_cast<double>(j);
  return j;
}

const HorocycleNode& HorocycleCurve::node(double s) const {
  double frac;
  const std::size_t j = index(s, frac);
  return nodes_[std::min(nodes_.size() - 1, j + (frac > 0.5 ? 1 : 0))];
}

TangentVector HorocycleCurve::velocity(double s) const {
  const Point p = point(s);
  const double phi = angle(s);
  const HorocycleNode& nd = node(s);
  const double e = field_->model().fields(p).invFactor;
  // w varies slowly; interpolate it linearly between nodes.
  double frac;
  const std::size_t j = index(s, frac);
  const double w = nodes_.size() > 1 ? (1 - frac) * nodes_[j].wMinus + frac * nodes_[j + 1].wMinus
                                     : nd.wMinus;
  return {p, e * (w * std::cos(phi) - std::sin(phi)), e * (w * std::sin(phi) + std::cos(phi))};
}

using detail::hermite;

Point HorocycleCurve::point(double s) const {
  if (nodes_.size() == 1) return nodes_[0].point;
  double t;
  const std::size_t j = index(s, t);
  const HorocycleNode &a = nodes_[j], &b = nodes_[j + 1];
  const SurfaceModel& m = field_->model();
  auto vel = [&](const HorocycleNode& nd) {
    const double e = m.fields(nd.point).invFactor;
    const double c = std::cos(nd.angle), sn = std::sin(nd.angle);
    return std::pair{e * (nd.wMinus * c - sn), e * (nd.wMinus * sn + c)};
  };
  const auto [ax, ay] = vel(a);
  const auto [bx, by] = vel(b);
  return {hermite(a.point.x, b.point.x, ax, bx, h_, t), hermite(a.point.y, b.point.y, ay, by, h_, t)};
}

double HorocycleCurve::angle(double s) const {
  if (nodes_.size() == 1) return nodes_[0].angle;
  double t;
  const std::size_t j = index(s, t);
  const double a = nodes_[j].angle;
  const double b = a + wrapAngle(nodes_[j + 1].angle - a);
  return wrapAngle(hermite(a, b, angleRate_[j], angleRate_[j + 1], h_, t));
}

double horocycleCurvature(const HorocycleCurve& curve, double s) {
  const auto& nodes = curve.nodes();
  if (nodes.size() == 1) return nodes[0].kappaMinus;
  const double pos = (s - nodes.front().s) / curve.step();
  const std::size_t j = static_cast<std::size_t>(
      std::clamp(std::floor(pos), 0.0, static_cast<double>(nodes.size() - 2)));
  const double t = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
  return (1 - t) * nodes[j].kappaMinus + t * nodes[j + 1].kappaMinus;
}

// --- horocyclic transport -----------------------------------------------------------

TangentVector HorocyclicTransport::apply(const SurfaceModel& model, const TangentVector& xi) const {
  const double rot = transport + zeta;
  const double scale = model.fields(to).invFactor / model.fields(from).invFactor;
  const double c = std::cos(rot), sn = std::sin(rot);
  return {to, scale * (c * xi.cx - sn * xi.cy), scale * (sn * xi.cx + c * xi.cy)};
}

HorocyclicTransportField::HorocyclicTransportField(const HorocycleCurve& curve, double s,
                                                   int samples, double tMax)
    : field_(&curve.field()), s_(s) {
  if (samples < 1) throw ConfigError("transport needs at least one segment");
  for (int k = 0; k <= samples; ++k) {
    const double sigma = s * k / samples;
    const UnitVector v = k == 0 ? curve.generator()
                                : field_->at(curve.point(sigma), curve.angle(sigma));
    auto o = std::make_shared<Orbit>(field_->model(), v, field_->tol());
    if (!o->extendTo(tMax)) throw DomainError("pushed horocycle left the chart");
    orbits_.push_back(std::move(o));
  }
}

Point HorocyclicTransportField::pushed(int k, double t) const { return orbits_.at(k)->at(t).base; }

HorocyclicTransport HorocyclicTransportField::at(double t) const {
  std::vector<Point> path;
  for (auto it = orbits_.rbegin(); it != orbits_.rend(); ++it) path.push_back((*it)->at(t).base);
  HorocyclicTransport out;
  out.s = s_;
  out.t = t;
  out.from = path.front();
  out.to = path.back();
  if (s_ == 0.0) return out;
  out.transport = transportRotation(field_->model(), path);
  const double phiS = orbits_.back()->at(t).angle, phi0 = orbits_.front()->at(t).angle;
  out.zeta = wrapAngle(phi0 - (phiS + out.transport));
  return out;
}

HorocyclicTransport horocyclicTransport(const HorocycleCurve& curve, double s, double t) {
  return HorocyclicTransportField(curve, s, 64, std::max(t, 0.0)).at(t);
}

}  // namespace magflow
