#include "magflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <limits>
#include <sstream>

#include "magflow/detail/flow_rhs.hpp"

namespace magflow {

namespace {

using Complex = std::complex<double>;

struct BumpValue {
  double value = 0.0, dx = 0.0, dy = 0.0, lapHyp = 0.0;
};

// Profile A (1 - (cosh d - 1)/(cosh R - 1))^4 of the hyperbolic distance d to
// the centre.  It is C^3 across the support boundary.
BumpValue evalBump(const Bump& b, double cx, double cy, Point p) {
  BumpValue out;
  const double ex = p.x - cx, ey = p.y - cy;
  const double a = (ex * ex + ey * ey) / (2.0 * p.y * cy);  // cosh d - 1
  const double m = 1.0 / (std::cosh(b.radius) - 1.0);
  const double sigma = 1.0 - m * a;
  if (sigma <= 0.0) return out;
  const double s2 = sigma * sigma;
  const double fu = -4.0 * b.amplitude * m * s2 * sigma;
  const double fuu = 12.0 * b.amplitude * m * m * s2;
  const double ux = ex / (p.y * cy);
  const double uy = ey / (p.y * cy) - a / p.y;
  const double u = 1.0 + a;
  out.value = b.amplitude * s2 * s2;
  out.dx = fu * ux;
  out.dy = fu * uy;
  out.lapHyp = fuu * a * (a + 2.0) + 2.0 * u * fu;
  return out;
}

template <class Fn>
void forEachCopy(const Bump& b, const std::optional<double>& period, Point p, Fn&& fn) {
  if (!period) {
    fn(b.center.x, b.center.y);
    return;
  }
  const double ell = *period;
  const double logZ = 0.5 * std::log(p.x * p.x + p.y * p.y);
  const double logC = 0.5 * std::log(b.center.x * b.center.x + b.center.y * b.center.y);
  const long nmin = static_cast<long>(std::ceil((logZ - logC - b.radius) / ell));
  const long nmax = static_cast<long>(std::floor((logZ - logC + b.radius) / ell));
  for (long n = nmin; n <= nmax; ++n) {
    const double f = std::exp(static_cast<double>(n) * ell);
    fn(f * b.center.x, f * b.center.y);
  }
}

// Point at hyperbolic distance d from c, leaving c in chart direction beta.
Point polarAround(Point c, double d, double beta) {
  // Rotate the vertical geodesic through i by beta about i, then map i -> c.
  const double h = 0.5 * beta;
  const Complex w0(0.0, std::exp(d));
  const Complex w = (std::cos(h) * w0 - std::sin(h)) / (std::sin(h) * w0 + std::cos(h));
  return {c.x + c.y * w.real(), c.y * w.imag()};
}

}  // namespace

// --- Mobius ----------------------------------------------------------------

Point Mobius::apply(Point p) const {
  const Complex z(p.x, p.y);
  const Complex w = (a * z + b) / (c * z + d);
  return {w.real(), w.imag()};
}

double Mobius::applyBoundary(double x) const {
  if (std::isinf(x)) return c == 0.0 ? std::numeric_limits<double>::infinity() : a / c;
  const double den = c * x + d;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return (a * x + b) / den;
}

double Mobius::angleShift(Point p) const {
  const Complex z(p.x, p.y);
  return -2.0 * std::arg(c * z + d);
}

UnitVector Mobius::apply(const UnitVector& v) const {
  return {apply(v.base), wrapAngle(v.angle + angleShift(v.base))};
}

Mobius Mobius::inverse() const { return {d, -b, -c, a}; }

Mobius Mobius::compose(const Mobius& in) const {
  return {a * in.a + b * in.c, a * in.b + b * in.d, c * in.a + d * in.c, c * in.b + d * in.d};
}

// --- SurfaceModel ----------------------------------------------------------

SurfaceModel::SurfaceModel(double kappaBase) : kappaBase_(kappaBase) { certifyBounds(); }

SurfaceModel::SurfaceModel(double kappaBase, std::vector<Bump> rhoBumps,
                           std::vector<Bump> kappaBumps, std::optional<double> period)
    : kappaBase_(kappaBase),
      rhoBumps_(std::move(rhoBumps)),
      kappaBumps_(std::move(kappaBumps)),
      period_(period) {
  if (period_ && !(*period_ > 0.0)) throw ConfigError("period must be positive");
  for (const auto* list : {&rhoBumps_, &kappaBumps_}) {
    for (const Bump& b : *list) {
      if (!(b.center.y > 0.0)) throw ConfigError("bump centre must lie in the half-plane");
      if (!(b.radius > 0.0)) throw ConfigError("bump radius must be positive");
    }
  }
  // Drop inert bumps so the constant-model fast paths apply.
  auto inert = [](const Bump& b) { return b.amplitude == 0.0; };
  std::erase_if(rhoBumps_, inert);
  std::erase_if(kappaBumps_, inert);
  certifyBounds();
}

LocalFields SurfaceModel::fields(Point p) const {
  LocalFields f;
  double B = 0.0, Bx = 0.0, By = 0.0, L = 0.0;
  for (const Bump& b : rhoBumps_) {
    forEachCopy(b, period_, p, [&](double cx, double cy) {
      const BumpValue v = evalBump(b, cx, cy, p);
      B += v.value;
      Bx += v.dx;
      By += v.dy;
      L += v.lapHyp;
    });
  }
  double k = kappaBase_, kx = 0.0, ky = 0.0;
  for (const Bump& b : kappaBumps_) {
    forEachCopy(b, period_, p, [&](double cx, double cy) {
      const BumpValue v = evalBump(b, cx, cy, p);
      k += v.value;
      kx += v.dx;
      ky += v.dy;
    });
  }
  const double eB = std::exp(-B);
  f.rho = -std::log(p.y) + B;
  f.rhoX = Bx;
  f.rhoY = -1.0 / p.y + By;
  f.invFactor = p.y * eB;
  f.curvature = -eB * eB * (1.0 + L);
  f.kappa = k;
  f.kappaX = kx;
  f.kappaY = ky;
  return f;
}

bool SurfaceModel::insideSupport(Point p) const {
  if (period_) return !isConstant();
  for (const auto* list : {&rhoBumps_, &kappaBumps_}) {
    for (const Bump& b : *list) {
      if (hyperbolicDistance(p, b.center) < b.radius) return true;
    }
  }
  return false;
}

void SurfaceModel::certifyBounds() {
  double minK = -1.0, maxK = -1.0;
  double minQ = -1.0 + kappaBase_ * kappaBase_, maxQ = minQ;
  double supK = std::abs(kappaBase_), supGrad = 0.0;
  auto sample = [&](Point p) {
    const LocalFields f = fields(p);
    const double gradNorm = f.invFactor * std::hypot(f.kappaX, f.kappaY);
    const double base = f.curvature + f.kappa * f.kappa;
    minK = std::min(minK, f.curvature);
    maxK = std::max(maxK, f.curvature);
    minQ = std::min(minQ, base - gradNorm);
    maxQ = std::max(maxQ, base + gradNorm);
    supK = std::max(supK, std::abs(f.kappa));
    supGrad = std::max(supGrad, gradNorm);
  };
  constexpr int kRadial = 64, kAngular = 128;
  for (const auto* list : {&rhoBumps_, &kappaBumps_}) {
    for (const Bump& b : *list) {
      for (int i = 0; i <= kRadial; ++i) {
        const double d = b.radius * i / kRadial;
        for (int j = 0; j < kAngular; ++j) {
          sample(polarAround(b.center, d, 2.0 * std::numbers::pi * j / kAngular));
          if (i == 0) break;
        }
      }
    }
  }
  if (!(maxK < 0.0)) throw ConfigError("sampled Gaussian curvature is not negative");
  if (!(maxQ < 0.0)) throw ConfigError("sampled Jacobi endomorphism is not negative");
  constexpr double kMargin = 1.1;
  bounds_.k0 = kMargin * std::sqrt(-minK);
  bounds_.k1 = std::sqrt(-maxK) / kMargin;
  bounds_.q0 = kMargin * std::sqrt(-minQ);
  bounds_.q1 = std::sqrt(-maxQ) / kMargin;
  bounds_.kappaSup = kMargin * supK;
  bounds_.gradKappaSup = kMargin * supGrad;
}

SurfaceModel SurfaceModel::withPeriod(double ell) const {
  return SurfaceModel(kappaBase_, rhoBumps_, kappaBumps_, ell);
}

SurfaceModel SurfaceModel::pushforward(const Mobius& g) const {
  if (period_) throw ConfigError("pushforward of a periodic model is not supported");
  auto moved = [&](std::vector<Bump> list) {
    for (Bump& b : list) b.center = g.apply(b.center);
    return list;
  };
  return SurfaceModel(kappaBase_, moved(rhoBumps_), moved(kappaBumps_));
}

std::string SurfaceModel::describe() const {
  std::ostringstream os;
  os << "halfplane kappa_base=" << kappaBase_;
  for (const Bump& b : rhoBumps_)
    os << " rho_bump(" << b.amplitude << ";" << b.center.x << "," << b.center.y << ";" << b.radius
       << ")";
  for (const Bump& b : kappaBumps_)
    os << " kappa_bump(" << b.amplitude << ";" << b.center.x << "," << b.center.y << ";"
       << b.radius << ")";
  if (period_) os << " period=" << *period_;
  return os.str();
}

// --- tangent-space operations ------------------------------------------------

double gaussCurvature(const SurfaceModel& model, Point p) {
  requireDomain(p);
  return model.gaussCurvature(p);
}

TangentVector rotateN(const SurfaceModel&, const TangentVector& xi) {
  return {xi.base, -xi.cy, xi.cx};
}

UnitVector rotateN(const UnitVector& v) { return {v.base, v.angle + 0.5 * std::numbers::pi}; }

double metricInner(const SurfaceModel& model, const TangentVector& a, const TangentVector& b) {
  const double e = 1.0 / model.fields(a.base).invFactor;
  return e * e * (a.cx * b.cx + a.cy * b.cy);
}

double metricNorm(const SurfaceModel& model, const TangentVector& a) {
  return std::hypot(a.cx, a.cy) / model.fields(a.base).invFactor;
}

TangentVector toTangent(const SurfaceModel& model, const UnitVector& v) {
  const double s = model.fields(v.base).invFactor;
  return {v.base, s * std::cos(v.angle), s * std::sin(v.angle)};
}

double wrapAngle(double a) {
  constexpr double twoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, twoPi);
  if (a <= -std::numbers::pi) a += twoPi;
  if (a > std::numbers::pi) a -= twoPi;
  return a;
}

double transportRotation(const SurfaceModel& model, std::span<const Point> path) {
  // Parallel unit fields satisfy phi' = -(rho_x c_y' - rho_y c_x').
  static constexpr std::array<double, 4> nodes = {-0.8611363115940526, -0.3399810435848563,
                                                  0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> weights = {0.3478548451374538, 0.6521451548625461,
                                                    0.6521451548625461, 0.3478548451374538};
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Point a = path[i], b = path[i + 1];
    requireDomain(a);
    requireDomain(b);
    const double dx = b.x - a.x, dy = b.y - a.y;
    double seg = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double s = 0.5 * (1.0 + nodes[k]);
      const LocalFields f = model.fields({a.x + s * dx, a.y + s * dy});
      seg += weights[k] * (f.rhoX * dy - f.rhoY * dx);
    }
    total -= 0.5 * seg;
  }
  return total;
}

TangentVector parallelTransport(const SurfaceModel& model, std::span<const Point> path,
                                const TangentVector& xi) {
  if (path.empty()) throw DomainError("empty transport path");
  const double rot = transportRotation(model, path);
  const double scale =
      model.fields(path.back()).invFactor / model.fields(path.front()).invFactor;
  const double c = std::cos(rot), s = std::sin(rot);
  return {path.back(), scale * (c * xi.cx - s * xi.cy), scale * (s * xi.cx + c * xi.cy)};
}

// --- distances ---------------------------------------------------------------

double hyperbolicDistance(Point p, Point q) {
  return 2.0 * std::asinh(std::hypot(p.x - q.x, p.y - q.y) / (2.0 * std::sqrt(p.y * q.y)));
}

namespace {

double hyperbolicDirection(Point p, Point q) {
  const double dx = q.x - p.x;
  if (std::abs(dx) <= 1e-15 * std::max({std::abs(p.x), std::abs(q.x), p.y, q.y})) {
    return q.y >= p.y ? 0.5 * std::numbers::pi : -0.5 * std::numbers::pi;
  }
  // Geodesic through p and q is the circle centred on the real axis at xc.
  const double xc = ((q.x * q.x + q.y * q.y) - (p.x * p.x + p.y * p.y)) / (2.0 * dx);
  double tx = -p.y, ty = p.x - xc;
  if (tx * dx + ty * (q.y - p.y) < 0.0) {
    tx = -tx;
    ty = -ty;
  }
  return std::atan2(ty, tx);
}

}  // namespace

UnitVector geodesicEndpoint(const SurfaceModel& model, const UnitVector& start, double length,
                            double tol) {
  requireDomain(start.base);
  detail::FlowRhs rhs{&model, 0.0};
  const auto sol = integrateDense<3>(rhs, 0.0, detail::stateOf(start), length,
                                     detail::flowOptions(tol), detail::FlowScale{},
                                     detail::InsideChart{});
  if (sol.status() != IntegrationStatus::Completed) throw DomainError("geodesic left the chart");
  return detail::vectorOf(sol.final());
}

GeodesicChord geodesicInverse(const SurfaceModel& model, Point p, Point q, double tol) {
  requireDomain(p);
  requireDomain(q);
  GeodesicChord g{hyperbolicDirection(p, q), hyperbolicDistance(p, q), 0.0};
  if (!model.hasMetricPerturbation() || g.length == 0.0) return g;

  const double scale = q.y;
  auto residual = [&](double angle, double length) -> std::array<double, 2> {
    const UnitVector e = geodesicEndpoint(model, {p, angle}, length, 1e-13);
    return {(e.base.x - q.x) / scale, (e.base.y - q.y) / scale};
  };
  auto norm = [](const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); };

  std::array<double, 2> r = residual(g.angle, g.length);
  double rn = norm(r);
  for (int iter = 0; iter < 60 && rn > tol; ++iter) {
    // d/dlength: chart velocity at the endpoint; d/dangle by central differences.
    const UnitVector e = geodesicEndpoint(model, {p, g.angle}, g.length, 1e-13);
    const double vf = model.fields(e.base).invFactor / scale;
    const double jL0 = vf * std::cos(e.angle), jL1 = vf * std::sin(e.angle);
    const double ha = 1e-5;
    const auto rp = residual(g.angle + ha, g.length);
    const auto rm = residual(g.angle - ha, g.length);
    const double jA0 = (rp[0] - rm[0]) / (2 * ha), jA1 = (rp[1] - rm[1]) / (2 * ha);
    const double det = jA0 * jL1 - jA1 * jL0;
    if (det == 0.0) break;
    const double dA = -(r[0] * jL1 - r[1] * jL0) / det;
    const double dL = -(jA0 * r[1] - jA1 * r[0]) / det;
    double lambda = 1.0;
    for (int k = 0; k < 30; ++k) {
      const double na = g.angle + lambda * dA, nl = g.length + lambda * dL;
      if (nl > 0.0) {
        const auto rn2 = residual(na, nl);
        if (norm(rn2) < rn || k == 29) {
          g.angle = na;
          g.length = nl;
          r = rn2;
          rn = norm(rn2);
          break;
        }
      }
      lambda *= 0.5;
    }
  }
  g.angle = wrapAngle(g.angle);
  g.residual = rn;
  if (!(rn <= std::max(tol, 1e-9))) throw NumericError("geodesic shooting did not converge", rn);
  return g;
}

double distance(const SurfaceModel& model, Point p, Point q, double tol) {
  return geodesicInverse(model, p, q, tol).length;
}

}  // namespace magflow
