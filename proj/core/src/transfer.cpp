#include "magflow/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <boost/math/tools/roots.hpp>

#include "magflow/detail/finite_difference.hpp"
#include "magflow/parallel.hpp"

namespace magflow {

namespace {

constexpr double kBackWindow = 8.0;

double riccatiTol(double tol) { return std::max(1e-10, 1e-2 * tol); }

double transferWindow(const ModelBounds& b, double tol) {
  return std::log(1.0 / tol) / b.q1 + 15.0;
}

std::shared_ptr<RiccatiProfile> stableProfile(const SurfaceModel& model, const UnitVector& v,
                                              double t0, double t1, double tol) {
  auto orbit = std::make_shared<Orbit>(model, v, 1e-11);
  return std::make_shared<RiccatiProfile>(orbit, Branch::Stable, t0, t1, riccatiTol(tol),
                                          std::numeric_limits<double>::quiet_NaN(), false);
}

}  // namespace

// ln y_-(w, t) for t >= 0, chained over segments whose initial vectors are
// re-anchored on the asymptotic field, so the orbit stays on the stable
// manifold in models whose perturbation never ends.
class ShadowedDecay {
 public:
  ShadowedDecay(const AsymptoticField& field, const UnitVector& w, double tol)
      : field_(&field), tol_(tol) {
    segments_.push_back({stableProfile(field.model(), w, 0.0, kSegment, tol), 0.0});
  }

  double logY(double t) const {
    if (t < 0.0) throw DomainError("shadowed decay needs t >= 0");
    const auto j = static_cast<std::size_t>(t / kSegment);
    std::lock_guard lock(mutex_);
    while (segments_.size() <= j) {
      const Segment& last = segments_.back();
      const UnitVector end = last.profile->orbit()->at(kSegment);
      UnitVector anchored = end;
      try {
        anchored = field_->at(end.base, end.angle);
      } catch (const NumericError&) {
        // Too close to the boundary for the chart to resolve the endpoint.
      }
      segments_.push_back({stableProfile(field_->model(), anchored, 0.0, kSegment, tol_),
                           last.log0 + last.profile->logY(kSegment)});
    }
    const Segment& seg = segments_[j];
    return seg.log0 + seg.profile->logY(t - kSegment * static_cast<double>(j));
  }

 private:
  static constexpr double kSegment = 4.0;
  struct Segment {
    std::shared_ptr<RiccatiProfile> profile;
    double log0;
  };
  const AsymptoticField* field_;
  double tol_;
  mutable std::vector<Segment> segments_;
  mutable std::mutex mutex_;
};

namespace {

bool same(const UnitVector& a, const UnitVector& b) {
  return a.base.x == b.base.x && a.base.y == b.base.y && a.angle == b.angle;
}

}  // namespace

// --- stable transfer ---------------------------------------------------------------

StableTransferContext::StableTransferContext(const SurfaceModel& model, const UnitVector& v,
                                             double tol)
    : model_(&model), v_(v), tol_(tol), window_(transferWindow(model.bounds(), tol)) {
  if (!(tol > 0.0)) throw ConfigError("transfer tolerance must be positive");
  field_ = std::make_shared<AsymptoticField>(model, v, 1e-12);
  busemann_ = std::make_shared<BusemannFunction>(*field_, v, 1e-9);
  orbit_ = std::make_shared<Orbit>(model, v, 1e-11);
  profile_ = std::make_shared<RiccatiProfile>(orbit_, Branch::Stable, -kBackWindow,
                                              window_ + kBackWindow, riccatiTol(tol),
                                              std::numeric_limits<double>::quiet_NaN(), false);
  if (model.period()) {
    shadow_ = std::make_shared<ShadowedDecay>(*field_, v, tol);
  }
}

void StableTransferContext::requireAsymptotic(const UnitVector& vp) const {
  if (same(vp, v_)) return;
  const double mismatch = std::abs(field_->endpointMismatch(vp));
  if (!(mismatch < kAsymptoticTolerance))
    throw PreconditionError("vectors are not forward asymptotic (endpoint mismatch " +
                            std::to_string(mismatch) + ")");
}

double StableTransferContext::baseLogY(double a, double b) const {
  if (shadow_ && a >= 0.0 && b >= 0.0) return shadow_->logY(b) - shadow_->logY(a);
  if (profile_->t0() <= std::min(a, b) && std::max(a, b) <= profile_->t1())
    return profile_->logYBetween(a, b);
  return stableProfile(*model_, v_, std::min({a, b, 0.0}), std::max({a, b, 0.0}), tol_)
      ->logYBetween(a, b);
}

double StableTransferContext::logDecay(double t) const { return baseLogY(0.0, t); }

UnitVector StableTransferContext::flowed(double t) const {
  if (orbit_->covers(t)) return orbit_->at(t);
  return flow(*model_, v_, t, 1e-11);
}

TransferValue StableTransferContext::operator()(const UnitVector& vp, std::optional<double> offset,
                                                const TransferOptions& opt) const {
  TransferValue out;
  if (same(vp, v_)) return out;
  if (!offset) {
    requireAsymptotic(vp);
    offset = busemann_->value(vp);
  }
  const double r = *offset;
  out.offset = r;
  const double step = opt.step > 0.0 ? opt.step : 1.0;
  const double tStart = std::max(0.0, -r);
  const double decay = 1.0 - std::exp(-model_->bounds().q1 * step);
  auto ratioAt = [&](const RiccatiProfile& prof, double t) {
    return prof.logY(t) - baseLogY(0.0, t + r);
  };

  double t, prev, band = std::numeric_limits<double>::infinity();
  if (shadow_) {
    const ShadowedDecay decayP(*field_, vp, tol_);
    auto ratio = [&](double tt) { return decayP.logY(tt) - baseLogY(0.0, tt + r); };
    if (opt.horizon) {
      t = std::max(*opt.horizon, tStart + step);
      prev = ratio(t);
      band = std::abs(prev - ratio(t - step)) / decay;
    } else {
      const double tEnd = tStart + window_;
      t = tStart;
      prev = ratio(t);
      int quiet = 0;
      while (t < tEnd && quiet < 2) {
        t = std::min(t + step, tEnd);
        const double cur = ratio(t);
        band = std::abs(cur - prev) / decay;
        prev = cur;
        quiet = band * std::exp(cur) < tol_ ? quiet + 1 : 0;
      }
    }
  } else if (opt.horizon) {
    t = std::max(*opt.horizon, tStart + step);
    const auto prof = stableProfile(*model_, vp, 0.0, t, tol_);
    prev = ratioAt(*prof, t);
    band = std::abs(prev - ratioAt(*prof, t - step)) / decay;
  } else {
    // Windows grow geometrically; each attempt re-seeds beyond its end.
    const double tEnd = tStart + window_;
    double span = std::min(8.0, window_);
    for (;;) {
      const double t1 = std::min(tStart + span, tEnd);
      const auto prof = stableProfile(*model_, vp, 0.0, t1, tol_);
      t = tStart;
      prev = ratioAt(*prof, t);
      int quiet = 0;
      bool done = false;
      while (t < t1) {
        t = std::min(t + step, t1);
        const double cur = ratioAt(*prof, t);
        band = std::abs(cur - prev) / decay;
        prev = cur;
        quiet = band * std::exp(cur) < tol_ ? quiet + 1 : 0;
        if (quiet >= 2) {
          done = true;
          break;
        }
      }
      if (done || t1 >= tEnd) break;
      span *= 2.0;
    }
  }
  out.logValue = prev;
  out.value = std::exp(prev);
  out.horizon = t;
  out.error = (band + 1e-3 * tol_) * out.value;
  out.flagged = !opt.horizon && out.error > tol_;
  return out;
}

TransferValue stableTransfer(const SurfaceModel& model, const UnitVector& v, const UnitVector& vp,
                             const TransferOptions& opt) {
  if (same(v, vp)) return {};
  const StableTransferContext ctx(model, v, opt.tol);
  return ctx(vp, std::nullopt, opt);
}

TangentVector extendedStableTransfer(const SurfaceModel& model, const UnitVector& v,
                                     const UnitVector& vp, double transfer,
                                     const TangentVector& xi) {
  const TangentVector tp = toTangent(model, vp), np = rotateN(model, tp);
  const double along = metricInner(model, xi, tp), across = metricInner(model, xi, np);
  const TangentVector t0 = toTangent(model, v), n0 = rotateN(model, t0);
  return {v.base, along * t0.cx + transfer * across * n0.cx, along * t0.cy + transfer * across * n0.cy};
}

TangentVector extendedStableTransfer(const SurfaceModel& model, const UnitVector& v,
                                     const UnitVector& vp, const TangentVector& xi, double tol) {
  TransferOptions opt;
  opt.tol = tol;
  return extendedStableTransfer(model, v, vp, stableTransfer(model, v, vp, opt).value, xi);
}

// --- unstable transfer ----------------------------------------------------------------

TransferValue unstableTransfer(const SurfaceModel& model, const UnitVector& v, const UnitVector& vp,
                               double tol) {
  if (same(v, vp)) {
    TransferValue out;
    out.crossCheck = 1.0;
    return out;
  }
  TransferOptions opt;
  opt.tol = tol;
  const TransferValue back = stableTransfer(model, vp, v, opt);  // X(v', v)
  const StabilityData sv = stabilityData(model, v, tol), sp = stabilityData(model, vp, tol);
  const double gapV = sv.uPlus - sv.uMinus, gapP = sp.uPlus - sp.uMinus;

  TransferValue out;
  out.value = gapP / gapV * back.value;
  out.logValue = std::log(out.value);
  out.offset = -back.offset;
  out.horizon = back.horizon;
  out.error = out.value * (back.error / back.value + 2.0 * sv.errorEstimate / gapV +
                           2.0 * sp.errorEstimate / gapP);

  constexpr double kCheck = 10.0;
  const double r = out.offset;
  auto unstableLogY = [&](const UnitVector& w, double t) {
    auto orbit = std::make_shared<Orbit>(model, w, 1e-11);
    const RiccatiProfile prof(orbit, Branch::Unstable, std::min(0.0, t), std::max(0.0, t),
                              riccatiTol(tol));
    return prof.logY(t);
  };
  const double tc = std::max(kCheck, -r);
  out.crossCheck = std::exp(unstableLogY(vp, tc) - unstableLogY(v, tc + r));
  const double band = std::max(tol, std::exp(-model.bounds().q1 * kCheck)) * kCheck;
  out.flagged = std::abs(out.crossCheck - out.value) > band * out.value + out.error;
  return out;
}

// --- linearization --------------------------------------------------------------------

Linearization::Linearization(const SurfaceModel& model, const UnitVector& v,
                             const LinearizationOptions& opt)
    : tol_(opt.tol) {
  transfer_ = std::make_shared<StableTransferContext>(model, v, opt.tol);
  HorocycleOptions hopt;
  hopt.step = opt.step;
  hopt.tol = opt.tol;
  curve_ = std::make_shared<HorocycleCurve>(traceHorocycle(model, v, opt.extent, hopt));
  const auto& nodes = curve_->nodes();
  const std::size_t n = nodes.size();
  x_.assign(n, 1.0);
  parallelFor(n, [&](std::size_t i) {
    const HorocycleNode& nd = nodes[i];
    if (nd.s != 0.0) x_[i] = (*transfer_)({nd.point, nd.angle}, nd.busemannResidual).value;
  });
  const double h = curve_->step();
  dx_ = detail::derivative4(x_, h);
  e_.assign(n, 0.0);
  std::size_t zero = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i].s == 0.0) zero = i;
  // Trapezoid rule with the endpoint-derivative correction.
  auto panel = [&](std::size_t a, std::size_t b) {
    return 0.5 * h * (x_[a] + x_[b]) + h * h / 12.0 * (dx_[a] - dx_[b]);
  };
  for (std::size_t i = zero + 1; i < n; ++i) e_[i] = e_[i - 1] + panel(i - 1, i);
  for (std::size_t i = zero; i-- > 0;) e_[i] = e_[i + 1] - panel(i, i + 1);
}

namespace {

std::size_t cell(const HorocycleCurve& c, double s, double& frac) {
  const auto& nodes = c.nodes();
  const double pos = (s - nodes.front().s) / c.step();
  if (pos < -1e-9 || pos > static_cast<double>(nodes.size() - 1) + 1e-9)
    throw DomainError("point outside the traced horocycle range");
  const std::size_t j = static_cast<std::size_t>(
      std::clamp(std::floor(pos), 0.0, static_cast<double>(nodes.size() - 2)));
  frac = pos - static_cast<double>(j);
  return j;
}

}  // namespace

double Linearization::transferAt(double s) const {
  if (x_.size() == 1) return x_[0];
  double t;
  const std::size_t j = cell(*curve_, s, t);
  return detail::hermite(x_[j], x_[j + 1], dx_[j], dx_[j + 1], curve_->step(), t);
}

double Linearization::transverseAt(double s) const {
  if (e_.size() == 1) return 0.0;
  double t;
  const std::size_t j = cell(*curve_, s, t);
  return detail::hermite(e_[j], e_[j + 1], x_[j], x_[j + 1], curve_->step(), t);
}

double Linearization::locate(Point q, double& residual) const {
  const auto& nodes = curve_->nodes();
  std::size_t best = 0;
  double bestD = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = std::hypot(nodes[i].point.x - q.x, nodes[i].point.y - q.y);
    if (d < bestD) bestD = d, best = i;
  }
  const double lo = nodes.front().s, hi = nodes.back().s, h = curve_->step();
  auto g = [&](double s) {
    const Point c = curve_->point(s);
    const TangentVector d = curve_->velocity(s);
    return (c.x - q.x) * d.cx + (c.y - q.y) * d.cy;
  };
  double s = nodes[best].s;
  for (double width : {h, 3.0 * h}) {
    const double a = std::max(lo, nodes[best].s - width), b = std::min(hi, nodes[best].s + width);
    const double ga = g(a), gb = g(b);
    if (ga == 0.0 || gb == 0.0) {
      s = ga == 0.0 ? a : b;
      break;
    }
    if (ga * gb > 0.0) {
      if (width > h) {
        if ((best == 0 && ga > 0.0) || (best + 1 == nodes.size() && gb < 0.0))
          throw DomainError("point outside the traced horocycle range");
        throw NumericError("horocycle localization failed", bestD);
      }
      continue;
    }
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb,
                                                     boost::math::tools::eps_tolerance<double>(50),
                                                     iters);
    s = 0.5 * (r.first + r.second);
    break;
  }
  const Point c = curve_->point(s);
  residual = std::hypot(c.x - q.x, c.y - q.y) / model().fields(q).invFactor;
  if (residual > 1e-5) throw NumericError("horocycle localization failed", residual);
  return s;
}

LinearizationSample Linearization::fromVector(const UnitVector& w) const {
  LinearizationSample out;
  out.p = w.base;
  const UnitVector& v = generator();
  if (w.base.x == v.base.x && w.base.y == v.base.y) return out;
  const double r = transfer_->busemann().value(w);
  const Point q = std::abs(r) > 0.0 ? flow(model(), w, -r, 1e-12).base : w.base;
  double residual = 0.0;
  const double s = locate(q, residual);
  out.longitudinal = r;
  out.s = s;
  out.transverse = transverseAt(s);
  out.error = 1e-9 + residual + tol_ * std::abs(s);
  return out;
}

LinearizationSample Linearization::operator()(Point p) const {
  const UnitVector& v = generator();
  if (p.x == v.base.x && p.y == v.base.y) {
    LinearizationSample out;
    out.p = p;
    return out;
  }
  return fromVector(transfer_->field().at(p));
}

DerivativeReport Linearization::derivative(Point p, double h) const {
  DerivativeReport rep;
  rep.p = p;
  const UnitVector& v = generator();
  const bool atBase = p.x == v.base.x && p.y == v.base.y;
  const UnitVector w = atBase ? v : transfer_->field().at(p);
  const double r = atBase ? 0.0 : transfer_->busemann().value(w);
  rep.transfer = atBase ? 1.0 : (*transfer_)(w, r).value;
  rep.wMinus = wMinus(model(), w, tol_);
  rep.analytic = {1.0, -rep.wMinus, 0.0, rep.transfer};
  rep.diagonalForm = {1.0, 0.0, 0.0, rep.transfer};

  std::array<LinearizationSample, 4> fd;
  const std::array<Point, 4> pts{Point{p.x + h, p.y}, Point{p.x - h, p.y}, Point{p.x, p.y + h},
                                 Point{p.x, p.y - h}};
  for (std::size_t k = 0; k < 4; ++k) fd[k] = (*this)(pts[k]);
  const double dLx = (fd[0].longitudinal - fd[1].longitudinal) / (2 * h);
  const double dTx = (fd[0].transverse - fd[1].transverse) / (2 * h);
  const double dLy = (fd[2].longitudinal - fd[3].longitudinal) / (2 * h);
  const double dTy = (fd[2].transverse - fd[3].transverse) / (2 * h);
  const double e = model().fields(p).invFactor;
  const double c = std::cos(w.angle), sn = std::sin(w.angle);
  // Chart components of v' and N(v').
  const double tx = e * c, ty = e * sn, nx = -e * sn, ny = e * c;
  rep.finiteDifference = {dLx * tx + dLy * ty, dLx * nx + dLy * ny, dTx * tx + dTy * ty,
                          dTx * nx + dTy * ny};
  const FrameMatrix& a = rep.analytic;
  const FrameMatrix& f = rep.finiteDifference;
  const double scale = std::max({std::abs(a.a11), std::abs(a.a12), std::abs(a.a21), std::abs(a.a22)});
  rep.relativeError = std::max({std::abs(a.a11 - f.a11), std::abs(a.a12 - f.a12),
                                std::abs(a.a21 - f.a21), std::abs(a.a22 - f.a22)}) /
                      scale;
  rep.flagged = rep.relativeError > 1e-3;
  return rep;
}

double Linearization::finiteTimeTransverse(Point z, double t) const {
  const Point pz = stablePush(transfer_->field(), z, t);
  const UnitVector base = transfer_->flowed(t);
  const GeodesicChord chord = geodesicInverse(model(), base.base, pz);
  return chord.length * std::sin(chord.angle - base.angle) / std::exp(transfer_->logDecay(t));
}

LinearizationSample linearize(const SurfaceModel& model, const UnitVector& v, Point p, double tol) {
  LinearizationOptions opt;
  opt.tol = tol;
  return Linearization(model, v, opt)(p);
}

double linearizationEquivariance(const SurfaceModel& model, const UnitVector& v, Point p, double t,
                                 double tol) {
  if (t == 0.0) return 0.0;
  LinearizationOptions opt;
  opt.tol = tol;
  const Linearization lin(model, v, opt);
  const LinearizationSample e0 = lin(p);
  const double logY = lin.transfer().logDecay(t);
  LinearizationOptions optT = opt;
  optT.extent = opt.extent * std::max(1.0, 2.0 * std::exp(logY));
  const Linearization linT(model, lin.transfer().flowed(t), optT);
  const LinearizationSample et = linT(p);
  return std::hypot(et.longitudinal - (e0.longitudinal - t),
                    et.transverse - std::exp(logY) * e0.transverse);
}

DerivativeReport linearizationDerivative(const SurfaceModel& model, const UnitVector& v, Point p,
                                         double tol) {
  LinearizationOptions opt;
  opt.tol = tol;
  return Linearization(model, v, opt).derivative(p);
}

MatchReport linearizationMatch(const SurfaceModel& model1, const SurfaceModel& model2,
                               const std::function<Point(Point)>& f, const UnitVector& v1,
                               const UnitVector& v2, const std::vector<Point>& grid,
                               const LinearizationOptions& opt) {
  const Linearization lin1(model1, v1, opt), lin2(model2, v2, opt);
  std::vector<double> res(grid.size(), 0.0);
  parallelFor(grid.size(), [&](std::size_t i) {
    const LinearizationSample a = lin1(grid[i]), b = lin2(f(grid[i]));
    res[i] = std::hypot(a.longitudinal - b.longitudinal, a.transverse - b.transverse);
  });
  MatchReport rep;
  rep.gridSize = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (res[i] > rep.supResidual || i == 0) {
      rep.supResidual = res[i];
      rep.argmaxPoint = grid[i];
    }
  }
  return rep;
}

}  // namespace magflow
