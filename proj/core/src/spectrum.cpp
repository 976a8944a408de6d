#include "magflow/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "magflow/parallel.hpp"

namespace magflow {

// --- quotients --------------------------------------------------------------------

CyclicQuotient::CyclicQuotient(const SurfaceModel& model, double ell) : model_(&model), ell_(ell) {
  if (!(ell > 0.0) || !std::isfinite(ell)) throw ConfigError("translation length must be positive");
  if (!model.isConstant()) {
    if (!model.period()) throw ConfigError("perturbed quotient models must be generator-periodic");
    const double ratio = ell / *model.period();
    if (std::abs(ratio - std::round(ratio)) > 1e-12)
      throw ConfigError("translation length is not a multiple of the model period");
  }
  // Fields at z and e^ell z: kappa and K agree, rho drops by ell.
  const double lambda = std::exp(ell);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 8; ++j) {
      const double ang = 0.2 + 2.7 * i / 11.0, rad = std::exp(-0.5 * ell + ell * j / 7.0);
      const Point z{rad * std::cos(ang), rad * std::sin(ang)};
      const LocalFields a = model.fields(z), b = model.fields({lambda * z.x, lambda * z.y});
      residual_ = std::max({residual_, std::abs(a.kappa - b.kappa),
                            std::abs(a.curvature - b.curvature), std::abs(a.rho - ell - b.rho)});
    }
  if (residual_ > 1e-10)
    throw ConfigError("model is not invariant under the generator (residual " +
                      std::to_string(residual_) + ")");
}

// --- periodic orbits ----------------------------------------------------------------

namespace {

UnitVector shootingVector(double d, double shift) {
  const Point z{std::tanh(d), 1.0 / std::cosh(d)};
  return {z, std::atan2(z.y, z.x) + shift};
}

Eigen::Vector3d shootingResidual(const CyclicQuotient& q, const Eigen::Vector3d& u) {
  const UnitVector v = shootingVector(u[0], u[1]);
  const double lambda = std::exp(q.ell());
  const UnitVector e = flow(q.model(), v, u[2], 1e-12);
  return {(e.base.x / lambda - v.base.x) / v.base.y, std::log(e.base.y / (lambda * v.base.y)),
          wrapAngle(e.angle - v.angle)};
}

}  // namespace

PeriodicOrbit findPeriodicOrbit(const CyclicQuotient& quotient, double tol) {
  const double k = quotient.model().kappaBase();
  if (!(std::abs(k) < 1.0)) throw DomainError("field too strong for an invariant orbit");
  const double d0 = std::atanh(k);
  Eigen::Vector3d u(d0, 0.0, quotient.ell() * std::cosh(d0));
  Eigen::Vector3d f = shootingResidual(quotient, u);
  PeriodicOrbit out;
  constexpr double kStep = 1e-7;
  for (int it = 0; it < 40 && f.norm() >= tol; ++it) {
    Eigen::Matrix3d jac;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d a = u, b = u;
      a[c] += kStep;
      b[c] -= kStep;
      jac.col(c) = (shootingResidual(quotient, a) - shootingResidual(quotient, b)) / (2 * kStep);
    }
    const Eigen::Vector3d delta = jac.colPivHouseholderQr().solve(-f);
    double damping = 1.0;
    Eigen::Vector3d next = u + delta, fn = shootingResidual(quotient, next);
    while (fn.norm() >= f.norm() && damping > 1e-4) {
      damping *= 0.5;
      next = u + damping * delta;
      fn = shootingResidual(quotient, next);
    }
    if (fn.norm() >= f.norm()) break;
    u = next;
    f = fn;
    out.iterations = it + 1;
  }
  out.residual = f.norm();
  if (!(out.residual < tol)) throw NumericError("periodic orbit shooting did not converge", out.residual);
  out.v = shootingVector(u[0], u[1]);
  out.offset = u[0];
  out.angleShift = u[1];
  out.period = u[2];
  return out;
}

// --- Lyapunov exponents --------------------------------------------------------------

namespace {

struct PeriodicRiccatiRhs {
  const Orbit* orbit;
  void operator()(double t, const State<2>& s, State<2>& d) const {
    d[0] = -s[0] * s[0] - jacobiEndomorphism(orbit->model(), orbit->at(t));
    d[1] = s[0];
  }
};

IntegratorOptions riccatiOptions(double tol) {
  IntegratorOptions o;
  o.rtol = o.atol = std::max(1e-13, 1e-3 * tol);
  o.maxStep = 0.25;
  return o;
}

// Integrates (u, int u) from `from` to `to` starting at u = seed.
State<2> riccatiPass(const Orbit& orbit, double from, double to, double seed, double tol) {
  const auto sol = integrateDense<2>(PeriodicRiccatiRhs{&orbit}, from, State<2>{seed, 0.0}, to,
                                     riccatiOptions(tol));
  return sol.final();
}

struct PeriodicSolution {
  double u = 0.0;
  int iterations = 0;
};

// Fixed point of the one-period Riccati map, backward (stable) or forward (unstable).
PeriodicSolution periodicRiccati(const Orbit& orbit, double period, bool stable, double seed,
                                 double tol) {
  PeriodicSolution out;
  double u = seed;
  for (int it = 1; it <= 200; ++it) {
    const double next = stable ? riccatiPass(orbit, period, 0.0, u, tol)[0]
                               : riccatiPass(orbit, 0.0, period, u, tol)[0];
    const double diff = std::abs(next - u);
    u = next;
    out.iterations = it;
    if (diff < 1e-3 * tol) break;
    if (it == 200) throw NumericError("periodic Riccati solution did not converge", diff);
  }
  out.u = u;
  return out;
}

std::shared_ptr<Orbit> periodicOrbitFlow(const CyclicQuotient& q, const PeriodicOrbit& o, int n) {
  auto orbit = std::make_shared<Orbit>(q.model(), o.v, 1e-12);
  if (!orbit->extendTo(n * o.period + 1e-9)) throw DomainError("periodic orbit left the chart");
  return orbit;
}

}  // namespace

LyapunovData periodicLyapunov(const CyclicQuotient& quotient, const PeriodicOrbit& orbit,
                              double tol) {
  const auto flowOrbit = periodicOrbitFlow(quotient, orbit, 1);
  const ModelBounds& b = quotient.model().bounds();
  const double T = orbit.period;
  const PeriodicSolution st = periodicRiccati(*flowOrbit, T, true, -b.q1, tol);
  const PeriodicSolution un = periodicRiccati(*flowOrbit, T, false, b.q1, tol);
  LyapunovData out;
  out.uMinus = st.u;
  out.uPlus = un.u;
  // The stable pass runs from T to 0, so its integral of u carries the opposite sign.
  out.multiplier = std::exp(-riccatiPass(*flowOrbit, T, 0.0, st.u, tol)[1]);
  out.multiplierPlus = std::exp(riccatiPass(*flowOrbit, 0.0, T, un.u, tol)[1]);
  out.lambdaMinus = std::log(out.multiplier) / T;
  out.lambdaPlus = -out.lambdaMinus;
  out.iterations = st.iterations + un.iterations;
  return out;
}

double periodicMultiplier(const CyclicQuotient& quotient, const PeriodicOrbit& orbit, int periods,
                          double tol) {
  if (periods < 1) throw ConfigError("number of periods must be positive");
  const auto flowOrbit = periodicOrbitFlow(quotient, orbit, periods);
  const double T = orbit.period;
  const PeriodicSolution st =
      periodicRiccati(*flowOrbit, T, true, -quotient.model().bounds().q1, tol);
  return std::exp(-riccatiPass(*flowOrbit, periods * T, 0.0, st.u, tol)[1]);
}

// --- scaling identity ---------------------------------------------------------------------

ScalingCheck scalingIdentityCheck(const CyclicQuotient& quotient, const PeriodicOrbit& orbit,
                                  int samples, double extent, double tol) {
  if (samples < 1) throw ConfigError("scaling check needs at least one sample");
  LinearizationOptions opt;
  opt.tol = tol;
  opt.extent = extent;
  const Linearization lin(quotient.model(), orbit.v, opt);
  ScalingCheck out;
  out.multiplier = periodicLyapunov(quotient, orbit, std::min(tol, 1e-10)).multiplier;
  const Mobius inv = quotient.generator().inverse();
  out.samples.resize(static_cast<std::size_t>(samples));
  parallelFor(out.samples.size(), [&](std::size_t i) {
    ScalingSample& s = out.samples[i];
    s.s = samples == 1 ? 0.0 : -extent + 2.0 * extent * static_cast<double>(i) / (samples - 1);
    s.z = lin.horocycle().point(s.s);
    // E_{psi_T v} = E_{gamma v} = d gamma o E_v o gamma^{-1}; frames correspond under d gamma.
    s.pushed = lin(inv.apply(s.z)).transverse;
    s.scaled = out.multiplier * lin.transverseAt(s.s);
    s.residual = std::abs(s.pushed - s.scaled);
  });
  for (const ScalingSample& s : out.samples) out.maxResidual = std::max(out.maxResidual, s.residual);
  return out;
}

// --- Lyapunov constancy ---------------------------------------------------------------------

LyapunovPair lyapunovConstancyWCS(const SurfaceModel& model, const UnitVector& v,
                                  const UnitVector& vp, double horizon, double tol) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  auto chi = [&](const UnitVector& w) {
    auto orbit = std::make_shared<Orbit>(model, w, 1e-11);
    const RiccatiProfile prof(orbit, Branch::Stable, 0.0, horizon, std::max(1e-10, 1e-2 * tol),
                              std::numeric_limits<double>::quiet_NaN(), false);
    return -prof.logY(horizon) / horizon;
  };
  TransferOptions opt;
  opt.tol = tol;
  const TransferValue x = stableTransfer(model, v, vp, opt);
  LyapunovPair out;
  out.chi = chi(v);
  out.chiPrime = chi(vp);
  out.gap = std::abs(out.chi - out.chiPrime);
  out.logTransfer = x.logValue;
  out.offset = x.offset;
  out.bound = (std::abs(x.logValue) + model.bounds().q0 * std::abs(x.offset)) / horizon + tol;
  return out;
}

}  // namespace magflow
