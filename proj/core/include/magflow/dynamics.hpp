#pragma once

// Magnetic flow, Jacobi fields in the moving frame (T, N), the Wronskian and
// the stable/unstable Riccati solutions.
//
// A Jacobi field along t -> psi_t v is written j = x T + y N; it satisfies
//     x' = kappa y,   y'' + q y = 0,
// with q = K + kappa^2 - <N, grad kappa>.

#include <memory>
#include <vector>

#include "magflow/detail/flow_rhs.hpp"
#include "magflow/geometry.hpp"
#include "magflow/integrator.hpp"

namespace magflow {

double jacobiEndomorphism(const SurfaceModel& model, const UnitVector& v);

struct OrbitNode {
  double t = 0.0;
  UnitVector v;
  double kappa = 0.0;
  double q = 0.0;
};

// Dense solution of the flow through v on a growing time interval containing 0.
// The model must outlive the orbit.
class Orbit {
 public:
  Orbit(const SurfaceModel& model, const UnitVector& v, double tol = 1e-10);
  Orbit(SurfaceModel&&, const UnitVector&, double = 1e-10) = delete;

  const SurfaceModel& model() const { return *model_; }
  const UnitVector& initial() const { return v_; }
  double tol() const { return tol_; }

  // Grows the covered interval to contain t.  Returns false when the orbit
  // leaves the chart first; the covered interval then ends at the exit.
  bool extendTo(double t);
  double lower() const;
  double upper() const;
  bool covers(double t) const { return t >= lower() - 1e-12 && t <= upper() + 1e-12; }
  bool leftDomain() const { return exitedForward_ || exitedBackward_; }

  UnitVector at(double t) const;
  detail::FlowState stateAt(double t) const;
  // Accepted integrator nodes in increasing time.
  std::vector<OrbitNode> nodes() const;

 private:
  const SurfaceModel* model_;
  UnitVector v_;
  double tol_;
  std::vector<DenseSolution<3>> forward_, backward_;
  bool exitedForward_ = false, exitedBackward_ = false;
};

// Orbit over [ta, tb] (ta <= 0 <= tb).  Leaving the chart is reported via
// Orbit::leftDomain() with the partial segment retained.
Orbit integrateFlow(const SurfaceModel& model, const UnitVector& v, double ta, double tb,
                    double tol = 1e-10);
// psi_t v; throws DomainError if the orbit leaves the chart.
UnitVector flow(const SurfaceModel& model, const UnitVector& v, double t, double tol = 1e-10);

// Geodesic curvature of a chart curve through three nearby samples, using the
// conformal formula k = e^{-rho}(k_flat - d rho / d n_flat).
double curveGeodesicCurvature(const SurfaceModel& model, Point a, Point b, Point c);

// --- Jacobi fields ---------------------------------------------------------

struct JacobiComponents {
  double x = 0.0;       // tangential
  double y = 0.0;       // orthogonal
  double yPrime = 0.0;  // d y / dt
};

double wronskian(const JacobiComponents& j1, const JacobiComponents& j2);

class JacobiSolution {
 public:
  JacobiSolution(DenseSolution<6> forward, DenseSolution<6> backward)
      : forward_(std::move(forward)), backward_(std::move(backward)) {}
  double lower() const { return backward_.upper() > backward_.lower() ? backward_.lower() : 0.0; }
  double upper() const { return forward_.upper(); }
  JacobiComponents at(double t) const;
  UnitVector vectorAt(double t) const;

 private:
  const DenseSolution<6>& piece(double t) const;
  DenseSolution<6> forward_, backward_;
};

// Integrates the Jacobi equations jointly with the flow over the span of `orbit`.
JacobiSolution evolveJacobi(const Orbit& orbit, const JacobiComponents& init);

// --- Riccati solutions -------------------------------------------------------

// T_R = ln(1/tol)/(2 q1) + 5/q1: seed errors decay below tol.
double riccatiHorizon(const ModelBounds& b, double tol);
// Horizon after which the tail of the w-integral is below tol.
double tangentialHorizon(const ModelBounds& b, double tol);

enum class Branch { Stable, Unstable };

// u_-(psi_t v) (stable) or u_+(psi_t v) (unstable) on a window [t0, t1],
// together with ln y_±(v, t) and w_±(psi_t v).
class RiccatiProfile {
 public:
  // seed: value of u at the far end of the integration; NaN selects -q1 for
  // the stable branch and +q1 for the unstable one.  Without `tangential` the
  // horizon only resolves u and ln y, and w is not accurate.
  RiccatiProfile(std::shared_ptr<Orbit> orbit, Branch branch, double t0, double t1, double tol,
                 double seed = std::numeric_limits<double>::quiet_NaN(), bool tangential = true);

  Branch branch() const { return branch_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double horizon() const { return horizon_; }
  double errorEstimate() const { return error_; }
  const std::shared_ptr<Orbit>& orbit() const { return orbit_; }

  double u(double t) const;
  // ln y_±(v, t) relative to t = 0 (requires 0 in the window).
  double logY(double t) const { return logYBetween(0.0, t); }
  // ln y_±(psi_a v, b - a).
  double logYBetween(double a, double b) const;
  double w(double t) const;

 private:
  State<3> state(double t) const;

  std::shared_ptr<Orbit> orbit_;
  Branch branch_;
  double t0_, t1_, horizon_, error_;
  DenseSolution<3> sol_;
};

struct StabilityData {
  double uMinus = 0.0, uPlus = 0.0;
  double wMinus = 0.0, wPlus = 0.0;
  double horizon = 0.0;
  double errorEstimate = 0.0;
};

StabilityData stabilityData(const SurfaceModel& model, const UnitVector& v, double tol = 1e-8);
double uMinus(const SurfaceModel& model, const UnitVector& v, double tol = 1e-8);
double wMinus(const SurfaceModel& model, const UnitVector& v, double tol = 1e-8);

}  // namespace magflow
