#pragma once

// Forward endpoints, asymptotic vectors, Busemann functions, stable
// horocycles and horocyclic transport.
//
// Boundary points of the half-plane are stored projectively as [a : b] with
// a^2 + b^2 = 1, standing for a/b (b = 0 is the point at infinity).  Every
// computation near a boundary point theta is carried out after the rotation
//     R_theta(z) = (a z + b) / (-b z + a),
// an isometry sending theta to infinity.

#include <memory>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "magflow/dynamics.hpp"
#include "magflow/geometry.hpp"

namespace magflow {

struct BoundaryPoint {
  double a = 1.0, b = 0.0;

  static BoundaryPoint fromReal(double x);
  static BoundaryPoint infinity() { return {1.0, 0.0}; }
  static BoundaryPoint normalized(double a, double b);
  double value() const;  // +inf for the point at infinity
  // Rotation about i sending this point to infinity.
  Mobius toInfinity() const { return {a, b, -b, a}; }
  // Angular separation on the boundary circle, in [0, pi/2].
  double separation(const BoundaryPoint& o) const;
};

// Forward boundary endpoint of the osculating constant-field orbit at v.
// Exact wherever the model equals the hyperbolic plane with constant field.
BoundaryPoint osculatingEndpoint(const SurfaceModel& model, const UnitVector& v);

// Time after which forward endpoints are read off orbits.
double endpointHorizon(const SurfaceModel& model, double tol);

// Forward endpoint v_{+infinity} of the orbit of v.
BoundaryPoint forwardEndpoint(const SurfaceModel& model, const UnitVector& v, double tol = 1e-10);

// Unit vectors at arbitrary points whose orbits end at a fixed boundary point.
class AsymptoticField {
 public:
  AsymptoticField(const SurfaceModel& model, BoundaryPoint theta, double tol = 1e-10);
  AsymptoticField(const SurfaceModel& model, const UnitVector& v, double tol = 1e-10);
  AsymptoticField(SurfaceModel&&, BoundaryPoint, double = 1e-10) = delete;
  AsymptoticField(SurfaceModel&&, const UnitVector&, double = 1e-10) = delete;

  const SurfaceModel& model() const { return *model_; }
  const BoundaryPoint& theta() const { return theta_; }
  double tol() const { return tol_; }

  // v(p, theta).  `guess` is an initial chart angle.
  UnitVector at(Point p, std::optional<double> guess = std::nullopt) const;
  // Mismatch of the forward endpoint of (p, angle) relative to theta, in (-pi, pi].
  double endpointMismatch(const UnitVector& u) const;

 private:
  const SurfaceModel* model_;
  BoundaryPoint theta_;
  double tol_;
  double horizon_;
};

UnitVector asymptoticVector(const SurfaceModel& model, Point p, const UnitVector& v,
                            double tol = 1e-10);

// B_v(z), normalised by B_v(pi v) = 0 and B_v(pi psi_t v) = t.  Safe to
// evaluate concurrently.
class BusemannFunction {
 public:
  BusemannFunction(const SurfaceModel& model, const UnitVector& v, double tol = 1e-8);
  BusemannFunction(SurfaceModel&&, const UnitVector&, double = 1e-8) = delete;
  BusemannFunction(const AsymptoticField& field, const UnitVector& v, double tol = 1e-8);

  const AsymptoticField& field() const { return field_; }
  const UnitVector& generator() const { return v_; }

  double operator()(Point z) const;
  // Same, given the asymptotic vector at z.
  double value(const UnitVector& w) const;

 private:
  AsymptoticField field_;
  UnitVector v_;
  double tol_;
  std::shared_ptr<Orbit> orbit_;  // orbit of v, extended on demand
  std::shared_ptr<std::shared_mutex> mutex_;
  double logHeight(const Orbit& o, double t) const;
  double referenceLogHeight(double t) const;
};

double busemann(const SurfaceModel& model, const UnitVector& v, Point z, double tol = 1e-8);

// Phi_t(p) = pi psi_t v(p, theta).
Point stablePush(const AsymptoticField& field, Point p, double t);
Point stablePush(const SurfaceModel& model, const UnitVector& v, Point p, double t,
                 double tol = 1e-10);

// --- stable horocycles --------------------------------------------------------

struct HorocycleNode {
  double s = 0.0;
  Point point;
  double angle = 0.0;       // chart angle of v_s
  double uMinus = 0.0;
  double wMinus = 0.0;
  double kappa = 0.0;
  double speed = 0.0;       // |dc/ds|
  double normalization = 1.0;  // <dc/ds, N(v_s)>
  double kappaMinus = 0.0;  // geodesic curvature from the integrated curve
  double kappaIdentity = 0.0;  // same from (1+w^2)(u+kappa w) - dw/ds
  bool flagged = false;
  double arcLength = 0.0;   // signed, from s = 0
  double busemannResidual = 0.0;
};

struct HorocycleOptions {
  double step = 1.0 / 32.0;
  int reprojectEvery = 25;
  double tol = 1e-8;
  bool busemannResiduals = true;
};

class HorocycleCurve {
 public:
  const UnitVector& generator() const { return v_; }
  const BoundaryPoint& theta() const { return field_->theta(); }
  const AsymptoticField& field() const { return *field_; }
  const std::vector<HorocycleNode>& nodes() const { return nodes_; }
  double step() const { return h_; }
  double extent() const { return -nodes_.front().s; }

  // Cubic Hermite interpolation between nodes.
  Point point(double s) const;
  double angle(double s) const;
  // Chart velocity dc/ds at s.
  TangentVector velocity(double s) const;
  const HorocycleNode& node(double s) const;  // nearest node

  double maxDrift() const { return maxDrift_; }

 private:
  friend HorocycleCurve traceHorocycle(const SurfaceModel&, const UnitVector&, double,
                                       const HorocycleOptions&);
  std::size_t index(double s, double& frac) const;

  UnitVector v_;
  std::shared_ptr<AsymptoticField> field_;
  double h_ = 0.0;
  double maxDrift_ = 0.0;
  std::vector<HorocycleNode> nodes_;
  std::vector<double> angleRate_;  // d angle / ds at the nodes
};

// Stable horocycle through pi v on s in [-S, S], parametrised by <dc/ds, N(v_s)> = 1.
HorocycleCurve traceHorocycle(const SurfaceModel& model, const UnitVector& v, double S,
                              const HorocycleOptions& opt = {});

// Geodesic curvature of the horocycle at s (interpolated between nodes).
double horocycleCurvature(const HorocycleCurve& curve, double s);

// --- horocyclic transport ------------------------------------------------------

struct HorocyclicTransport {
  double s = 0.0, t = 0.0;
  double zeta = 0.0;      // rotation rho_zeta
  double transport = 0.0; // chart-angle rotation of parallel transport tau
  Point from, to;         // p(s, t) and p(0, t)

  // chi = rho_zeta o tau applied to a vector at p(s, t).
  TangentVector apply(const SurfaceModel& model, const TangentVector& xi) const;
};

// Pushed horocycle arcs sigma in [0, s] of one curve, evaluated at any t >= 0.
class HorocyclicTransportField {
 public:
  HorocyclicTransportField(const HorocycleCurve& curve, double s, int samples = 64,
                           double tMax = 10.0);
  double s() const { return s_; }
  HorocyclicTransport at(double t) const;
  Point pushed(int k, double t) const;

 private:
  const AsymptoticField* field_;
  double s_;
  std::vector<std::shared_ptr<Orbit>> orbits_;  // sigma_k = s k / samples
};

HorocyclicTransport horocyclicTransport(const HorocycleCurve& curve, double s, double t);

}  // namespace magflow
