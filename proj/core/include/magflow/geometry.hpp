#pragma once

// Conformal models of negatively curved surfaces on the upper half-plane.
//
// A model carries the metric e^{2 rho}(dx^2 + dy^2) with
//     rho(x, y) = -ln y + sum_i b_i(x, y)
// and a magnetic field
//     kappa(x, y) = kappa_base + sum_j k_j(x, y).
// Every bump is a compactly supported polynomial profile of the hyperbolic
// distance to its centre, so outside the union of supports the model is the
// exact hyperbolic plane with constant field.  A model may also be periodic
// under the dilation z -> e^ell z, in which case every bump is replicated at
// the centres e^{n ell} c.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "magflow/errors.hpp"

namespace magflow {

struct Point {
  double x = 0.0;
  double y = 1.0;
};

// Unit tangent vector: base point plus direction measured in the chart frame.
struct UnitVector {
  Point base;
  double angle = 0.0;
};

// Tangent vector in the chart basis (d/dx, d/dy).
struct TangentVector {
  Point base;
  double cx = 0.0;
  double cy = 0.0;
};

struct Bump {
  double amplitude = 0.0;
  Point center;
  double radius = 1.0;  // hyperbolic radius of the support
};

// Values and analytic derivatives of the model fields at a chart point.
struct LocalFields {
  double rho = 0.0;                 // log conformal factor
  double rhoX = 0.0, rhoY = 0.0;    // flat gradient of rho
  double invFactor = 1.0;           // e^{-rho}: metric length -> chart length
  double curvature = -1.0;          // Gaussian curvature K
  double kappa = 0.0;
  double kappaX = 0.0, kappaY = 0.0;  // flat gradient of kappa
};

// Grid-certified pinching data, including the 10% safety margin.
//   -k0^2 <= K <= -k1^2 and -q0^2 <= q <= -q1^2.
struct ModelBounds {
  double k0 = 1.0, k1 = 1.0;
  double q0 = 1.0, q1 = 1.0;
  double kappaSup = 0.0;      // sup |kappa|
  double gradKappaSup = 0.0;  // sup of the metric norm of grad kappa

  // C_1 = 1 + (|kappa| + |kappa|^2) / q1 + q0.
  double c1() const { return 1.0 + (kappaSup + kappaSup * kappaSup) / q1 + q0; }
};

// Orientation-preserving isometry z -> (a z + b) / (c z + d) of the half-plane.
struct Mobius {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  Point apply(Point p) const;
  // Boundary action; +infinity stands for the point at infinity.
  double applyBoundary(double x) const;
  // Chart-angle rotation of tangent vectors at p.
  double angleShift(Point p) const;
  UnitVector apply(const UnitVector& v) const;
  Mobius inverse() const;
  Mobius compose(const Mobius& inner) const;  // this o inner
  static Mobius dilation(double factor) { return {factor, 0.0, 0.0, 1.0}; }
  static Mobius translation(double shift) { return {1.0, shift, 0.0, 1.0}; }
};

class SurfaceModel {
 public:
  // Exact hyperbolic plane with constant magnetic field.
  explicit SurfaceModel(double kappaBase = 0.0);
  SurfaceModel(double kappaBase, std::vector<Bump> rhoBumps, std::vector<Bump> kappaBumps,
               std::optional<double> period = std::nullopt);

  LocalFields fields(Point p) const;
  double gaussCurvature(Point p) const { return fields(p).curvature; }
  double kappa(Point p) const { return fields(p).kappa; }

  const ModelBounds& bounds() const { return bounds_; }
  double kappaBase() const { return kappaBase_; }
  const std::vector<Bump>& rhoBumps() const { return rhoBumps_; }
  const std::vector<Bump>& kappaBumps() const { return kappaBumps_; }
  const std::optional<double>& period() const { return period_; }

  // True when rho = -ln y and kappa is constant everywhere.
  bool isConstant() const { return rhoBumps_.empty() && kappaBumps_.empty(); }
  bool hasMetricPerturbation() const { return !rhoBumps_.empty(); }

  // Hyperbolic disc containing every non-periodic bump support (chart
  // Euclidean description: centre and radius).  False if periodic or constant.
  bool insideSupport(Point p) const;

  SurfaceModel withPeriod(double ell) const;
  // Image of the model under an isometry g: fields of the result at g(z)
  // equal the fields of this model at z.  Not available for periodic models.
  SurfaceModel pushforward(const Mobius& g) const;

  std::string describe() const;

 private:
  void certifyBounds();

  double kappaBase_ = 0.0;
  std::vector<Bump> rhoBumps_;
  std::vector<Bump> kappaBumps_;
  std::optional<double> period_;
  ModelBounds bounds_;
};

// --- tangent-space operations (conformal chart) ---------------------------

inline void requireDomain(Point p) {
  if (!(p.y > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
    throw DomainError("point outside the upper half-plane");
}

double gaussCurvature(const SurfaceModel& model, Point p);

TangentVector rotateN(const SurfaceModel& model, const TangentVector& xi);
double metricInner(const SurfaceModel& model, const TangentVector& a, const TangentVector& b);
double metricNorm(const SurfaceModel& model, const TangentVector& a);
TangentVector toTangent(const SurfaceModel& model, const UnitVector& v);
UnitVector rotateN(const UnitVector& v);

// Wraps an angle into (-pi, pi].
double wrapAngle(double a);

// Rotation of chart angles produced by parallel transport along the polyline
// through `path` (from front to back).
double transportRotation(const SurfaceModel& model, std::span<const Point> path);
TangentVector parallelTransport(const SurfaceModel& model, std::span<const Point> path,
                                const TangentVector& xi);

// --- distances and geodesics ---------------------------------------------

// Closed-form distance of the hyperbolic metric -ln y (ignores bumps).
double hyperbolicDistance(Point p, Point q);

struct GeodesicChord {
  double angle = 0.0;   // initial chart angle at the start point
  double length = 0.0;  // metric length
  double residual = 0.0;
};

// Inverse exponential map: geodesic from p to q of the model metric.
GeodesicChord geodesicInverse(const SurfaceModel& model, Point p, Point q, double tol = 1e-12);
// Endpoint of the unit-speed geodesic starting at (p, angle) after `length`.
UnitVector geodesicEndpoint(const SurfaceModel& model, const UnitVector& start, double length,
                            double tol = 1e-12);
double distance(const SurfaceModel& model, Point p, Point q, double tol = 1e-12);

}  // namespace magflow
