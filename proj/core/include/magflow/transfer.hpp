#pragma once

// Stable and unstable transfer, the linearization E_v and its identities.
//
// For v' on the centre-stable manifold of v at Busemann level r = B_v(pi v'),
// the stable transfer compares decay rates at matched levels:
//     X(v, v') = lim_{t -> inf} y_-(v', t) / y_-(v, t + r).
// For r = 0 (v' on the stable manifold) this is the plain ratio at equal
// times; the level matching makes X(v, v') X(v', v) = 1 and the cocycle
// identity exact for every pair on one centre-stable manifold.
//
// E_v(p) is returned in the orthonormal frame (v, N(v)):
//     E_v(p) = B_v(p) v + e_v(s) N(v),   e_v(s) = int_0^s X(v, v_sigma) d sigma,
// where s locates Phi_{-B_v(p)}(p) on the stable horocycle through pi v.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "magflow/dynamics.hpp"
#include "magflow/geometry.hpp"
#include "magflow/horocycle.hpp"

namespace magflow {

struct TransferValue {
  double value = 1.0;
  double logValue = 0.0;
  double horizon = 0.0;  // t at which the ratio was read
  double error = 0.0;    // Cauchy band on the value
  double offset = 0.0;   // Busemann level of v' relative to v
  // Unstable transfer only: direct ratio y_+(v', t) / y_+(v, t + r) at t = 10.
  double crossCheck = std::numeric_limits<double>::quiet_NaN();
  bool flagged = false;
};

struct TransferOptions {
  double tol = 1e-8;
  std::optional<double> horizon;  // read at this t instead of stopping adaptively
  double step = 1.0;              // Cauchy grid spacing in t
};

class ShadowedDecay;

// Largest endpoint mismatch (chart angle at pi v') accepted as asymptotic.
inline constexpr double kAsymptoticTolerance = 1e-6;

// Transfers towards a fixed v.  Const methods are safe to call concurrently.
class StableTransferContext {
 public:
  StableTransferContext(const SurfaceModel& model, const UnitVector& v, double tol = 1e-8);
  StableTransferContext(SurfaceModel&&, const UnitVector&, double = 1e-8) = delete;

  const SurfaceModel& model() const { return *model_; }
  const UnitVector& generator() const { return v_; }
  const AsymptoticField& field() const { return *field_; }
  const BusemannFunction& busemann() const { return *busemann_; }
  double tol() const { return tol_; }

  // Throws PreconditionError unless v' ends at the endpoint of v.
  void requireAsymptotic(const UnitVector& vp) const;

  TransferValue operator()(const UnitVector& vp, std::optional<double> offset = std::nullopt,
                           const TransferOptions& opt = {}) const;

  // ln y_-(v, t) and psi_t v along the base orbit.
  double logDecay(double t) const;
  UnitVector flowed(double t) const;

 private:
  double baseLogY(double a, double b) const;

  const SurfaceModel* model_;
  UnitVector v_;
  double tol_;
  double window_;
  std::shared_ptr<AsymptoticField> field_;
  std::shared_ptr<BusemannFunction> busemann_;
  std::shared_ptr<Orbit> orbit_;
  std::shared_ptr<RiccatiProfile> profile_;
  std::shared_ptr<ShadowedDecay> shadow_;  // generator-periodic models only
};

TransferValue stableTransfer(const SurfaceModel& model, const UnitVector& v, const UnitVector& vp,
                             const TransferOptions& opt = {});

// X~(v, v') xi = X <xi, N(v')> N(v) + <xi, v'> v, as a chart vector at pi v.
TangentVector extendedStableTransfer(const SurfaceModel& model, const UnitVector& v,
                                     const UnitVector& vp, double transfer,
                                     const TangentVector& xi);
TangentVector extendedStableTransfer(const SurfaceModel& model, const UnitVector& v,
                                     const UnitVector& vp, const TangentVector& xi,
                                     double tol = 1e-8);

// (u_+ - u_-)(v') / (u_+ - u_-)(v) * X(v', v), with the direct forward ratio
// at t = 10 as cross-check; `flagged` is set when they disagree beyond
// max(tol, e^{-10 q1}) * 10.
TransferValue unstableTransfer(const SurfaceModel& model, const UnitVector& v, const UnitVector& vp,
                               double tol = 1e-8);

// --- linearization ---------------------------------------------------------------

struct LinearizationOptions {
  double extent = 2.0;  // traced horocycle parameter range [-extent, extent]
  double step = 1.0 / 32.0;
  double tol = 1e-8;
};

struct LinearizationSample {
  Point p;
  double longitudinal = 0.0;  // <E_v(p), v> = B_v(p)
  double transverse = 0.0;    // <E_v(p), N(v)> = e_v(s)
  double s = 0.0;             // horocycle parameter of Phi_{-B}(p)
  double error = 0.0;
};

// 2x2 map between frames: columns are the images of (v', N(v')), rows the
// components along (v, N(v)).
struct FrameMatrix {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
  double det() const { return a11 * a22 - a12 * a21; }
};

struct DerivativeReport {
  Point p;
  FrameMatrix analytic;          // [[1, -w_-(v')], [0, X(v, v')]]
  FrameMatrix diagonalForm;         // extended stable transfer: [[1, 0], [0, X(v, v')]]
  FrameMatrix finiteDifference;  // central differences of E_v, chart step h
  double transfer = 1.0;
  double wMinus = 0.0;
  double relativeError = 0.0;  // analytic vs finite differences
  bool flagged = false;        // relative error above 1e-3
};

class Linearization {
 public:
  Linearization(const SurfaceModel& model, const UnitVector& v, const LinearizationOptions& opt = {});
  Linearization(SurfaceModel&&, const UnitVector&, const LinearizationOptions& = {}) = delete;

  const SurfaceModel& model() const { return transfer_->model(); }
  const UnitVector& generator() const { return transfer_->generator(); }
  const HorocycleCurve& horocycle() const { return *curve_; }
  const StableTransferContext& transfer() const { return *transfer_; }
  const std::vector<double>& nodeTransfers() const { return x_; }

  // X(v, v_s) and e_v(s) on the traced range.
  double transferAt(double s) const;
  double transverseAt(double s) const;

  LinearizationSample operator()(Point p) const;
  // Same, given the asymptotic vector at p.
  LinearizationSample fromVector(const UnitVector& w) const;

  DerivativeReport derivative(Point p, double h = 1e-4) const;

  // Finite-time expression y_-(v, t)^{-1} <exp^{-1}_{pi psi_t v} Phi_t(z), N(psi_t v)>
  // for z on the horocycle through pi v.
  double finiteTimeTransverse(Point z, double t) const;

 private:
  double locate(Point q, double& residual) const;

  std::shared_ptr<StableTransferContext> transfer_;
  std::shared_ptr<HorocycleCurve> curve_;
  std::vector<double> x_, dx_, e_;
  double tol_;
};

LinearizationSample linearize(const SurfaceModel& model, const UnitVector& v, Point p,
                              double tol = 1e-8);

// |E_{psi_t v}(p) - [(<E_v(p), v> - t) psi_t v + y_-(v, t) <E_v(p), N(v)> N(psi_t v)]|
// with both sides from independent linearizations.
double linearizationEquivariance(const SurfaceModel& model, const UnitVector& v, Point p, double t,
                                 double tol = 1e-8);

DerivativeReport linearizationDerivative(const SurfaceModel& model, const UnitVector& v, Point p,
                                         double tol = 1e-8);

struct MatchReport {
  std::size_t gridSize = 0;
  double supResidual = 0.0;
  Point argmaxPoint;
};

// sup over the grid of |E2_{v2}(f(p)) - E1_{v1}(p)| with frames identified by
// v1 -> v2, N(v1) -> N(v2).
MatchReport linearizationMatch(const SurfaceModel& model1, const SurfaceModel& model2,
                               const std::function<Point(Point)>& f, const UnitVector& v1,
                               const UnitVector& v2, const std::vector<Point>& grid,
                               const LinearizationOptions& opt = {});

}  // namespace magflow
