#pragma once

// Periodic orbits on cyclic quotients H / <gamma>, gamma(z) = e^ell z, their
// Lyapunov exponents, and the exponent-scaling identity of the linearization.
//
// The axis of gamma is the imaginary half-line.  Orbits are shot from the
// geodesic orthogonal to the axis through i, parametrised by the signed
// distance d: z(d) = (tanh d, sech d).

#include <vector>

#include "magflow/dynamics.hpp"
#include "magflow/geometry.hpp"
#include "magflow/transfer.hpp"

namespace magflow {

class CyclicQuotient {
 public:
  // Validates generator invariance of the model fields by sampling.
  CyclicQuotient(const SurfaceModel& model, double ell);
  CyclicQuotient(SurfaceModel&&, double) = delete;

  const SurfaceModel& model() const { return *model_; }
  double ell() const { return ell_; }
  Mobius generator() const { return Mobius::dilation(std::exp(ell_)); }
  double invarianceResidual() const { return residual_; }

 private:
  const SurfaceModel* model_;
  double ell_;
  double residual_ = 0.0;
};

struct PeriodicOrbit {
  UnitVector v;
  double period = 0.0;
  double offset = 0.0;      // signed distance d of pi v from the axis
  double angleShift = 0.0;  // angle relative to the direction orthogonal to the geodesic z(d)
  double residual = 0.0;    // |psi_T v - d gamma(v)| in shooting coordinates
  int iterations = 0;
};

// Newton shooting on (d, angleShift, T).
PeriodicOrbit findPeriodicOrbit(const CyclicQuotient& quotient, double tol = 1e-10);

struct LyapunovData {
  double lambdaMinus = 0.0, lambdaPlus = 0.0;
  double multiplier = 1.0;      // y_-(v, T)
  double multiplierPlus = 1.0;  // y_+(v, T)
  double uMinus = 0.0, uPlus = 0.0;  // periodic Riccati values at v
  int iterations = 0;
};

// Periodic Riccati solutions by iterating one-period passes until u repeats.
LyapunovData periodicLyapunov(const CyclicQuotient& quotient, const PeriodicOrbit& orbit,
                              double tol = 1e-10);

// y_-(v, n T) from the periodic stable solution integrated over n periods.
double periodicMultiplier(const CyclicQuotient& quotient, const PeriodicOrbit& orbit, int periods,
                          double tol = 1e-10);

struct ScalingSample {
  double s = 0.0;       // horocycle parameter of z
  Point z;
  double pushed = 0.0;  // <E_{psi_T v}(z), N>, through d gamma
  double scaled = 0.0;  // y_-(v, T) <E_v(z), N(v)>
  double residual = 0.0;
};

struct ScalingCheck {
  std::vector<ScalingSample> samples;
  double multiplier = 1.0;
  double maxResidual = 0.0;
};

// Samples z on the stable horocycle of v with s evenly spaced in [-extent, extent].
ScalingCheck scalingIdentityCheck(const CyclicQuotient& quotient, const PeriodicOrbit& orbit,
                                  int samples = 20, double extent = 1.0, double tol = 1e-8);

struct LyapunovPair {
  double chi = 0.0, chiPrime = 0.0;  // -(1/T) ln y_-(., T)
  double gap = 0.0;
  double logTransfer = 0.0;  // ln X(v, v')
  double offset = 0.0;       // Busemann level of v'
  double bound = 0.0;        // (|ln X| + q0 |offset|) / T + tol
};

LyapunovPair lyapunovConstancyWCS(const SurfaceModel& model, const UnitVector& v,
                                  const UnitVector& vp, double horizon, double tol = 1e-8);

}  // namespace magflow
