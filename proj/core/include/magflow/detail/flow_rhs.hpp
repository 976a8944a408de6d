#pragma once

// Right-hand side of the unit-speed magnetic flow in log-height coordinates.
// State: (x, ln y, chart angle).  The chart velocity of a unit vector with
// chart angle phi is e^{-rho}(cos phi, sin phi); the angle evolves by
//     phi' = kappa + e^{-rho} (rho_y cos phi - rho_x sin phi).

#include <cmath>

#include "magflow/geometry.hpp"
#include "magflow/integrator.hpp"

namespace magflow::detail {

using FlowState = State<3>;

inline Point pointOf(const FlowState& s) { return {s[0], std::exp(s[1])}; }
inline FlowState stateOf(const UnitVector& v) { return {v.base.x, std::log(v.base.y), v.angle}; }
inline UnitVector vectorOf(const FlowState& s) { return {pointOf(s), s[2]}; }

struct FlowRhs {
  const SurfaceModel* model;
  double fieldScale = 1.0;  // 0 gives the geodesic flow

  void operator()(double, const FlowState& s, FlowState& d) const {
    const double y = std::exp(s[1]);
    const LocalFields f = model->fields({s[0], y});
    const double c = std::cos(s[2]), sn = std::sin(s[2]);
    d[0] = f.invFactor * c;
    d[1] = f.invFactor * sn / y;
    d[2] = fieldScale * f.kappa + f.invFactor * (f.rhoY * c - f.rhoX * sn);
  }
};

// Error weights: x is measured in units of the local height so the error
// norm is metric; ln y and the angle are already dimensionless.
struct FlowScale {
  void operator()(const FlowState& s, FlowState& sc) const {
    sc[0] = std::exp(s[1]);
    sc[1] = 1.0;
    sc[2] = 1.0;
  }
};

// Absolute tolerances are interpreted relative to the scale above.
inline IntegratorOptions flowOptions(double tol) {
  IntegratorOptions o;
  o.rtol = tol;
  o.atol = 0.0;
  o.maxStep = 0.5;
  return o;
}

struct InsideChart {
  bool operator()(double, const FlowState& s) const {
    return std::isfinite(s[0]) && std::isfinite(s[1]) && std::abs(s[1]) < 600.0;
  }
};

}  // namespace magflow::detail
