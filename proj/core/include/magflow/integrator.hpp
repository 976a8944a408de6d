#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension of dopri5.
// Integration may run forward or backward in time; the dense solution is
// queryable anywhere inside the covered span.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "magflow/errors.hpp"

namespace magflow {

template <std::size_t N>
using State = std::array<double, N>;

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initialStep = 0.0;  // 0 selects automatically
  double maxStep = 1.0;
  double minStep = 1e-14;
  std::size_t maxSteps = 2'000'000;
};

enum class IntegrationStatus { Completed, Stopped };

template <std::size_t N>
class DenseSolution {
 public:
  struct Step {
    double t;
    double h;
    std::array<State<N>, 5> rcont;
  };

  DenseSolution() = default;
  DenseSolution(double t0, const State<N>& y0) : t0_(t0), t1_(t0), y0_(y0), y1_(y0) {}

  double startTime() const { return t0_; }
  double endTime() const { return t1_; }
  double lower() const { return std::min(t0_, t1_); }
  double upper() const { return std::max(t0_, t1_); }
  bool covers(double t) const { return t >= lower() - 1e-12 && t <= upper() + 1e-12; }
  const State<N>& initial() const { return y0_; }
  const State<N>& final() const { return y1_; }
  const std::vector<Step>& steps() const { return steps_; }
  IntegrationStatus status() const { return status_; }

  State<N> operator()(double t) const {
    if (steps_.empty()) return y0_;
    const Step& s = steps_[locate(t)];
    const double theta = (t - s.t) / s.h;
    const double theta1 = 1.0 - theta;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = s.rcont[0][i] +
               theta * (s.rcont[1][i] +
                        theta1 * (s.rcont[2][i] + theta * (s.rcont[3][i] + theta1 * s.rcont[4][i])));
    }
    return out;
  }

  void push(Step step, const State<N>& y1) {
    steps_.push_back(std::move(step));
    t1_ = steps_.back().t + steps_.back().h;
    y1_ = y1;
  }
  void setStatus(IntegrationStatus s) { status_ = s; }

 private:
  std::size_t locate(double t) const {
    const bool forward = t1_ >= t0_;
    // Steps are ordered by start time in the direction of integration.
    std::size_t lo = 0, hi = steps_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool after = forward ? (t >= steps_[mid].t) : (t <= steps_[mid].t);
      if (after) lo = mid; else hi = mid;
    }
    return lo;
  }

  double t0_ = 0.0, t1_ = 0.0;
  State<N> y0_{}, y1_{};
  std::vector<Step> steps_;
  IntegrationStatus status_ = IntegrationStatus::Completed;
};

namespace detail {
struct DopriTableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};
}  // namespace detail

// Integrates dy/dt = rhs(t, y, dydt) from t0 to t1.
//   scale(y, sc) fills the per-component magnitude used by the error norm
//   (the tolerance applied to component i is atol + rtol * sc[i]).
//   keepGoing(t, y) is checked after every accepted step; returning false stops
//   the integration and marks the solution Stopped.
template <std::size_t N, class Rhs, class Scale, class KeepGoing>
DenseSolution<N> integrateDense(Rhs&& rhs, double t0, const State<N>& y0, double t1,
                                const IntegratorOptions& opt, Scale&& scale, KeepGoing&& keepGoing) {
  using T = detail::DopriTableau;
  DenseSolution<N> sol(t0, y0);
  if (t1 == t0) return sol;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  State<N> y = y0, k1, k2, k3, k4, k5, k6, k7, ytmp, ynew, sc;
  double t = t0;
  rhs(t, y, k1);

  auto errorNorm = [&](const State<N>& err, const State<N>& ya, const State<N>& yb) {
    State<N> s1, s2;
    scale(ya, s1);
    scale(yb, s2);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double tolI = opt.atol + opt.rtol * std::max(std::abs(s1[i]), std::abs(s2[i]));
      const double r = err[i] / tolI;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(N));
  };

  double h = opt.initialStep;
  if (h <= 0.0) {
    scale(y, sc);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double s = opt.atol + opt.rtol * std::abs(sc[i]);
      d0 += (sc[i] / s) * (sc[i] / s);
      d1 += (k1[i] / s) * (k1[i] / s);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min({h, opt.maxStep, 1e-2});
  }
  h = std::min(h, std::abs(t1 - t0));

  std::size_t nsteps = 0;
  double facOld = 1e-4;
  while (dir * (t1 - t) > 0.0) {
    if (++nsteps > opt.maxSteps) throw NumericError("integrator: too many steps");
    if (h < opt.minStep && std::abs(t1 - t) > opt.minStep)
      throw NumericError("integrator: step size underflow", h);
    bool last = false;
    if (h >= std::abs(t1 - t) * (1.0 - 1e-12)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * T::a21 * k1[i];
    rhs(t + T::c2 * hs, ytmp, k2);
    for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + hs * (T::a31 * k1[i] + T::a32 * k2[i]);
    rhs(t + T::c3 * hs, ytmp, k3);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    rhs(t + T::c4 * hs, ytmp, k4);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    rhs(t + T::c5 * hs, ytmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      ytmp[i] = y[i] + hs * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                             T::a65 * k5[i]);
    rhs(t + hs, ytmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + hs * (T::a71 * k1[i] + T::a73 * k3[i] + T::a74 * k4[i] + T::a75 * k5[i] +
                             T::a76 * k6[i]);
    rhs(t + hs, ynew, k7);
    State<N> err;
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] +
                     T::e7 * k7[i]);
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) finite = finite && std::isfinite(ynew[i]);
    const double en = finite ? errorNorm(err, y, ynew) : std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      typename DenseSolution<N>::Step step;
      step.t = t;
      step.h = hs;
      for (std::size_t i = 0; i < N; ++i) {
        step.rcont[0][i] = y[i];
        step.rcont[1][i] = ynew[i] - y[i];
        step.rcont[2][i] = hs * k1[i] - step.rcont[1][i];
        step.rcont[3][i] = step.rcont[1][i] - hs * k7[i] - step.rcont[2][i];
        step.rcont[4][i] = hs * (T::d1 * k1[i] + T::d3 * k3[i] + T::d4 * k4[i] + T::d5 * k5[i] +
                                 T::d6 * k6[i] + T::d7 * k7[i]);
      }
      t = last ? t1 : t + hs;
      y = ynew;
      k1 = k7;
      sol.push(std::move(step), y);
      if (!keepGoing(t, y)) {
        sol.setStatus(IntegrationStatus::Stopped);
        return sol;
      }
      // Lund-stabilized step control.
      const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.17) *
                                        std::pow(facOld, 0.04),
                                    0.2, 10.0);
      facOld = std::max(en, 1e-4);
      h = std::min(h * fac, opt.maxStep);
    } else {
      const double fac = finite ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.1;
      h *= fac;
    }
  }
  return sol;
}

template <std::size_t N, class Rhs>
DenseSolution<N> integrateDense(Rhs&& rhs, double t0, const State<N>& y0, double t1,
                                const IntegratorOptions& opt) {
  return integrateDense<N>(
      std::forward<Rhs>(rhs), t0, y0, t1, opt,
      [](const State<N>& y, State<N>& sc) { sc = y; },
      [](double, const State<N>&) { return true; });
}

}  // namespace magflow
