#pragma once

// Adaptive Runge-Kutta-Fehlberg 7(8) driver shared by the flow routines.

#include <array>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/controlled_step_result.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "geoblock/errors.hpp"
#include "geoblock/flow.hpp"

namespace geoblock::detail {

struct GeodesicSystem {
  const MetricProfile* profile;
  template <class S>
  void operator()(const S& z, S& dz, double) const {
    const ProfileValue v = profile->eval(z[1]);
    const double c = std::cos(z[2]);
    dz[0] = c / v.f;
    dz[1] = std::sin(z[2]);
    dz[2] = v.df * c / v.f;
  }
};

// Geodesic plus one normal Jacobi field: J'' = (f''/f) J.
struct JacobiSystem {
  const MetricProfile* profile;
  void operator()(const std::array<double, 5>& z, std::array<double, 5>& dz, double) const {
    const ProfileValue v = profile->eval(z[1]);
    const double c = std::cos(z[2]);
    dz[0] = c / v.f;
    dz[1] = std::sin(z[2]);
    dz[2] = v.df * c / v.f;
    dz[3] = z[4];
    dz[4] = (v.d2f / v.f) * z[3];
  }
};

// Geodesic plus two Jacobi columns.
struct MonodromySystem {
  const MetricProfile* profile;
  void operator()(const std::array<double, 7>& z, std::array<double, 7>& dz, double) const {
    const ProfileValue v = profile->eval(z[1]);
    const double c = std::cos(z[2]);
    const double k = v.d2f / v.f;
    dz[0] = c / v.f;
    dz[1] = std::sin(z[2]);
    dz[2] = v.df * c / v.f;
    dz[3] = z[4];
    dz[4] = k * z[3];
    dz[5] = z[6];
    dz[6] = k * z[5];
  }
};

// Geodesic plus the derivatives of the flow with respect to the initial Y
// and theta (the flow does not depend on the initial X).
struct VariationalSystem {
  const MetricProfile* profile;
  void operator()(const std::array<double, 9>& z, std::array<double, 9>& dz, double) const {
    const ProfileValue v = profile->eval(z[1]);
    const double c = std::cos(z[2]);
    const double s = std::sin(z[2]);
    const double inv = 1.0 / v.f;
    dz[0] = c * inv;
    dz[1] = s;
    dz[2] = v.df * c * inv;
    const double a0y = -c * v.df * inv * inv, a0t = -s * inv;
    const double a1t = c;
    const double a2y = c * (v.d2f * v.f - v.df * v.df) * inv * inv, a2t = -v.df * s * inv;
    for (int col = 0; col < 2; ++col) {
      const double* w = &z[3 + 3 * col];
      double* dw = &dz[3 + 3 * col];
      dw[0] = a0y * w[1] + a0t * w[2];
      dw[1] = a1t * w[2];
      dw[2] = a2y * w[1] + a2t * w[2];
    }
  }
};

template <std::size_t N, class System>
class Driver {
 public:
  using State = std::array<double, N>;
  using Stepper = boost::numeric::odeint::runge_kutta_fehlberg78<State>;
  using Controlled = boost::numeric::odeint::controlled_runge_kutta<Stepper>;
  using ErrorChecker = typename Controlled::error_checker_type;

  Driver(System sys, const FlowOptions& opts)
      : sys_(sys), opts_(opts), controlled_(ErrorChecker(opts.abs_tol, opts.rel_tol)) {}

  // Advance x from t0 to t1 (> t0) with steps no longer than max_step. The
  // observer sees every accepted step as (t_prev, x_prev, t, x) and may stop
  // the integration early by returning false. Returns the final time.
  template <class Observer>
  double advance(State& x, double t0, double t1, double max_step, Observer&& obs) {
    double t = t0;
    double dt = std::min({initial_dt_, t1 - t0, max_step});
    long steps = 0;
    while (t < t1) {
      const double remaining = t1 - t;
      bool last = false;
      if (dt >= remaining) {
        dt = remaining;
        last = true;
      }
      dt = std::min(dt, max_step);
      const State prev = x;
      const double t_prev = t;
      double t_try = t;
      double dt_try = dt;
      const auto res = controlled_.try_step(sys_, x, t_try, dt_try);
      if (res == boost::numeric::odeint::success) {
        t = (last && dt >= remaining) ? t1 : t_try;
        dt = dt_try;
        if (++steps > opts_.max_steps) {
          throw Error(ErrorKind::StepFailure, "integration exceeded the step budget");
        }
        if (!obs(t_prev, prev, t, x)) break;
      } else {
        dt = dt_try;
        if (dt < opts_.min_step) {
          throw Error(ErrorKind::StepFailure, "adaptive step control cannot meet tolerance");
        }
      }
    }
    initial_dt_ = std::max(dt, 1e-4);
    return t;
  }

  // One uncontrolled step of size h from x (dense evaluation inside an
  // accepted step).
  State single_step(const State& x, double t, double h) {
    State out = x;
    if (h != 0.0) stepper_.do_step(sys_, out, t, h);
    return out;
  }

 private:
  System sys_;
  FlowOptions opts_;
  Controlled controlled_;
  Stepper stepper_;
  double initial_dt_ = 1e-2;
};

}  // namespace geoblock::detail
