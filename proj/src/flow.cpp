#include "geoblock/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <boost/numeric/odeint.hpp>

#include "geoblock/errors.hpp"
#include "integrator.hpp"

namespace geoblock {

PhaseState state_from_heading(const MetricProfile& profile, CoverPoint P, double theta) {
  const double f = profile.f(P.Y);
  return {P, std::cos(theta) / f, std::sin(theta)};
}

double heading(const MetricProfile& profile, const PhaseState& s) {
  const double f = profile.f(s.pos.Y);
  return std::atan2(s.eta, f * s.xi);
}

double speed_squared(const MetricProfile& profile, const PhaseState& s) {
  const double f = profile.f(s.pos.Y);
  return f * f * s.xi * s.xi + s.eta * s.eta;
}

PhaseState normalized(const MetricProfile& profile, PhaseState s) {
  const double v = std::sqrt(speed_squared(profile, s));
  if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero tangent vector");
  s.xi /= v;
  s.eta /= v;
  return s;
}

PhaseDerivative geodesic_rhs(const MetricProfile& profile, const PhaseState& s) {
  const ProfileValue v = profile.eval(s.pos.Y);
  PhaseDerivative d;
  d.dX = s.xi;
  d.dY = s.eta;
  d.dxi = -2.0 * (v.df / v.f) * s.xi * s.eta;
  d.deta = v.f * v.df * s.xi * s.xi;
  return d;
}

double clairaut(const MetricProfile& profile, const PhaseState& s) {
  const double f = profile.f(s.pos.Y);
  return f * f * s.xi;
}

PhaseState sample_state(const MetricProfile& profile, const TraceSample& s) {
  return state_from_heading(profile, {s.X, s.Y}, s.theta);
}

double sample_clairaut(const MetricProfile& profile, const TraceSample& s) {
  return profile.f(s.Y) * std::cos(s.theta);
}

namespace {

using detail::Driver;
using detail::GeodesicSystem;
using State3 = std::array<double, 3>;

TraceSample to_sample(double t, const State3& z) { return {t, z[0], z[1], z[2]}; }

struct Step {
  double t0, t1;
  State3 x0, x1;
};

// Time inside an accepted step where component `comp` of the state reaches
// `value` (Newton on re-steps, safeguarded by the step bracket).
template <class Drv>
std::pair<double, State3> locate(const MetricProfile& profile, Drv& drv, const Step& st, int comp,
                                 double value) {
  const double span = st.t1 - st.t0;
  double lo = 0.0, hi = span;
  const double d = st.x1[comp] - st.x0[comp];
  const double dir = d >= 0.0 ? 1.0 : -1.0;
  double tau = d != 0.0 ? std::clamp(span * (value - st.x0[comp]) / d, 0.0, span) : 0.5 * span;
  State3 xt = st.x1;
  for (int it = 0; it < 40; ++it) {
    xt = drv.single_step(st.x0, st.t0, tau);
    const double g = (xt[comp] - value) * dir;
    if (g > 0.0) hi = tau; else lo = tau;
    const double rate = comp == 0 ? std::cos(xt[2]) / profile.f(xt[1]) : std::sin(xt[2]);
    double next = rate != 0.0 ? tau - (xt[comp] - value) / rate : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - tau) < 1e-15 * (1.0 + span);
    tau = next;
    if (done) break;
  }
  xt = drv.single_step(st.x0, st.t0, tau);
  return {tau, xt};
}


struct Closure {
  double t;
  State3 x;
  int k;
};

// The metric does not depend on x, so once Y returns to Y0 + k (k in
// {-1, 0, 1}) moving in its initial vertical direction the heading repeats
// and the rest of the geodesic is a translate of the first period.
template <class Drv>
std::optional<Closure> closure_in(const MetricProfile& profile, Drv& drv, const Step& st,
                                  CoverPoint P, double vdir) {
  std::optional<Closure> best;
  if (vdir == 0.0) return best;
  for (int k = -1; k <= 1; ++k) {
    const double psi = P.Y + static_cast<double>(k);
    if ((st.x0[1] - psi) * vdir < 0.0 && (st.x1[1] - psi) * vdir >= 0.0) {
      const auto [tau, xc] = locate(profile, drv, st, 1, psi);
      if (st.t0 + tau > 0.0 && (!best || st.t0 + tau < best->t)) best = Closure{st.t0 + tau, xc, k};
    }
  }
  return best;
}

// State at arclength t of a periodic geodesic from its first-period steps.
template <class Drv>
State3 periodic_state(Drv& drv, const std::vector<Step>& steps, double period, double dX, int dY,
                      double t) {
  const double j = std::floor(t / period);
  const double rem = t - j * period;
  auto it = std::upper_bound(steps.begin(), steps.end(), rem,
                             [](double v, const Step& s) { return v < s.t1; });
  if (it == steps.end()) it = steps.end() - 1;
  State3 x = drv.single_step(it->x0, it->t0, rem - it->t0);
  x[0] += j * dX;
  x[1] += j * static_cast<double>(dY);
  return x;
}


}  // namespace

GeodesicTrace integrate_heading(const MetricProfile& profile, CoverPoint P, double theta,
                                double length, const FlowOptions& opts) {
  if (!(length > 0.0)) throw Error(ErrorKind::InvalidArgument, "integration length must be positive");
  GeodesicSystem sys{&profile};
  Driver<3, GeodesicSystem> drv(sys, opts);
  State3 z{P.X, P.Y, theta};
  GeodesicTrace trace;
  trace.samples.reserve(static_cast<std::size_t>(length / opts.output_step) + 2);
  trace.samples.push_back(to_sample(0.0, z));
  const double vs = std::sin(theta);
  const double vdir = !opts.translate ? 0.0 : (vs > 0.0 ? 1.0 : (vs < 0.0 ? -1.0 : 0.0));
  auto emit = [&](const Step& st) {
    const double span = st.t1 - st.t0;
    const auto pieces = static_cast<long>(std::ceil(span / opts.output_step - 1e-9));
    for (long k = 1; k < pieces; ++k) {
      const double tau = span * static_cast<double>(k) / static_cast<double>(pieces);
      trace.samples.push_back(to_sample(st.t0 + tau, drv.single_step(st.x0, st.t0, tau)));
    }
    trace.samples.push_back(to_sample(st.t1, st.x1));
  };
  std::vector<Step> steps;
  std::optional<Closure> closed;
  // Natural adaptive steps; samples inside a long step come from re-stepping
  // its start state, so the step sequence matches uncapped integrations.
  drv.advance(z, 0.0, length, std::numeric_limits<double>::infinity(),
              [&](double t0, const State3& x0, double t1, const State3& x1) {
                Step st{t0, t1, x0, x1};
                if (vdir != 0.0) {
                  closed = closure_in(profile, drv, st, P, vdir);
                  if (closed && closed->t < length) {
                    st.t1 = closed->t;
                    st.x1 = closed->x;
                    steps.push_back(st);
                    emit(st);
                    return false;
                  }
                  closed.reset();
                  steps.push_back(st);
                }
                emit(st);
                return true;
              });
  if (!closed) return trace;
  const double period = closed->t;
  const double dX = closed->x[0] - P.X;
  const int dY = closed->k;
  const std::size_t first = trace.samples.size();
  for (int j = 1;; ++j) {
    const double jt = static_cast<double>(j) * period;
    for (std::size_t i = 1; i < first; ++i) {
      const TraceSample& s = trace.samples[i];
      if (s.t + jt >= length) {
        const State3 xe = periodic_state(drv, steps, period, dX, dY, length);
        trace.samples.push_back(to_sample(length, xe));
        return trace;
      }
      trace.samples.push_back({s.t + jt, s.X + j * dX, s.Y + j * static_cast<double>(dY), s.theta});
    }
  }
}

GeodesicTrace integrate(const MetricProfile& profile, const PhaseState& start, double length,
                        const FlowOptions& opts) {
  const PhaseState s = normalized(profile, start);
  return integrate_heading(profile, s.pos, heading(profile, s), length, opts);
}

std::array<double, 3> flow_map(const MetricProfile& profile, const std::array<double, 3>& z,
                               double h, const FlowOptions& opts) {
  State3 x = z;
  if (h == 0.0) return x;
  GeodesicSystem sys{&profile};
  Driver<3, GeodesicSystem> drv(sys, opts);
  if (h > 0.0) {
    drv.advance(x, 0.0, h, std::numeric_limits<double>::infinity(),
                [](double, const State3&, double, const State3&) { return true; });
    return x;
  }
  // Backward flow: reverse heading, advance, reverse again.
  x[2] += std::numbers::pi;
  drv.advance(x, 0.0, -h, std::numeric_limits<double>::infinity(),
              [](double, const State3&, double, const State3&) { return true; });
  x[2] -= std::numbers::pi;
  return x;
}

TraceSample trace_at(const MetricProfile& profile, const GeodesicTrace& trace, double t,
                     const FlowOptions& opts) {
  const auto& s = trace.samples;
  if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty trace");
  if (t <= s.front().t) return s.front();
  if (t >= s.back().t) return s.back();
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const TraceSample& a) { return v < a.t; });
  const TraceSample& base = *(it - 1);
  const double h = t - base.t;
  if (h == 0.0) return base;
  const State3 z = flow_map(profile, {base.X, base.Y, base.theta}, h, opts);
  return to_sample(t, z);
}

GeodesicTrace reversed(const GeodesicTrace& trace) {
  GeodesicTrace out;
  const double L = trace.length();
  out.samples.reserve(trace.samples.size());
  for (auto it = trace.samples.rbegin(); it != trace.samples.rend(); ++it) {
    out.samples.push_back({L - it->t, it->X, it->Y, it->theta + std::numbers::pi});
  }
  return out;
}

GeodesicTrace concatenate(const std::vector<GeodesicTrace>& pieces) {
  GeodesicTrace out;
  double offset = 0.0;
  for (const auto& piece : pieces) {
    if (piece.empty()) continue;
    std::size_t first = out.samples.empty() ? 0 : 1;
    for (std::size_t i = first; i < piece.samples.size(); ++i) {
      TraceSample s = piece.samples[i];
      s.t += offset;
      out.samples.push_back(s);
    }
    offset = out.samples.back().t;
  }
  return out;
}

SweepResult sweep_lines(const MetricProfile& profile, CoverPoint P, double theta,
                        const std::vector<double>& lines, double max_length,
                        const FlowOptions& opts) {
  SweepResult result;
  GeodesicSystem sys{&profile};
  Driver<3, GeodesicSystem> drv(sys, opts);
  State3 z{P.X, P.Y, theta};
  const double dir = std::cos(theta) >= 0.0 ? 1.0 : -1.0;
  if (lines.empty()) {
    result.reached_all = true;
    result.end = to_sample(0.0, z);
    return result;
  }
  const double vs = std::sin(theta);
  const double vdir = !opts.translate ? 0.0 : (vs > 0.0 ? 1.0 : (vs < 0.0 ? -1.0 : 0.0));
  std::vector<Step> steps;
  std::size_t next = 0;
  double t_end = 0.0;
  bool periodic = false;
  double period = 0.0, dX = 0.0;
  int dY = 0;
  drv.advance(z, 0.0, max_length, std::numeric_limits<double>::infinity(),
              [&](double t0, const State3& x0, double t1, const State3& x1) {
                const Step st{t0, t1, x0, x1};
                if (vdir != 0.0) steps.push_back(st);
                const auto cl = closure_in(profile, drv, st, P, vdir);
                const double t_close = cl ? cl->t : std::numeric_limits<double>::infinity();
                while (next < lines.size() && (x1[0] - lines[next]) * dir >= 0.0) {
                  const auto [tau, xt] = locate(profile, drv, st, 0, lines[next]);
                  if (t0 + tau > t_close) break;
                  result.hits.push_back({lines[next], t0 + tau, xt[1], xt[2]});
                  ++next;
                }
                t_end = t1;
                if (cl && next < lines.size() && cl->x[0] != P.X) {
                  periodic = true;
                  period = cl->t;
                  dX = cl->x[0] - P.X;
                  dY = cl->k;
                  steps.back().t1 = cl->t;
                  steps.back().x1 = cl->x;
                  return false;
                }
                return next < lines.size();
              });
  if (periodic && dX != 0.0) {
    // Crossings in later periods by translation of the first one.
    for (; next < lines.size(); ++next) {
      const double c = lines[next];
      const double j = std::floor((c - P.X) / dX);
      double base = c - j * dX;
      // Keep the base inside the first period despite rounding.
      auto it = std::upper_bound(steps.begin(), steps.end(), base, [&](double v, const Step& s) {
        return (v - s.x1[0]) * dir < 0.0;
      });
      if (it == steps.end()) it = steps.end() - 1;
      const auto [tau, xt] = locate(profile, drv, *it, 0, base);
      const double t = j * period + it->t0 + tau;
      if (t > max_length) break;
      result.hits.push_back({c, t, xt[1] + j * static_cast<double>(dY), xt[2]});
    }
    if (next < lines.size()) {
      result.end = to_sample(max_length, periodic_state(drv, steps, period, dX, dY, max_length));
    } else {
      result.end = {result.hits.back().t, result.hits.back().X_line, result.hits.back().Y,
                    result.hits.back().theta};
    }
    result.reached_all = next == lines.size();
    return result;
  }
  result.end = to_sample(t_end, z);
  result.reached_all = next == lines.size();
  return result;
}

double JacobiSolution::value(std::size_t i) const {
  return samples[i].J * std::exp(samples[i].log_scale);
}

double JacobiSolution::derivative(std::size_t i) const {
  return samples[i].dJ * std::exp(samples[i].log_scale);
}

namespace {

using State5 = std::array<double, 5>;
constexpr double kRescaleAbove = 1e100;

}  // namespace

JacobiSolution jacobi(const MetricProfile& profile, const GeodesicTrace& trace, double J0,
                      double dJ0, const FlowOptions& opts) {
  if (trace.empty()) throw Error(ErrorKind::InvalidArgument, "jacobi: empty trace");
  detail::JacobiSystem sys{&profile};
  Driver<5, detail::JacobiSystem> drv(sys, opts);
  JacobiSolution sol;
  const auto& s = trace.samples;
  sol.samples.reserve(s.size());
  sol.samples.push_back({s.front().t, J0, dJ0, 0.0});
  double J = J0, dJ = dJ0, log_scale = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double h = s[i + 1].t - s[i].t;
    const State5 start{s[i].X, s[i].Y, s[i].theta, J, dJ};
    State5 x = start;
    if (h > 0.0) {
      drv.advance(x, 0.0, h, std::numeric_limits<double>::infinity(),
                  [](double, const State5&, double, const State5&) { return true; });
    }
    const double Jn = x[3];
    if (J != 0.0 && Jn != 0.0 && (J > 0.0) != (Jn > 0.0)) {
      // Bisection on the step, re-integrating from the left sample.
      double lo = 0.0, hi = h;
      const bool lo_pos = J > 0.0;
      for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        State5 xm = start;
        drv.advance(xm, 0.0, mid, std::numeric_limits<double>::infinity(),
                    [](double, const State5&, double, const State5&) { return true; });
        if ((xm[3] > 0.0) == lo_pos) lo = mid; else hi = mid;
      }
      sol.zeros.push_back(s[i].t + 0.5 * (lo + hi));
    } else if (Jn == 0.0) {
      sol.zeros.push_back(s[i + 1].t);
    }
    J = Jn;
    dJ = x[4];
    const double mag = std::abs(J) + std::abs(dJ);
    if (mag > kRescaleAbove) {
      J /= mag;
      dJ /= mag;
      log_scale += std::log(mag);
    }
    sol.samples.push_back({s[i + 1].t, J, dJ, log_scale});
  }
  return sol;
}

ConjugateReport has_conjugate_points(const MetricProfile& profile, const GeodesicTrace& trace,
                                     const FlowOptions& opts) {
  const JacobiSolution sol = jacobi(profile, trace, 0.0, 1.0, opts);
  ConjugateReport r;
  const double L = trace.length();
  for (double z : sol.zeros) {
    if (z > 0.0 && z < L) {
      r.has_conjugate = true;
      r.first = z;
      break;
    }
  }
  return r;
}

Matrix2 monodromy(const MetricProfile& profile, const GeodesicTrace& trace,
                  const MonodromyOptions& opts) {
  if (trace.samples.size() < 2) throw Error(ErrorKind::NotPeriodic, "monodromy: trace too short");
  const TraceSample& a = trace.samples.front();
  const TraceSample& b = trace.samples.back();
  const double dX = b.X - a.X, dY = b.Y - a.Y;
  const double ex = std::abs(dX - std::round(dX));
  const double ey = std::abs(dY - std::round(dY));
  const double dth = std::remainder(b.theta - a.theta, 2.0 * std::numbers::pi);
  if (ex > opts.closure_tol || ey > opts.closure_tol || std::abs(dth) > opts.closure_tol) {
    throw Error(ErrorKind::NotPeriodic, "monodromy: trace does not close up");
  }
  // Two Jacobi columns co-integrated sample to sample.
  detail::MonodromySystem sys{&profile};
  Driver<7, detail::MonodromySystem> drv(sys, opts.flow);
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};  // J1, dJ1, J2, dJ2
  for (std::size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    const double h = trace.samples[i + 1].t - s.t;
    std::array<double, 7> x{s.X, s.Y, s.theta, m[0], m[1], m[2], m[3]};
    if (h > 0.0) {
      drv.advance(x, 0.0, h, std::numeric_limits<double>::infinity(),
                  [](double, const std::array<double, 7>&, double, const std::array<double, 7>&) {
                    return true;
                  });
    }
    m = {x[3], x[4], x[5], x[6]};
  }
  return Matrix2{{{m[0], m[2]}, {m[1], m[3]}}};
}

double determinant(const Matrix2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

Eigen2 eigenvalues(const Matrix2& m) {
  const double tr = m[0][0] + m[1][1];
  const double det = determinant(m);
  const double disc = 0.25 * tr * tr - det;
  Eigen2 e;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // Stable pairing: larger magnitude root first, the other from the product.
    const double big = 0.5 * tr + (tr >= 0.0 ? sq : -sq);
    e.re1 = big;
    e.re2 = big != 0.0 ? det / big : 0.5 * tr - sq;
  } else {
    e.real = false;
    e.re1 = e.re2 = 0.5 * tr;
    e.im1 = std::sqrt(-disc);
    e.im2 = -e.im1;
  }
  return e;
}

}  // namespace geoblock
