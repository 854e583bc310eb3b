#include "geoblock/connect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

#include "geoblock/errors.hpp"
#include "parallel.hpp"

namespace geoblock {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

long gcd_abs(long a, long b) {
  a = std::labs(a);
  b = std::labs(b);
  while (b != 0) {
    const long r = a % b;
    a = b;
    b = r;
  }
  return a;
}

bool is_prime(HomologyClass h) { return gcd_abs(h.m, h.n) == 1; }

long intersection_number(HomologyClass a, HomologyClass b) { return a.m * b.n - a.n * b.m; }

HomologyClass dual_class(HomologyClass h) {
  if (!is_prime(h)) throw Error(ErrorKind::NotPrime, "dual_class: class is not prime");
  // Extended Euclid on (m, n): m*b - n*a = 1.
  long old_r = h.m, r = h.n;
  long old_s = 1, s = 0;
  long old_t = 0, t = 1;
  while (r != 0) {
    const long q = old_r / r;
    std::tie(old_r, r) = std::make_tuple(r, old_r - q * r);
    std::tie(old_s, s) = std::make_tuple(s, old_s - q * s);
    std::tie(old_t, t) = std::make_tuple(t, old_t - q * t);
  }
  // old_s * m + old_t * n = old_r = +-1
  const long sign = old_r > 0 ? 1 : -1;
  // m*b - n*a = 1 with b = sign*old_s, a = -sign*old_t.
  HomologyClass k{-sign * old_t, sign * old_s};
  if (intersection_number(h, k) != 1) throw Error(ErrorKind::NotPrime, "dual_class failed");
  return k;
}

// ---- shooting -------------------------------------------------------------

namespace {

struct MissEval {
  double miss = 0.0;
  bool reached = false;
  double t = 0.0;
};

MissEval eval_miss(const MetricProfile& profile, CoverPoint P, CoverPoint target, double theta,
                   double max_length, const FlowOptions& flow) {
  const SweepResult r = sweep_lines(profile, P, theta, {target.X}, max_length, flow);
  MissEval e;
  if (r.reached_all) {
    e.reached = true;
    e.t = r.hits.front().t;
    e.miss = r.hits.front().Y - target.Y;
  } else {
    e.miss = r.end.Y - target.Y;
    e.t = r.end.t;
  }
  return e;
}

// Heading interval in which X moves towards the target.
std::pair<double, double> heading_interval(CoverPoint P, CoverPoint target) {
  if (target.X > P.X) return {-0.5 * kPi, 0.5 * kPi};
  return {0.5 * kPi, 1.5 * kPi};
}

JoiningGeodesic finish(const MetricProfile& profile, CoverPoint P, CoverPoint target, double theta,
                       double t_hit, const ShootOptions& opts) {
  JoiningGeodesic g;
  g.initial_heading = theta;
  g.trace = integrate_heading(profile, P, theta, t_hit, opts.flow);
  const CoverPoint e = g.trace.end();
  g.hit_error = std::hypot(e.X - target.X, e.Y - target.Y);
  g.offset = {std::lround(target.X - std::floor(P.X) - wrap01(target.X)),
              std::lround(target.Y - std::floor(P.Y) - wrap01(target.Y))};
  return g;
}

std::optional<JoiningGeodesic> vertical_geodesic(const MetricProfile& profile, CoverPoint P,
                                                 CoverPoint target, double max_length,
                                                 const ShootOptions& opts) {
  const double dY = target.Y - P.Y;
  if (dY == 0.0 || std::abs(dY) > max_length) return std::nullopt;
  const double theta = dY > 0.0 ? 0.5 * kPi : -0.5 * kPi;
  return finish(profile, P, target, theta, std::abs(dY), opts);
}

}  // namespace

namespace {

// Bracketed root of the miss. Iterates at the sweep tolerance until the miss
// is small, then finishes at the trace tolerance. `fa`, `fb` may carry known
// miss values at the bracket ends.
std::optional<JoiningGeodesic> refine(const MetricProfile& profile, CoverPoint P, CoverPoint target,
                                      double a, double b, std::optional<std::pair<double, double>> seed,
                                      double max_length, const ShootOptions& opts, bool allow_polish = true) {
  const double accept = 1e-3 * opts.hit_tol;
  double fa, fb;
  if (seed) {
    fa = seed->first;
    fb = seed->second;
  } else {
    const MissEval ma = eval_miss(profile, P, target, a, max_length, opts.flow);
    const MissEval mb = eval_miss(profile, P, target, b, max_length, opts.flow);
    if (ma.reached && std::abs(ma.miss) <= accept) return finish(profile, P, target, a, ma.t, opts);
    if (mb.reached && std::abs(mb.miss) <= accept) return finish(profile, P, target, b, mb.t, opts);
    fa = ma.miss;
    fb = mb.miss;
  }
  if ((fa > 0.0) == (fb > 0.0) && fa != 0.0 && fb != 0.0) return std::nullopt;
  if (fa == 0.0 || fb == 0.0) {
    const double th = fa == 0.0 ? a : b;
    const MissEval e = eval_miss(profile, P, target, th, max_length, opts.flow);
    if (e.reached && std::abs(e.miss) <= opts.hit_tol) {
      JoiningGeodesic g = finish(profile, P, target, th, e.t, opts);
      if (g.hit_error <= opts.hit_tol) return g;
    }
  }

  bool tight = opts.sweep_flow.abs_tol <= opts.flow.abs_tol && opts.sweep_flow.rel_tol <= opts.flow.rel_tol;
  const double lo0 = std::min(a, b), hi0 = std::max(a, b);
  double best_theta = a;
  MissEval best;
  bool have_best = false;
  int stall = 0;
  // Illinois regula falsi opened by one bisection; a bisection is forced
  // whenever the bracket fails to halve over three steps.
  int side = 0;
  double width = std::abs(b - a);
  int since_halving = 0;
  double c = 0.5 * (a + b);
  for (int it = 0; it < opts.max_iterations; ++it) {
    c = 0.5 * (a + b);
    // Brackets spanning decades (headings grazing a hyperbolic latitude) are
    // split geometrically.
    if (a * b > 0.0 && std::max(std::abs(a), std::abs(b)) > 16.0 * std::min(std::abs(a), std::abs(b))) {
      c = std::copysign(std::sqrt(a * b), a);
    }
    if (it > 0 && since_halving < 3 && fa != fb) {
      const double s = (a * fb - b * fa) / (fb - fa);
      if (std::isfinite(s) && s > std::min(a, b) && s < std::max(a, b)) c = s;
    }
    if (c == a || c == b) break;
    const MissEval mc = eval_miss(profile, P, target, c, max_length, tight ? opts.flow : opts.sweep_flow);
    if (tight && mc.reached) {
      if (!have_best || std::abs(mc.miss) < 0.5 * std::abs(best.miss)) {
        stall = 0;
      } else if (std::abs(best.miss) < 1e-4 && std::abs(b - a) < 1e-9) {
        ++stall;
      }
      if (!have_best || std::abs(mc.miss) < std::abs(best.miss)) {
        best = mc;
        best_theta = c;
        have_best = true;
      }
      if (std::abs(mc.miss) <= accept) break;
      // Heading resolution exhausted: the miss no longer responds.
      if (stall >= 4) break;
    }
    if (!tight && mc.reached && std::abs(mc.miss) <= 1e2 * opts.hit_tol) {
      // Switch precision. Loose misses of trajectories that hug a hyperbolic
      // latitude can be off by more than their size, so the bracket is
      // re-checked and, if the sign change is gone, reopened to the initial one.
      tight = true;
      const MissEval ta = eval_miss(profile, P, target, a, max_length, opts.flow);
      const MissEval tb = eval_miss(profile, P, target, b, max_length, opts.flow);
      if (ta.reached && tb.reached && (ta.miss > 0.0) != (tb.miss > 0.0)) {
        fa = ta.miss;
        fb = tb.miss;
      } else {
        const MissEval t0 = eval_miss(profile, P, target, lo0, max_length, opts.flow);
        const MissEval t1 = eval_miss(profile, P, target, hi0, max_length, opts.flow);
        if (!t0.reached || !t1.reached || (t0.miss > 0.0) == (t1.miss > 0.0)) break;
        a = lo0;
        b = hi0;
        fa = t0.miss;
        fb = t1.miss;
      }
      side = 0;
      width = std::abs(b - a);
      since_halving = 0;
      // mc was taken with the loose flow; redo the step at tight precision.
      continue;
    }
    if ((mc.miss > 0.0) == (fa > 0.0)) {
      a = c;
      fa = mc.miss;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = mc.miss;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    const double w = std::abs(b - a);
    if (w <= 0.5 * width) {
      width = w;
      since_halving = 0;
    } else {
      ++since_halving;
    }
    if (w <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a))) break;
  }
  if (!have_best) {
    best = eval_miss(profile, P, target, c, max_length, opts.flow);
    best_theta = c;
  }
  if (!best.reached) return std::nullopt;
  if (std::abs(best.miss) > 1e-3) return std::nullopt;
  if (std::abs(best.miss) <= opts.hit_tol) {
    JoiningGeodesic g = finish(profile, P, target, best_theta, best.t, opts);
    // A single trajectory conserves the Clairaut value; multiple-shooting
    // solutions carry small kinks at their nodes, so a shot that reaches
    // the tolerance is preferred.
    if (g.hit_error <= opts.hit_tol && g.trace.length() <= max_length) return g;
  }
  if (!allow_polish) return std::nullopt;
  // Ill-conditioned in the heading (long passages near a hyperbolic closed
  // geodesic): polish the near miss by multiple shooting.
  const GeodesicTrace near = integrate_heading(profile, P, best_theta, best.t, opts.flow);
  BvpOptions bopts;
  bopts.flow = opts.flow;
  bopts.max_newton = 8;
  BvpSolution sol;
  try {
    sol = polish_cover_geodesic(profile, P, target, near, bopts);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!sol.converged || sol.length > max_length) return std::nullopt;
  if (sol.initial_heading < lo0 - 1e-9 || sol.initial_heading > hi0 + 1e-9) return std::nullopt;
  JoiningGeodesic g;
  g.trace = std::move(sol.trace);
  g.initial_heading = sol.initial_heading;
  const CoverPoint e = g.trace.end();
  // Continuity defects between shooting segments count as miss too.
  g.hit_error = std::max(std::hypot(e.X - target.X, e.Y - target.Y), sol.residual);
  g.offset = {std::lround(target.X - std::floor(P.X) - wrap01(target.X)),
              std::lround(target.Y - std::floor(P.Y) - wrap01(target.Y))};
  if (g.hit_error > opts.hit_tol) return std::nullopt;
  // The polished heading seeds a second single-trajectory attempt: bracket
  // it at trace precision by geometric expansion.
  ShootOptions tight_opts = opts;
  tight_opts.sweep_flow = opts.flow;
  const double th = sol.initial_heading;
  const MissEval m0 = eval_miss(profile, P, target, th, max_length, opts.flow);
  if (m0.reached) {
    double step = std::max(1e-3 * std::abs(std::sin(th)), 1e-13);
    for (int k = 0; k < 40 && step < hi0 - lo0; ++k, step *= 4.0) {
      for (double sgn : {1.0, -1.0}) {
        const double t1 = std::clamp(th + sgn * step, lo0, hi0);
        const MissEval m1 = eval_miss(profile, P, target, t1, max_length, opts.flow);
        if (!m1.reached || (m1.miss > 0.0) == (m0.miss > 0.0)) continue;
        auto shot = refine(profile, P, target, th, t1, std::make_pair(m0.miss, m1.miss), max_length, tight_opts,
                           false);
        if (shot && shot->hit_error <= opts.hit_tol) return shot;
        return g;
      }
    }
  }
  return g;
}

}  // namespace

std::optional<JoiningGeodesic> shoot_bracket(const MetricProfile& profile, CoverPoint P,
                                             CoverPoint target, double theta_a, double theta_b,
                                             double max_length, const ShootOptions& opts) {
  if (target.X == P.X) return vertical_geodesic(profile, P, target, max_length, opts);
  return refine(profile, P, target, theta_a, theta_b, std::nullopt, max_length, opts);
}

JoiningGeodesic shoot(const MetricProfile& profile, TorusPoint p, CoverPoint target, double theta0,
                      double max_length, const ShootOptions& opts) {
  const TorusPoint pc = canonical(p);
  const CoverPoint P{pc.x, pc.y};
  if (target.X == P.X && target.Y == P.Y) {
    throw Error(ErrorKind::InvalidArgument, "shoot: target coincides with the lift of p");
  }
  if (!(max_length > 0.0)) throw Error(ErrorKind::InvalidArgument, "shoot: max_length must be positive");
  if (target.X == P.X) {
    if (auto g = vertical_geodesic(profile, P, target, max_length, opts)) return *g;
    throw Error(ErrorKind::NoConvergence, "shoot: meridian target beyond max_length");
  }
  const auto [lo, hi] = heading_interval(P, target);
  double th = theta0;
  th = lo + std::fmod(std::fmod(th - lo, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi);
  if (!(th > lo && th < hi)) th = 0.5 * (lo + hi);
  const MissEval m0 = eval_miss(profile, P, target, th, max_length, opts.flow);
  if (m0.reached && std::abs(m0.miss) <= 1e-3 * opts.hit_tol) {
    return finish(profile, P, target, th, m0.t, opts);
  }
  // Expand symmetric probes until the miss changes sign.
  const double edge = 1e-12;
  double prev_left = th, prev_right = th;
  MissEval ml = m0, mr = m0;
  for (double step = 1e-3; step < 2.0 * kPi; step *= 2.0) {
    const double r = std::min(th + step, hi - edge);
    if (r > prev_right) {
      const MissEval e = eval_miss(profile, P, target, r, max_length, opts.flow);
      if ((e.miss > 0.0) != (mr.miss > 0.0) || e.miss == 0.0) {
        if (auto g = shoot_bracket(profile, P, target, prev_right, r, max_length, opts)) return *g;
      }
      prev_right = r;
      mr = e;
    }
    const double l = std::max(th - step, lo + edge);
    if (l < prev_left) {
      const MissEval e = eval_miss(profile, P, target, l, max_length, opts.flow);
      if ((e.miss > 0.0) != (ml.miss > 0.0) || e.miss == 0.0) {
        if (auto g = shoot_bracket(profile, P, target, l, prev_left, max_length, opts)) return *g;
      }
      prev_left = l;
      ml = e;
    }
    if (r >= hi - edge && l <= lo + edge) break;
  }
  throw Error(ErrorKind::NoConvergence, "shoot: no joining geodesic in the basin of the seed heading");
}

// ---- enumeration ------------------------------------------------------------

namespace {

struct Side {
  std::vector<double> lines;  // sorted in direction of motion
  std::vector<long> line_m;
  double lo = 0.0, hi = 0.0;  // heading interval
};

struct Found {
  HomologyClass offset;
  double theta;
};

struct Candidate {
  long m;
  long n;
  double ta, tb;
  double fa, fb;
};

}  // namespace

EnumerationResult enumerate_joining(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                                    double max_length, const EnumerateOptions& opts) {
  EnumerationResult result;
  if (!(max_length > 0.0) || !std::isfinite(max_length)) {
    throw Error(ErrorKind::InvalidArgument, "enumerate_joining: max_length must be positive and finite");
  }
  if (opts.sweep < 16) throw Error(ErrorKind::InvalidArgument, "enumerate_joining: sweep must be at least 16");
  const TorusPoint pc = canonical(p), qc = canonical(q);
  const CoverPoint P{pc.x, pc.y};
  const double fmin = profile.min_value();
  const bool same_x = qc.x == pc.x;

  std::vector<JoiningGeodesic> found;
  auto already = [&](long m, long n, double ta, double tb) {
    for (const auto& g : found) {
      if (g.offset.m == m && g.offset.n == n && g.initial_heading >= std::min(ta, tb) - opts.angle_dedup &&
          g.initial_heading <= std::max(ta, tb) + opts.angle_dedup) {
        return true;
      }
    }
    return false;
  };
  auto add = [&](JoiningGeodesic g) {
    for (const auto& h : found) {
      if (h.offset == g.offset && std::abs(h.initial_heading - g.initial_heading) <= opts.angle_dedup) return;
    }
    found.push_back(std::move(g));
  };

  // Meridian joins: only offset m = 0 when the x-coordinates agree.
  if (same_x) {
    const long nmax = static_cast<long>(std::floor(max_length + 1.0));
    for (long n = -nmax; n <= nmax; ++n) {
      const CoverPoint T{pc.x, qc.y + static_cast<double>(n)};
      if (T.Y == P.Y) continue;
      if (auto g = vertical_geodesic(profile, P, T, max_length, opts.shoot)) {
        g->offset = {0, n};
        add(std::move(*g));
      }
    }
  }

  std::vector<Side> sides(2);
  sides[0].lo = -0.5 * kPi;
  sides[0].hi = 0.5 * kPi;
  sides[1].lo = 0.5 * kPi;
  sides[1].hi = 1.5 * kPi;
  const long mspan = static_cast<long>(std::ceil(max_length / fmin)) + 2;
  for (long m = -mspan; m <= mspan; ++m) {
    const double X = qc.x + static_cast<double>(m);
    const double dX = X - P.X;
    if (dX == 0.0 || fmin * std::abs(dX) > max_length) continue;
    Side& s = dX > 0.0 ? sides[0] : sides[1];
    s.lines.push_back(X);
    s.line_m.push_back(m);
  }
  // Right side ascending; left side descending.
  {
    std::vector<std::size_t> idx(sides[1].lines.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return sides[1].lines[a] > sides[1].lines[b];
    });
    Side sorted = sides[1];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sorted.lines[i] = sides[1].lines[idx[i]];
      sorted.line_m[i] = sides[1].line_m[idx[i]];
    }
    sides[1] = sorted;
  }

  // Nested heading grids theta_i = lo + i*pi/N (0 < i < N); each doubling
  // integrates only the new odd-indexed headings.
  struct Grid {
    std::vector<double> thetas;
    std::vector<std::size_t> reached;
    std::vector<double> vals;  // thetas.size() x lines
  };
  std::vector<Grid> grids(2);
  int N = std::max(8, opts.sweep);
  N += N % 2;
  int prevN = 0;
  for (int round = 0; round <= opts.max_doublings; ++round) {
    const std::size_t before = found.size();
    for (std::size_t sidx = 0; sidx < 2; ++sidx) {
      const Side& side = sides[sidx];
      if (side.lines.empty()) continue;
      const std::size_t L = side.lines.size();
      Grid& old = grids[sidx];
      std::vector<double> fresh;
      for (int i = 1; i < N; ++i) {
        if (prevN > 0 && i % 2 == 0) continue;
        fresh.push_back(side.lo + static_cast<double>(i) * kPi / static_cast<double>(N));
      }
      std::vector<double> fvals(fresh.size() * L);
      std::vector<std::size_t> freached(fresh.size());
      parallel_for(fresh.size(), [&](std::size_t i) {
        const SweepResult r =
            sweep_lines(profile, P, fresh[i], side.lines, max_length, opts.shoot.sweep_flow);
        freached[i] = r.hits.size();
        for (std::size_t j = 0; j < L; ++j) {
          fvals[i * L + j] = j < r.hits.size() ? r.hits[j].Y : r.end.Y;
        }
      });
      // Interleave: new grid index i maps to fresh (odd i) or old (even i).
      Grid g;
      g.thetas.reserve(static_cast<std::size_t>(N));
      std::size_t io = 0, inew = 0;
      for (int i = 1; i < N; ++i) {
        const bool from_old = prevN > 0 && i % 2 == 0;
        const Grid* src = from_old ? &old : nullptr;
        const std::size_t k = from_old ? io++ : inew++;
        g.thetas.push_back(from_old ? src->thetas[k] : fresh[k]);
        g.reached.push_back(from_old ? src->reached[k] : freached[k]);
        for (std::size_t j = 0; j < L; ++j) {
          g.vals.push_back(from_old ? src->vals[k * L + j] : fvals[k * L + j]);
        }
      }
      old = std::move(g);
      const Grid& G = old;

      std::vector<Candidate> cands;
      for (std::size_t i = 0; i + 1 < G.thetas.size(); ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          const bool ra = j < G.reached[i], rb = j < G.reached[i + 1];
          if (!ra && !rb) continue;
          const double va = G.vals[i * L + j], vb = G.vals[(i + 1) * L + j];
          const long n0 = static_cast<long>(std::ceil(std::min(va, vb) - qc.y));
          const long n1 = static_cast<long>(std::floor(std::max(va, vb) - qc.y));
          for (long n = n0; n <= n1; ++n) {
            const double Yt = qc.y + static_cast<double>(n);
            if (std::abs(Yt - P.Y) > max_length) continue;
            if (already(side.line_m[j], n, G.thetas[i], G.thetas[i + 1])) continue;
            cands.push_back({side.line_m[j], n, G.thetas[i], G.thetas[i + 1], va - Yt, vb - Yt});
          }
        }
      }
      std::vector<std::optional<JoiningGeodesic>> refined(cands.size());
      parallel_for(cands.size(), [&](std::size_t c) {
        const Candidate& cd = cands[c];
        const CoverPoint T{qc.x + static_cast<double>(cd.m), qc.y + static_cast<double>(cd.n)};
        refined[c] = refine(profile, P, T, cd.ta, cd.tb, std::make_pair(cd.fa, cd.fb), max_length, opts.shoot);
        if (refined[c]) refined[c]->offset = {cd.m, cd.n};
      });
      for (auto& r : refined) {
        if (r) add(std::move(*r));
      }
    }
    result.sweep_sizes.push_back(N);
    result.found_per_sweep.push_back(static_cast<int>(found.size()));
    if (round > 0 && found.size() == before) {
      result.saturated = true;
      break;
    }
    prevN = N;
    N *= 2;
  }

  std::sort(found.begin(), found.end(), [](const JoiningGeodesic& a, const JoiningGeodesic& b) {
    const double la = a.trace.length(), lb = b.trace.length();
    if (la != lb) return la < lb;
    if (a.offset.m != b.offset.m) return a.offset.m < b.offset.m;
    if (a.offset.n != b.offset.n) return a.offset.n < b.offset.n;
    return a.initial_heading < b.initial_heading;
  });
  result.geodesics = std::move(found);
  return result;
}

// ---- trace geometry -----------------------------------------------------------

namespace {

// Distance on the torus from point (px, py) to the projected segment a-b,
// where a-b is a short segment of a lift.
double point_segment_torus(double px, double py, const TraceSample& a, const TraceSample& b) {
  // Translate the point next to a.
  double dx = px - a.X, dy = py - a.Y;
  dx -= std::round(dx);
  dy -= std::round(dy);
  const double sx = b.X - a.X, sy = b.Y - a.Y;
  const double len2 = sx * sx + sy * sy;
  double u = len2 > 0.0 ? (dx * sx + dy * sy) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  const double ex = dx - u * sx, ey = dy - u * sy;
  return std::hypot(ex, ey);
}

}  // namespace

double point_trace_distance(TorusPoint p, const GeodesicTrace& trace) {
  const auto& s = trace.samples;
  if (s.empty()) return std::numeric_limits<double>::infinity();
  if (s.size() == 1) {
    return torus_coord_dist(p, project({s[0].X, s[0].Y}));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    best = std::min(best, point_segment_torus(p.x, p.y, s[i], s[i + 1]));
  }
  return best;
}

double hausdorff_torus(const GeodesicTrace& a, const GeodesicTrace& b) {
  double h = 0.0;
  for (const auto& s : a.samples) h = std::max(h, point_trace_distance(project({s.X, s.Y}), b));
  for (const auto& s : b.samples) h = std::max(h, point_trace_distance(project({s.X, s.Y}), a));
  return h;
}

Direction homological_direction(const GeodesicTrace& trace, double min_horizon) {
  if (trace.empty() || trace.length() < min_horizon) {
    throw Error(ErrorKind::InvalidArgument, "homological_direction: trace shorter than the horizon");
  }
  const CoverPoint a = trace.start(), b = trace.end();
  const double dx = b.X - a.X, dy = b.Y - a.Y;
  const double norm = std::hypot(dx, dy);
  if (norm < 1e-12) throw Error(ErrorKind::ZeroDisplacement, "homological_direction: zero displacement");
  return {dx / norm, dy / norm};
}

HomologyClass lift_offset(const GeodesicTrace& trace) {
  if (trace.empty()) throw Error(ErrorKind::InvalidArgument, "lift_offset: empty trace");
  const CoverPoint a = trace.start(), b = trace.end();
  return {static_cast<long>(std::floor(b.X) - std::floor(a.X)),
          static_cast<long>(std::floor(b.Y) - std::floor(a.Y))};
}

MinimalityReport is_homotopically_minimal(const MetricProfile& profile, const GeodesicTrace& trace,
                                          HomologyClass offset, const BvpOptions& opts) {
  // Endpoints may sit on a cell boundary up to the hit tolerance.
  const double ex = trace.end().X - std::floor(trace.start().X) - static_cast<double>(offset.m);
  const double ey = trace.end().Y - std::floor(trace.start().Y) - static_cast<double>(offset.n);
  const double slack = 1e-6;
  if (ex < -slack || ex > 1.0 + slack || ey < -slack || ey > 1.0 + slack) {
    throw Error(ErrorKind::InvalidArgument, "is_homotopically_minimal: offset does not match the trace endpoints");
  }
  MinimalityReport r;
  const double L = trace.length();
  const BvpSolution best = shortest_cover_geodesic(profile, trace.start(), trace.end(), opts);
  r.best_length = best.converged ? std::min(best.length, L) : L;
  r.margin = L - r.best_length;
  r.minimal = r.margin <= 1e-6;
  return r;
}

}  // namespace geoblock
