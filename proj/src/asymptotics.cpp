#include "geoblock/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "geoblock/errors.hpp"
#include "parallel.hpp"

namespace geoblock {

namespace {

double cover_dist(CoverPoint a, CoverPoint b) { return std::hypot(a.X - b.X, a.Y - b.Y); }

CoverPoint at(const MetricProfile& profile, const GeodesicTrace& trace, double t, const FlowOptions& flow) {
  const TraceSample s = trace_at(profile, trace, t, flow);
  return {s.X, s.Y};
}

// Arclength parameter of P on the carrier when P lies on it.
std::optional<double> ray_parameter(const MetricProfile& profile, const RaySpec& ray, CoverPoint P,
                                    double tol, const FlowOptions& flow) {
  const auto& smp = ray.carrier.samples;
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < smp.size(); ++i) {
    const double d = cover_dist(P, {smp[i].X, smp[i].Y});
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  // Samples are at most output_step apart, so a point on the carrier is close to one.
  if (bd > 0.1) return std::nullopt;
  double s = smp[best].t;
  const double H = ray.horizon();
  for (int it = 0; it < 12; ++it) {
    const TraceSample c = trace_at(profile, ray.carrier, s, flow);
    const double tx = std::cos(c.theta) / profile.f(c.Y), ty = std::sin(c.theta);
    const double ds = ((P.X - c.X) * tx + (P.Y - c.Y) * ty) / (tx * tx + ty * ty);
    s = std::clamp(s + ds, 0.0, H);
    if (std::abs(ds) < 1e-15 * (1.0 + s)) break;
  }
  const CoverPoint c = at(profile, ray.carrier, s, flow);
  const double scale = std::max({1.0, std::abs(P.X), std::abs(P.Y)});
  if (cover_dist(P, c) <= tol * scale) return s;
  return std::nullopt;
}

}  // namespace

RaySpec make_ray(const MetricProfile& profile, CoverPoint P, double theta, double horizon, bool verify,
                 const RayOptions& opts) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "make_ray: horizon must be positive");
  RaySpec ray;
  ray.carrier = integrate_heading(profile, P, theta, horizon, opts.bvp.flow);
  if (!verify) return ray;
  const double w = std::min(opts.window, horizon);
  const int count = horizon > w ? std::max(1, opts.windows) : 1;
  bool ok = true;
  for (int i = 0; i < count && ok; ++i) {
    const double s = count == 1 ? 0.0 : (horizon - w) * static_cast<double>(i) / static_cast<double>(count - 1);
    const TraceSample c = trace_at(profile, ray.carrier, s, opts.bvp.flow);
    const GeodesicTrace sub = integrate_heading(profile, {c.X, c.Y}, c.theta, w, opts.bvp.flow);
    ok = is_homotopically_minimal(profile, sub, lift_offset(sub), opts.bvp).minimal;
  }
  ray.asserted_minimal = ok;
  return ray;
}

double busemann_estimate(const MetricProfile& profile, const RaySpec& ray, CoverPoint P, double t,
                         const BusemannOptions& opts) {
  if (ray.carrier.empty()) throw Error(ErrorKind::InvalidArgument, "busemann_estimate: empty ray");
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "busemann_estimate: t must be positive");
  if (t > ray.horizon() * (1.0 + 1e-12)) {
    throw Error(ErrorKind::HorizonExceeded, "busemann_estimate: t beyond the ray horizon");
  }
  // On the ray, d(c(s), c(t)) = t - s by minimality.
  if (const auto s = ray_parameter(profile, ray, P, opts.on_ray_tol, opts.bvp.flow); s && *s <= t) {
    return *s == 0.0 ? 0.0 : -*s;
  }
  const CoverPoint C = at(profile, ray.carrier, t, opts.bvp.flow);
  const BvpSolution b = shortest_cover_geodesic(profile, P, C, opts.bvp);
  if (!b.converged) throw Error(ErrorKind::NoConvergence, "busemann_estimate: distance solve failed");
  return b.length - t;
}

double busemann_estimate(const MetricProfile& profile, const RaySpec& ray, TorusPoint p, double t,
                         const BusemannOptions& opts) {
  if (ray.carrier.empty()) throw Error(ErrorKind::InvalidArgument, "busemann_estimate: empty ray");
  const TorusPoint c = canonical(p);
  const CoverPoint s = ray.carrier.start();
  return busemann_estimate(profile, ray, CoverPoint{std::floor(s.X) + c.x, std::floor(s.Y) + c.y}, t, opts);
}

double coray_residual(const MetricProfile& profile, const RaySpec& ray, const GeodesicTrace& candidate,
                      double s, double t, const BusemannOptions& opts) {
  if (!(s < t) || s < 0.0 || t > candidate.length()) {
    throw Error(ErrorKind::InvalidArgument, "coray_residual: need 0 <= s < t <= candidate length");
  }
  const double H = ray.horizon();
  const double bt = busemann_estimate(profile, ray, at(profile, candidate, t, opts.bvp.flow), H, opts);
  const double bs = busemann_estimate(profile, ray, at(profile, candidate, s, opts.bvp.flow), H, opts);
  return std::abs(bt - bs - (s - t));
}

// ---- cylinders ---------------------------------------------------------------

namespace {

// Linear mean of u = -n X + m Y over a lift.
double linear_u_mean(const GeodesicTrace& trace, HomologyClass h) {
  double acc = 0.0;
  for (const auto& s : trace.samples) {
    acc += -static_cast<double>(h.n) * s.X + static_cast<double>(h.m) * s.Y;
  }
  return acc / static_cast<double>(trace.samples.size());
}

GeodesicTrace shifted(GeodesicTrace trace, HomologyClass k, double times) {
  for (auto& s : trace.samples) {
    s.X += times * static_cast<double>(k.m);
    s.Y += times * static_cast<double>(k.n);
  }
  return trace;
}

bool is_latitude_class(HomologyClass h) { return h.n == 0 && std::labs(h.m) == 1; }

}  // namespace

ClassScan scan_class(const MetricProfile& profile, HomologyClass h, const CylinderOptions& opts) {
  if (h.is_zero() || !is_prime(h)) throw Error(ErrorKind::NotPrime, "detect_cylinders: class must be prime");
  if (opts.seeds < 1) throw Error(ErrorKind::InvalidArgument, "detect_cylinders: seeds must be positive");
  const HomologyClass k = dual_class(h);
  std::vector<CoverPoint> bases;
  bases.reserve(static_cast<std::size_t>(opts.seeds));
  for (int i = 0; i < opts.seeds; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(opts.seeds);
    bases.push_back({u * static_cast<double>(k.m), u * static_cast<double>(k.n)});
  }
  std::vector<PeriodicGeodesic> loops = minimal_periodic_candidates(profile, h, bases, opts.periodic);

  // Foliation test: every seed point must lie near some minimizer. Loops in
  // one class are ordered transversally, so only neighbours in u are tried.
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i) order.push_back({transversal_coordinate(loops[i].trace, h), i});
  std::sort(order.begin(), order.end());
  bool foliated = true;
  for (std::size_t b = 0; b < bases.size() && foliated; ++b) {
    // u(base) = (i + 0.5) / seeds since h . k = 1; compare on the circle.
    const double ub = (static_cast<double>(b) + 0.5) / static_cast<double>(opts.seeds);
    const double uw = ub - std::round(ub);
    auto it = std::lower_bound(order.begin(), order.end(), std::make_pair(uw, std::size_t{0}));
    const auto n = static_cast<long>(order.size());
    const long c = it - order.begin();
    bool covered = false;
    for (long d = -4; d <= 4 && !covered; ++d) {
      const std::size_t j = static_cast<std::size_t>(((c + d) % n + n) % n);
      covered = point_trace_distance(project(bases[b]), loops[order[j].second].trace) <= opts.foliation_tol;
    }
    foliated = covered;
  }
  ClassScan scan;
  scan.h = h;
  scan.foliated = foliated;
  scan.minimizers = cluster_periodic(std::move(loops), opts.periodic.cluster_tol);
  if (foliated) return scan;
  const std::vector<PeriodicGeodesic>& reps = scan.minimizers;
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < reps.size(); ++i) keyed.push_back({transversal_coordinate(reps[i].trace, h), i});
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const std::size_t j = (i + 1) % keyed.size();
    AdmissibleCylinder cyl;
    cyl.h = h;
    cyl.a_low = keyed[i].first;
    cyl.a_high = keyed[j].first + (j <= i ? 1.0 : 0.0);
    if (!(cyl.a_high - cyl.a_low > 0.0)) continue;
    const GeodesicTrace& lo = reps[keyed[i].second].trace;
    const GeodesicTrace& hi = reps[keyed[j].second].trace;
    // u changes by h . k = 1 under translation by k.
    cyl.boundary_traces[0] = shifted(lo, k, std::round(cyl.a_low - linear_u_mean(lo, h)));
    cyl.boundary_traces[1] = shifted(hi, k, std::round(cyl.a_high - linear_u_mean(hi, h)));
    scan.cylinders.push_back(std::move(cyl));
  }
  return scan;
}

std::vector<AdmissibleCylinder> detect_cylinders(const MetricProfile& profile, HomologyClass h,
                                                 const CylinderOptions& opts) {
  return scan_class(profile, h, opts).cylinders;
}

double distance_to_boundary(const AdmissibleCylinder& cyl, CoverPoint P) {
  const double u = -static_cast<double>(cyl.h.n) * P.X + static_cast<double>(cyl.h.m) * P.Y;
  const double scale = std::hypot(static_cast<double>(cyl.h.m), static_cast<double>(cyl.h.n));
  // Latitude bands: the vertical segment realizes the distance.
  return std::min(u - cyl.a_low, cyl.a_high - u) / scale;
}

// ---- strip geodesics and excursions -------------------------------------------

StripOptions default_strip_options() {
  StripOptions o;
  o.bvp.flow.abs_tol = 1e-16;
  o.bvp.flow.rel_tol = 1e-12;
  return o;
}

std::array<CoverPoint, 2> strip_lifts(const AdmissibleCylinder& cyl, TorusPoint p, TorusPoint q,
                                      double boundary_tol) {
  if (!is_latitude_class(cyl.h)) throw Error(ErrorKind::Rejected, "strip_lifts: only latitude cylinders are supported");
  const double sm = static_cast<double>(cyl.h.m);
  // u = sm * Y; lift u into [a_low, a_low + 1).
  auto lift_u = [&](double y) { return cyl.a_low + wrap01(sm * y - cyl.a_low); };
  const TorusPoint pc = canonical(p), qc = canonical(q);
  const double up = lift_u(pc.y);
  if (!(up - cyl.a_low > boundary_tol && cyl.a_high - up > boundary_tol)) {
    throw Error(ErrorKind::InvalidArgument, "p must lie in the interior of the cylinder");
  }
  double uq = lift_u(qc.y);
  const double dl = std::min(std::abs(uq - cyl.a_low), std::abs(uq - (cyl.a_low + 1.0)));
  const double dh = std::min(std::abs(uq - cyl.a_high), std::abs(uq - (cyl.a_high - 1.0)));
  if (dl <= boundary_tol || dh <= boundary_tol) {
    // On the boundary: take the boundary line nearer to p.
    const double cand_lo = dl <= boundary_tol ? cyl.a_low : cyl.a_high;
    const double cand_hi = dh <= boundary_tol ? cyl.a_high : cyl.a_low;
    uq = std::abs(cand_lo - up) <= std::abs(cand_hi - up) ? cand_lo : cand_hi;
  } else if (uq > cyl.a_high) {
    throw Error(ErrorKind::InvalidArgument, "q must lie in the closure of the cylinder");
  }
  return {CoverPoint{pc.x, up / sm}, CoverPoint{qc.x, uq / sm}};
}

std::vector<StripGeodesic> strip_geodesics(const MetricProfile& profile, const AdmissibleCylinder& cyl,
                                           TorusPoint p, TorusPoint q, const std::vector<int>& ns,
                                           const StripOptions& opts) {
  if (profile.is_flat()) throw Error(ErrorKind::Rejected, "flat metrics have no admissible cylinder");
  const auto [P, Q] = strip_lifts(cyl, p, q, opts.boundary_tol);
  const double sm = static_cast<double>(cyl.h.m);
  const double y_low = sm > 0 ? cyl.a_low : -cyl.a_high;
  const double y_high = sm > 0 ? cyl.a_high : -cyl.a_low;
  std::vector<std::optional<StripGeodesic>> out(ns.size());
  parallel_for(ns.size(), [&](std::size_t i) {
    const int n = ns[i];
    const CoverPoint T{Q.X + static_cast<double>(n) * sm, Q.Y};
    if (cover_dist(P, T) == 0.0) return;
    const double dX = T.X - P.X;
    std::vector<std::vector<CoverPoint>> guesses{{}};
    for (double y : {y_low, y_high}) {
      guesses.push_back({{P.X + 0.2 * dX, y}, {T.X - 0.2 * dX, y}});
    }
    std::optional<StripGeodesic> best;
    for (const auto& g : guesses) {
      BvpSolution s;
      try {
        s = solve_cover_geodesic(profile, P, T, g, opts.bvp);
      } catch (const Error&) {
        continue;
      }
      if (!s.converged) continue;
      bool inside = true;
      for (const auto& smp : s.trace.samples) {
        if (smp.Y < y_low - 1e-10 || smp.Y > y_high + 1e-10) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      if (!best || s.length < best->length - 1e-12) {
        StripGeodesic sg;
        sg.n = n;
        sg.length = s.length;
        sg.trace = std::move(s.trace);
        sg.start = P;
        sg.target = T;
        best = std::move(sg);
      }
    }
    out[i] = std::move(best);
  });
  std::vector<StripGeodesic> res;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!out[i]) {
      throw Error(ErrorKind::MissingGeodesic,
                  "no minimal strip geodesic found for n = " + std::to_string(ns[i]));
    }
    res.push_back(std::move(*out[i]));
  }
  return res;
}

namespace {

struct Run {
  double entry, exit;
};

// Crossing time of level eps between samples a and b (linear interpolation).
double cross_time(double ta, double da, double tb, double db, double eps) {
  if (db == da) return ta;
  return ta + (tb - ta) * (eps - da) / (db - da);
}

}  // namespace

ExcursionProfile excursion_from(const AdmissibleCylinder& cyl, const std::vector<StripGeodesic>& geos,
                                const std::vector<double>& eps_grid, bool one_sided) {
  ExcursionProfile prof;
  prof.eps_grid = eps_grid;
  prof.one_sided = one_sided;
  prof.T.assign(eps_grid.size(), 0.0);
  std::vector<std::vector<double>> dists(geos.size());
  for (std::size_t g = 0; g < geos.size(); ++g) {
    const auto& smp = geos[g].trace.samples;
    dists[g].reserve(smp.size());
    for (const auto& s : smp) {
      // One-sided: distance to the boundary component through the endpoint.
      dists[g].push_back(one_sided ? std::abs(s.Y - geos[g].target.Y) : distance_to_boundary(cyl, {s.X, s.Y}));
    }
  }
  for (std::size_t g = 0; g < geos.size(); ++g) {
    const auto& smp = geos[g].trace.samples;
    const auto& d = dists[g];
    const double L = geos[g].length;
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
      const double eps = eps_grid[e];
      ExcursionRecord r;
      r.n = geos[g].n;
      r.length = L;
      r.eps = eps;
      std::optional<Run> best;
      std::size_t i = 0;
      while (i < smp.size()) {
        if (d[i] > eps) {
          ++i;
          continue;
        }
        const std::size_t a = i;
        while (i < smp.size() && d[i] <= eps) ++i;
        const std::size_t b = i - 1;
        Run run{a == 0 ? smp[0].t : cross_time(smp[a - 1].t, d[a - 1], smp[a].t, d[a], eps),
                b + 1 == smp.size() ? L : cross_time(smp[b].t, d[b], smp[b + 1].t, d[b + 1], eps)};
        if (one_sided) {
          if (b + 1 == smp.size()) best = run;
        } else if (!best || run.exit - run.entry > best->exit - best->entry) {
          best = run;
        }
      }
      if (best) {
        r.reached = true;
        r.entry = best->entry;
        r.exit = one_sided ? L : best->exit;
        r.t_n = one_sided ? r.entry : std::max(r.entry, L - r.exit);
      } else {
        r.reached = false;
        r.entry = r.exit = std::numeric_limits<double>::quiet_NaN();
        r.t_n = std::numeric_limits<double>::infinity();
      }
      prof.T[e] = std::max(prof.T[e], r.t_n);
      prof.records.push_back(r);
    }
  }
  // Maximal boundary distance over the window where the uniform bound applies.
  for (auto& r : prof.records) {
    const std::size_t g = static_cast<std::size_t>(&r - prof.records.data()) / std::max<std::size_t>(1, eps_grid.size());
    const std::size_t e = static_cast<std::size_t>(&r - prof.records.data()) % std::max<std::size_t>(1, eps_grid.size());
    const double T = prof.T[e];
    const double hi = one_sided ? r.length : r.length - T;
    double m = 0.0;
    const auto& smp = geos[g].trace.samples;
    for (std::size_t i = 0; i < smp.size(); ++i) {
      if (smp[i].t >= T && smp[i].t <= hi) m = std::max(m, dists[g][i]);
    }
    r.maxdist = m;
  }
  return prof;
}

ExcursionProfile excursion_profile(const MetricProfile& profile, const AdmissibleCylinder& cyl, TorusPoint p,
                                   TorusPoint q, const std::vector<int>& ns, const std::vector<double>& eps_grid,
                                   const StripOptions& opts) {
  if (profile.is_flat()) throw Error(ErrorKind::Rejected, "flat metrics have no admissible cylinder");
  const auto lifts = strip_lifts(cyl, p, q, opts.boundary_tol);
  const bool one_sided = distance_to_boundary(cyl, lifts[1]) <= opts.boundary_tol;
  const std::vector<StripGeodesic> geos = strip_geodesics(profile, cyl, p, q, ns, opts);
  return excursion_from(cyl, geos, eps_grid, one_sided);
}

}  // namespace geoblock
