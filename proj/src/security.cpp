#include "geoblock/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "geoblock/errors.hpp"
#include "parallel.hpp"

namespace geoblock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Angle difference reduced to (-pi, pi].
double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

TorusPoint sample_point(const TraceSample& s) { return project({s.X, s.Y}); }

double signed_circle(double v) { return v - std::round(v); }

}  // namespace

// ---- involution and blocking -------------------------------------------------

TorusPoint Involution::apply(TorusPoint u) const { return canonical({2.0 * r - u.x, 2.0 * a - u.y}); }

Involution involution_for_pair(const MetricProfile& profile, double a, double p, double q) {
  if (!std::isfinite(a) || !std::isfinite(p) || !std::isfinite(q)) {
    throw Error(ErrorKind::InvalidArgument, "involution_for_pair: non-finite input");
  }
  const double fa = profile.f(a);
  if (std::abs(signed_circle(a - profile.min_location())) > 1e-7 || fa > profile.min_value() + 1e-12) {
    throw Error(ErrorKind::HypothesisViolated, "f does not attain its global minimum at the symmetry latitude");
  }
  for (double m : profile.local_minima()) {
    if (std::abs(signed_circle(m - a)) > 1e-7 && profile.f(m) <= fa + 1e-12) {
      throw Error(ErrorKind::HypothesisViolated, "the global minimum of f is not unique");
    }
  }
  // Constant profiles have no unique minimum; local_minima covers the rest.
  if (profile.is_flat()) throw Error(ErrorKind::HypothesisViolated, "flat profile has no unique minimum");
  constexpr int kGrid = 512;
  for (int i = 1; i < kGrid; ++i) {
    const double s = 0.5 * i / kGrid;
    if (std::abs(profile.f(a + s) - profile.f(a - s)) > 1e-9) {
      throw Error(ErrorKind::HypothesisViolated, "f is not symmetric about the symmetry latitude");
    }
  }
  Involution inv;
  inv.r = wrap01(0.5 * (p + q));
  inv.a = wrap01(a);
  const double r2 = wrap01(inv.r + 0.5), a2 = wrap01(inv.a + 0.5);
  inv.fixed_points = {TorusPoint{inv.r, inv.a}, TorusPoint{r2, inv.a}, TorusPoint{inv.r, a2}, TorusPoint{r2, a2}};
  return inv;
}

std::vector<TorusPoint> blocking_candidates(const Involution& inv, TorusPoint p, TorusPoint q, double exclusion) {
  std::vector<TorusPoint> out;
  for (const auto& b : inv.fixed_points) {
    if (torus_coord_dist(b, p) > exclusion && torus_coord_dist(b, q) > exclusion) out.push_back(b);
  }
  return out;
}

Passage closest_passage(const MetricProfile& profile, const GeodesicTrace& trace, TorusPoint b, double t_lo,
                        double t_hi, const FlowOptions& flow) {
  if (trace.empty() || !(t_hi >= t_lo)) throw Error(ErrorKind::InvalidArgument, "closest_passage: empty range");
  t_lo = std::max(t_lo, 0.0);
  t_hi = std::min(t_hi, trace.length());
  auto dist_at = [&](double t) { return local_distance(profile, sample_point(trace_at(profile, trace, t, flow)), b); };

  // Scan points: samples inside the range plus the range ends.
  std::vector<double> ts{t_lo};
  for (const auto& s : trace.samples) {
    if (s.t > t_lo && s.t < t_hi) ts.push_back(s.t);
  }
  if (t_hi > t_lo) ts.push_back(t_hi);
  std::vector<double> ds(ts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    while (k < trace.samples.size() && trace.samples[k].t < ts[i]) ++k;
    const bool exact = k < trace.samples.size() && trace.samples[k].t == ts[i];
    ds[i] = exact ? local_distance(profile, sample_point(trace.samples[k]), b) : dist_at(ts[i]);
  }
  const double dmin = *std::min_element(ds.begin(), ds.end());

  Passage best{0, ts[0], ds[0]};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ds[i] < best.distance) best = {0, ts[i], ds[i]};
  }
  // Refine every local minimum of the scan that could beat the best one: the
  // true distance differs from the sampled one by at most the sample spacing.
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const bool left_ok = i == 0 || ds[i] <= ds[i - 1];
    const bool right_ok = i + 1 == ts.size() || ds[i] <= ds[i + 1];
    if (!left_ok || !right_ok) continue;
    const double lo = i == 0 ? ts[i] : ts[i - 1];
    const double hi = i + 1 == ts.size() ? ts[i] : ts[i + 1];
    if (ds[i] > dmin + (hi - lo)) continue;
    if (hi <= lo) continue;
    std::uintmax_t iters = 100;
    const auto [t, d] = boost::math::tools::brent_find_minima(dist_at, lo, hi, 40, iters);
    if (d < best.distance) best = {0, t, d};
  }
  return best;
}

const char* to_string(BlockingVerdict v) {
  return v == BlockingVerdict::BlockedAtScale ? "BLOCKED_AT_SCALE" : "UNBLOCKED_WITNESSES";
}

SecurityReport verify_blocking(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                               const std::vector<TorusPoint>& blocking_set, double max_length, double delta,
                               const EnumerateOptions& opts) {
  for (const auto& b : blocking_set) {
    if (torus_coord_dist(b, p) <= delta || torus_coord_dist(b, q) <= delta) {
      throw Error(ErrorKind::InvalidArgument, "blocking points must stay away from p and q");
    }
  }
  return verify_blocking(profile, p, q, blocking_set, max_length, delta,
                         enumerate_joining(profile, p, q, max_length, opts));
}

SecurityReport verify_blocking(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                               const std::vector<TorusPoint>& blocking_set, double max_length, double delta,
                               EnumerationResult enumeration) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  for (const auto& b : blocking_set) {
    if (torus_coord_dist(b, p) <= delta || torus_coord_dist(b, q) <= delta) {
      throw Error(ErrorKind::InvalidArgument, "blocking points must stay away from p and q");
    }
  }
  SecurityReport rep;
  rep.p = canonical(p);
  rep.q = canonical(q);
  rep.max_length = max_length;
  rep.delta = delta;
  rep.blocking_set = blocking_set;
  rep.enumeration = std::move(enumeration);
  const auto& geos = rep.enumeration.geodesics;
  rep.geodesics.resize(geos.size());
  parallel_for(geos.size(), [&](std::size_t i) {
    const auto& g = geos[i];
    GeodesicBlocking gb;
    gb.index = i;
    gb.length = g.trace.length();
    gb.offset = g.offset;
    gb.nearest.distance = kInf;
    for (std::size_t k = 0; k < blocking_set.size(); ++k) {
      Passage ps = closest_passage(profile, g.trace, blocking_set[k], 0.0, gb.length);
      ps.point = k;
      if (ps.distance < gb.nearest.distance) gb.nearest = ps;
    }
    gb.blocked = gb.nearest.distance < delta;
    const double dth = g.trace.samples.back().theta - g.trace.samples.front().theta;
    gb.endpoint_velocity_gap = 2.0 * std::abs(std::sin(0.5 * dth));
    rep.geodesics[i] = gb;
  });
  for (const auto& gb : rep.geodesics) {
    if (!gb.blocked) rep.witnesses.push_back(gb.index);
  }
  rep.verdict = rep.witnesses.empty() ? BlockingVerdict::BlockedAtScale : BlockingVerdict::UnblockedWitnesses;
  return rep;
}

MidpointAnalysis midpoint_analysis(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                                   const EnumerationResult& enumeration, double cluster_tol) {
  MidpointAnalysis out;
  out.cluster_tol = cluster_tol;
  const auto& geos = enumeration.geodesics;
  std::vector<TorusPoint> mids(geos.size());
  parallel_for(geos.size(), [&](std::size_t i) {
    mids[i] = sample_point(trace_at(profile, geos[i].trace, 0.5 * geos[i].trace.length()));
  });
  for (std::size_t i = 0; i < geos.size(); ++i) {
    std::size_t c = 0;
    while (c < out.clusters.size() && local_distance(profile, out.clusters[c].center, mids[i]) > cluster_tol) ++c;
    if (c == out.clusters.size()) {
      MidpointCluster mc;
      mc.center = mids[i];
      mc.is_endpoint = local_distance(profile, mids[i], p) <= cluster_tol ||
                       local_distance(profile, mids[i], q) <= cluster_tol;
      out.clusters.push_back(mc);
    }
    ++out.clusters[c].size;
    out.entries.push_back({i, mids[i], c});
  }
  return out;
}

MidpointAnalysis midpoint_analysis(const MetricProfile& profile, TorusPoint p, TorusPoint q, double max_length,
                                   const EnumerateOptions& opts, double cluster_tol) {
  return midpoint_analysis(profile, p, q, enumerate_joining(profile, p, q, max_length, opts), cluster_tol);
}

// ---- insecurity certificates -----------------------------------------------------

InsecurityCertificate insecurity_certificate(const MetricProfile& profile, const AdmissibleCylinder& cyl,
                                             TorusPoint p, TorusPoint q, int n_max,
                                             const std::vector<double>& eps_grid, const CertificateOptions& opts) {
  if (profile.is_flat()) throw Error(ErrorKind::Rejected, "flat metrics have no admissible cylinder");
  if (n_max < 2) throw Error(ErrorKind::InvalidArgument, "n_max must be at least 2");
  if (eps_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty eps grid");
  for (double e : eps_grid) {
    if (!(e > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps values must be positive");
  }
  InsecurityCertificate cert;
  cert.p = canonical(p);
  cert.q = canonical(q);
  cert.cylinder = cyl;
  cert.options = opts;
  const auto lifts = strip_lifts(cyl, p, q, opts.strip.boundary_tol);
  cert.one_sided = distance_to_boundary(cyl, lifts[1]) <= opts.strip.boundary_tol;
  // Both boundary components are minimal closed geodesics of the class.
  cert.boundary_period = cyl.boundary_traces[0].length();

  std::vector<int> ns(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) ns[static_cast<std::size_t>(n - 1)] = n;
  cert.geodesics = strip_geodesics(profile, cyl, p, q, ns, opts.strip);
  const auto& geos = cert.geodesics;

  // (a)
  cert.lengths_ok = true;
  for (const auto& g : geos) cert.lengths.push_back(g.length);
  for (std::size_t i = 1; i < geos.size(); ++i) {
    const double gap = cert.lengths[i] - cert.lengths[i - 1];
    cert.gaps.push_back(gap);
    if (!(gap > 0.0) || std::abs(gap - cert.boundary_period) > opts.gap_tolerance * cert.boundary_period) {
      cert.lengths_ok = false;
    }
  }

  // (b) and (c)
  cert.min_boundary_distance.assign(geos.size(), kInf);
  cert.conjugate.assign(geos.size(), false);
  cert.first_conjugate.assign(geos.size(), kNaN);
  parallel_for(geos.size(), [&](std::size_t i) {
    const auto& smp = geos[i].trace.samples;
    double m = kInf;
    for (std::size_t k = 1; k + 1 < smp.size(); ++k) m = std::min(m, distance_to_boundary(cyl, {smp[k].X, smp[k].Y}));
    cert.min_boundary_distance[i] = m;
    const ConjugateReport cr = has_conjugate_points(profile, geos[i].trace, opts.strip.bvp.flow);
    cert.conjugate[i] = cr.has_conjugate;
    if (cr.first) cert.first_conjugate[i] = *cr.first;
  });
  cert.avoid_ok = std::all_of(cert.min_boundary_distance.begin(), cert.min_boundary_distance.end(),
                              [](double d) { return d > 0.0; });
  cert.conjugate_ok = std::none_of(cert.conjugate.begin(), cert.conjugate.end(), [](bool b) { return b; });

  // (d): t_n for n above n_max / 2 stays within growth_factor of t at n_max / 2.
  cert.excursion = excursion_from(cyl, geos, eps_grid, cert.one_sided);
  cert.reference_n = n_max / 2;
  cert.excursion_ok = true;
  const std::size_t ne = eps_grid.size();
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& ref = cert.excursion.records[static_cast<std::size_t>(cert.reference_n - 1) * ne + e];
    if (!ref.reached) {
      cert.excursion_ok = false;
      continue;
    }
    for (int n = cert.reference_n + 1; n <= n_max; ++n) {
      const auto& r = cert.excursion.records[static_cast<std::size_t>(n - 1) * ne + e];
      const bool within = r.reached && r.t_n <= opts.growth_factor * ref.t_n &&
                          ref.t_n <= opts.growth_factor * r.t_n;
      if (!within) cert.excursion_ok = false;
    }
  }
  cert.valid = cert.lengths_ok && cert.avoid_ok && cert.conjugate_ok && cert.excursion_ok;
  return cert;
}

EscapeResult escape_test(const MetricProfile& profile, const InsecurityCertificate& cert,
                         const std::vector<TorusPoint>& blocking_set, double delta) {
  if (!cert.valid) throw Error(ErrorKind::Rejected, "escape_test needs a valid certificate");
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  for (const auto& b : blocking_set) {
    if (torus_coord_dist(b, cert.p) <= delta || torus_coord_dist(b, cert.q) <= delta) {
      throw Error(ErrorKind::InvalidArgument, "blocking points must stay away from p and q");
    }
  }
  EscapeResult res;
  res.min_distance.assign(cert.geodesics.size(), kInf);
  parallel_for(cert.geodesics.size(), [&](std::size_t i) {
    const auto& g = cert.geodesics[i];
    for (const auto& b : blocking_set) {
      const Passage ps = closest_passage(profile, g.trace, b, 0.0, g.length, cert.options.strip.bvp.flow);
      res.min_distance[i] = std::min(res.min_distance[i], ps.distance);
    }
  });
  for (std::size_t i = 0; i < cert.geodesics.size(); ++i) {
    if (res.min_distance[i] >= delta) {
      res.witness = cert.geodesics[i].n;
      break;
    }
  }
  return res;
}

// ---- intersections -----------------------------------------------------------------

namespace {

struct Seg {
  double ax, ay, bx, by;
  double t0, t1;
};

std::vector<Seg> segments(const GeodesicTrace& tr) {
  std::vector<Seg> out;
  const auto& s = tr.samples;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) out.push_back({s[i].X, s[i].Y, s[i + 1].X, s[i + 1].Y, s[i].t, s[i + 1].t});
  return out;
}

// Newton on c1(t1) - c2(t2) - shift = 0 in the cover.
bool refine_crossing(const MetricProfile& profile, const GeodesicTrace& c1, const GeodesicTrace& c2, double sx,
                     double sy, double& t1, double& t2, const FlowOptions& flow) {
  for (int it = 0; it < 30; ++it) {
    const TraceSample a = trace_at(profile, c1, std::clamp(t1, 0.0, c1.length()), flow);
    const TraceSample b = trace_at(profile, c2, std::clamp(t2, 0.0, c2.length()), flow);
    const double rx = a.X - b.X - sx, ry = a.Y - b.Y - sy;
    const double v1x = std::cos(a.theta) / profile.f(a.Y), v1y = std::sin(a.theta);
    const double v2x = std::cos(b.theta) / profile.f(b.Y), v2y = std::sin(b.theta);
    // [v1, -v2] (dt1, dt2) = -r
    const double det = -v1x * v2y + v2x * v1y;
    if (det == 0.0) return false;
    const double dt1 = (-rx * -v2y - -ry * -v2x) / det;
    const double dt2 = (v1x * -ry - v1y * -rx) / det;
    t1 += dt1;
    t2 += dt2;
    if (std::hypot(dt1, dt2) < 1e-14 || std::hypot(rx, ry) < 1e-15) return true;
  }
  return true;
}

}  // namespace

IntersectionResult intersection_count(const MetricProfile& profile, const GeodesicTrace& c1, const GeodesicTrace& c2,
                                      double min_angle, const FlowOptions& flow) {
  if (c1.samples.size() < 2 || c2.samples.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "intersection_count: traces need at least two samples");
  }
  const double L1 = c1.length(), L2 = c2.length();
  const std::vector<Seg> s1 = segments(c1), s2 = segments(c2);
  IntersectionResult res;
  for (const auto& a : s1) {
    const double a_minx = std::min(a.ax, a.bx), a_maxx = std::max(a.ax, a.bx);
    const double a_miny = std::min(a.ay, a.by), a_maxy = std::max(a.ay, a.by);
    for (const auto& b : s2) {
      const double b_minx = std::min(b.ax, b.bx), b_maxx = std::max(b.ax, b.bx);
      const double b_miny = std::min(b.ay, b.by), b_maxy = std::max(b.ay, b.by);
      // Integer translates k with [a] meeting [b] + k.
      for (long kx = static_cast<long>(std::ceil(a_minx - b_maxx)); kx <= static_cast<long>(std::floor(a_maxx - b_minx)); ++kx) {
        for (long ky = static_cast<long>(std::ceil(a_miny - b_maxy)); ky <= static_cast<long>(std::floor(a_maxy - b_miny));
             ++ky) {
          const double cx = b.ax + kx, cy = b.ay + ky;
          const double dx = a.bx - a.ax, dy = a.by - a.ay;
          const double ex = b.bx - b.ax, ey = b.by - b.ay;
          const double den = dx * ey - dy * ex;
          if (den == 0.0) continue;
          const double wx = cx - a.ax, wy = cy - a.ay;
          const double s = (wx * ey - wy * ex) / den;
          const double u = (wx * dy - wy * dx) / den;
          // Half-open in both parameters so shared vertices count once.
          if (s < 0.0 || s >= 1.0 || u < 0.0 || u >= 1.0) continue;
          double t1 = a.t0 + s * (a.t1 - a.t0), t2 = b.t0 + u * (b.t1 - b.t0);
          refine_crossing(profile, c1, c2, static_cast<double>(kx), static_cast<double>(ky), t1, t2, flow);
          const TraceSample p1 = trace_at(profile, c1, std::clamp(t1, 0.0, L1), flow);
          const TraceSample p2 = trace_at(profile, c2, std::clamp(t2, 0.0, L2), flow);
          const double dth = wrap_angle(p2.theta - p1.theta);
          const double ang = std::abs(dth);
          if (std::min(ang, std::numbers::pi - ang) < min_angle) {
            throw Error(ErrorKind::TangencyDetected, "crossing angle below tolerance");
          }
          Crossing c;
          c.t1 = std::fmod(std::fmod(t1, L1) + L1, L1);
          c.t2 = std::fmod(std::fmod(t2, L2) + L2, L2);
          c.point = project({p1.X, p1.Y});
          c.sign = std::sin(dth) > 0.0 ? 1 : -1;
          c.angle = ang;
          // The same crossing can be reached from adjacent segments after refinement.
          const bool dup = std::any_of(res.crossings.begin(), res.crossings.end(), [&](const Crossing& o) {
            return circle_dist(o.t1 / L1, c.t1 / L1) * L1 < 1e-8 && circle_dist(o.t2 / L2, c.t2 / L2) * L2 < 1e-8;
          });
          if (!dup) res.crossings.push_back(c);
        }
      }
    }
  }
  std::sort(res.crossings.begin(), res.crossings.end(), [](const Crossing& x, const Crossing& y) { return x.t1 < y.t1; });
  for (const auto& c : res.crossings) res.signed_sum += c.sign;
  return res;
}

// ---- G conditions --------------------------------------------------------------------

GConditions g_conditions(const MetricProfile& profile, const GConditionOptions& opts) {
  GConditions out;
  out.cluster_tol = opts.cylinders.periodic.cluster_tol;
  out.eigen_margin = opts.eigen_margin;
  out.classes.resize(opts.classes.size());
  for (std::size_t i = 0; i < opts.classes.size(); ++i) {
    const ClassScan scan = scan_class(profile, opts.classes[i], opts.cylinders);
    ClassDiagnostic d;
    d.h = opts.classes[i];
    d.foliated = scan.foliated;
    d.cylinders = scan.cylinders.size();
    d.clusters = scan.minimizers.size();
    d.min_length = kInf;
    for (const auto& m : scan.minimizers) d.min_length = std::min(d.min_length, m.length);
    if (d.clusters == 1 && !d.foliated) {
      MonodromyOptions mo;
      mo.flow = opts.cylinders.periodic.flow;
      d.eigen = eigenvalues(monodromy(profile, scan.minimizers.front().trace, mo));
      d.have_monodromy = true;
      const double g1 = std::hypot(d.eigen.re1 - 1.0, d.eigen.im1);
      const double g2 = std::hypot(d.eigen.re2 - 1.0, d.eigen.im2);
      d.nondegenerate = g1 > opts.eigen_margin && g2 > opts.eigen_margin;
    }
    out.g1 = out.g1 || d.cylinders > 0;
    out.classes[i] = d;
  }
  for (std::size_t i = 0; i < out.classes.size(); ++i) {
    for (std::size_t j = i + 1; j < out.classes.size(); ++j) {
      const auto& a = out.classes[i];
      const auto& b = out.classes[j];
      if (std::labs(intersection_number(a.h, b.h)) != 1) continue;
      if (a.clusters != 1 || b.clusters != 1 || a.foliated || b.foliated) continue;
      const bool nd = a.nondegenerate && b.nondegenerate;
      if (!out.g2 || (nd && !out.g3)) out.g2_pair = std::array<HomologyClass, 2>{a.h, b.h};
      out.g2 = true;
      out.g3 = out.g3 || nd;
    }
  }
  return out;
}

}  // namespace geoblock
