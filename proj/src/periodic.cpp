// Minimal closed geodesics in an integer homology class.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "geoblock/connect.hpp"
#include "geoblock/errors.hpp"
#include "geoblock/random.hpp"
#include "integrator.hpp"
#include "parallel.hpp"

namespace geoblock {

namespace {

using State9 = std::array<double, 9>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) { return a - kTwoPi * std::round(a / kTwoPi); }

State9 propagate(const MetricProfile& profile, double X, double Y, double theta, double length,
                 const FlowOptions& flow) {
  detail::VariationalSystem sys{&profile};
  detail::Driver<9, detail::VariationalSystem> drv(sys, flow);
  State9 x{X, Y, theta, 0, 1, 0, 0, 0, 1};
  drv.advance(x, 0.0, length, std::numeric_limits<double>::infinity(),
              [](double, const State9&, double, const State9&) { return true; });
  return x;
}

// Transversal coordinate of the loop, modulo one.
double transversal_mean(const GeodesicTrace& t, HomologyClass h) {
  double c = 0.0, s = 0.0;
  for (const auto& p : t.samples) {
    const double u = -static_cast<double>(h.n) * p.X + static_cast<double>(h.m) * p.Y;
    c += std::cos(kTwoPi * u);
    s += std::sin(kTwoPi * u);
  }
  return std::atan2(s, c) / kTwoPi;
}

double start_key(const PeriodicGeodesic& g) {
  const CoverPoint s = g.trace.start();
  return g.h.n == 0 ? wrap01(s.Y) : wrap01(s.X);
}

}  // namespace

std::optional<PeriodicGeodesic> polish_closed(const MetricProfile& profile, HomologyClass h,
                                              CoverPoint P, double theta, double length,
                                              const PeriodicOptions& opts) {
  const double hn = std::hypot(static_cast<double>(h.m), static_cast<double>(h.n));
  if (hn == 0.0) throw Error(ErrorKind::InvalidArgument, "polish_closed: zero class");
  const double nuX = -static_cast<double>(h.n) / hn, nuY = static_cast<double>(h.m) / hn;
  double s = 0.0, th = theta, ell = length;
  double rn = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    const double X0 = P.X + s * nuX, Y0 = P.Y + s * nuY;
    const State9 x = propagate(profile, X0, Y0, th, ell, opts.flow);
    Eigen::Vector3d r(x[0] - X0 - static_cast<double>(h.m), x[1] - Y0 - static_cast<double>(h.n),
                      wrap_angle(x[2] - th));
    rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= opts.closure_tol) break;
    const ProfileValue v = profile.eval(x[1]);
    const double c = std::cos(x[2]);
    Eigen::Matrix3d J;
    J << nuY * x[3], x[6], c / v.f,
        nuY * x[4] - nuY, x[7], std::sin(x[2]),
        nuY * x[5], x[8] - 1.0, v.df * c / v.f;
    // Families of closed geodesics make J singular; the pseudo-inverse
    // picks the minimum-norm correction.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    Eigen::Vector3d inv = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) inv[i] = sv[i] > 1e-10 * sv[0] ? 1.0 / sv[i] : 0.0;
    Eigen::Vector3d d = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * (-r);
    const double cap = 0.25;
    const double dn = d.lpNorm<Eigen::Infinity>();
    if (dn > cap) d *= cap / dn;
    s += d[0];
    th += d[1];
    ell += d[2];
    if (!(ell > 0.0)) return std::nullopt;
  }
  if (!(rn <= opts.closure_tol)) return std::nullopt;
  PeriodicGeodesic g;
  g.h = h;
  g.length = ell;
  g.trace = integrate_heading(profile, {P.X + s * nuX, P.Y + s * nuY}, th, ell, opts.flow);
  return g;
}

std::vector<PeriodicGeodesic> minimal_periodic_candidates(const MetricProfile& profile, HomologyClass h,
                                                          const std::vector<CoverPoint>& bases,
                                                          const PeriodicOptions& opts) {
  if (!is_prime(h) || h.is_zero()) throw Error(ErrorKind::NotPrime, "minimal_periodic: class must be prime");
  const auto nverts = static_cast<std::size_t>(64 * (std::labs(h.m) + std::labs(h.n)));
  std::vector<std::optional<PeriodicGeodesic>> cands(bases.size());
  parallel_for(bases.size(), [&](std::size_t i) {
    Polygon poly;
    poly.closed = true;
    poly.offset = h;
    poly.vertices.reserve(nverts);
    for (std::size_t k = 0; k < nverts; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(nverts);
      poly.vertices.push_back({bases[i].X + u * static_cast<double>(h.m),
                               bases[i].Y + u * static_cast<double>(h.n)});
    }
    const ShortenResult sh = shorten(profile, std::move(poly), opts.shorten);
    const auto& v = sh.polygon.vertices;
    const CoverPoint a = v[0], b = v[1];
    const double th = std::atan2(b.Y - a.Y, profile.f(0.5 * (a.Y + b.Y)) * (b.X - a.X));
    cands[i] = polish_closed(profile, h, a, th, sh.length, opts);
  });

  std::vector<PeriodicGeodesic> all;
  for (auto& c : cands) {
    if (c) all.push_back(std::move(*c));
  }
  if (all.empty()) throw Error(ErrorKind::NoConvergence, "minimal_periodic: no closed geodesic converged");
  double Lmin = std::numeric_limits<double>::infinity();
  for (const auto& g : all) Lmin = std::min(Lmin, g.length);
  std::vector<PeriodicGeodesic> kept;
  for (auto& g : all) {
    if (g.length <= Lmin + opts.length_tol) kept.push_back(std::move(g));
  }
  return kept;
}

std::vector<PeriodicGeodesic> cluster_periodic(std::vector<PeriodicGeodesic> loops, double cluster_tol) {
  std::vector<PeriodicGeodesic> reps;
  std::vector<double> keys;
  for (auto& g : loops) {
    const double key = transversal_mean(g.trace, g.h);
    const TorusPoint s0 = project(g.trace.start());
    bool dup = false;
    for (std::size_t j = 0; j < reps.size() && !dup; ++j) {
      if (circle_dist(key, keys[j]) > 0.05) continue;
      // One sample already farther than the threshold settles it.
      if (point_trace_distance(s0, reps[j].trace) > cluster_tol) continue;
      dup = hausdorff_torus(g.trace, reps[j].trace) <= cluster_tol;
    }
    if (!dup) {
      keys.push_back(key);
      reps.push_back(std::move(g));
    }
  }
  std::stable_sort(reps.begin(), reps.end(), [](const PeriodicGeodesic& a, const PeriodicGeodesic& b) {
    return start_key(a) < start_key(b);
  });
  return reps;
}

std::vector<PeriodicGeodesic> minimal_periodic_from(const MetricProfile& profile, HomologyClass h,
                                                    const std::vector<CoverPoint>& bases,
                                                    const PeriodicOptions& opts) {
  return cluster_periodic(minimal_periodic_candidates(profile, h, bases, opts), opts.cluster_tol);
}

double transversal_coordinate(const GeodesicTrace& trace, HomologyClass h) {
  return transversal_mean(trace, h);
}

std::vector<PeriodicGeodesic> minimal_periodic(const MetricProfile& profile, HomologyClass h,
                                               const PeriodicOptions& opts) {
  if (!is_prime(h) || h.is_zero()) throw Error(ErrorKind::NotPrime, "minimal_periodic: class must be prime");
  if (opts.seeds < 1) throw Error(ErrorKind::InvalidArgument, "minimal_periodic: seeds must be positive");
  const HomologyClass k = dual_class(h);
  std::mt19937_64 rng(opts.rng_seed);
  std::vector<CoverPoint> bases;
  const auto n = static_cast<double>(opts.seeds);
  for (int i = 0; i < opts.seeds; ++i) {
    const double u = (static_cast<double>(i) + 0.5 + uniform(rng, -0.25, 0.25)) / n;
    bases.push_back({u * static_cast<double>(k.m), u * static_cast<double>(k.n)});
  }
  return minimal_periodic_from(profile, h, bases, opts);
}

}  // namespace geoblock
