// Acceptance run: one PASS/FAIL line per criterion, with the measured
// quantities next to their thresholds. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "geoblock/asymptotics.hpp"
#include "geoblock/connect.hpp"
#include "geoblock/errors.hpp"
#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"
#include "geoblock/random.hpp"
#include "geoblock/security.hpp"

using namespace geoblock;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what + (cond ? "" : " [X]");
    ok = ok && cond;
  }
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void run(int id, const char* title, const std::function<Check()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  try {
    c = body();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  if (!c.ok) ++failures;
  std::printf("[%s] criterion %d: %s (%.1f s) :: %s\n", c.ok ? "PASS" : "FAIL", id, title, seconds_since(t0),
              c.detail.c_str());
  std::fflush(stdout);
}

AdmissibleCylinder latitude_cylinder(const MetricProfile& prof, TorusPoint p, TorusPoint q) {
  for (const auto& cy : detect_cylinders(prof, {1, 0})) {
    try {
      strip_lifts(cy, p, q);
      return cy;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorKind::Rejected, "no latitude cylinder contains the pair");
}

Check conservation() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, MetricProfile>> profiles{
      {"round", MetricProfile::round(1.0, 2.0)},
      {"fourier", MetricProfile::fourier(2.0, {-0.8, 0.1}, {0.05})}};
  FlowOptions flow;
  flow.translate = false;
  std::mt19937_64 rng(20240611);
  for (const auto& [name, prof] : profiles) {
    double clairaut_drift = 0.0, speed_drift = 0.0;
    for (int i = 0; i < 100; ++i) {
      const CoverPoint P{uniform01(rng), uniform01(rng)};
      const double theta = uniform(rng, -kPi, kPi);
      const GeodesicTrace tr = integrate_heading(prof, P, theta, 100.0, flow);
      const double F0 = sample_clairaut(prof, tr.samples.front());
      // |F| <= max f at unit speed; scale by the start value or min f, whichever is larger.
      const double scale = std::max(std::abs(F0), prof.min_value());
      for (const auto& s : tr.samples) {
        clairaut_drift = std::max(clairaut_drift, std::abs(sample_clairaut(prof, s) - F0) / scale);
        speed_drift = std::max(speed_drift, std::abs(std::sqrt(speed_squared(prof, sample_state(prof, s))) - 1.0));
      }
      c.ok = c.ok && std::abs(tr.length() - 100.0) < 1e-12;
    }
    c.require(clairaut_drift < 1e-9, name + " clairaut " + num(clairaut_drift) + " < 1e-9");
    c.require(speed_drift < 1e-9, name + " speed " + num(speed_drift) + " < 1e-9");
  }
  const double t = seconds_since(t0);
  c.require(t < 10.0, "runtime " + num(t) + " s < 10 s");
  return c;
}

Check flat_oracle() {
  Check c;
  const MetricProfile flat = MetricProfile::flat();
  const TorusPoint p{0.0, 0.0}, q{0.5, 0.3};
  const double L = 5.0;
  std::size_t lattice = 0;
  for (int m = -6; m <= 6; ++m) {
    for (int n = -6; n <= 6; ++n) {
      if (std::hypot(0.5 + m, 0.3 + n) <= L) ++lattice;
    }
  }
  const EnumerationResult er = enumerate_joining(flat, p, q, L);
  c.require(er.geodesics.size() == lattice,
            "count " + std::to_string(er.geodesics.size()) + " == lattice " + std::to_string(lattice));
  double len_err = 0.0, mid_err = 0.0;
  for (const auto& g : er.geodesics) {
    const double dx = 0.5 + static_cast<double>(g.offset.m), dy = 0.3 + static_cast<double>(g.offset.n);
    len_err = std::max(len_err, std::abs(g.trace.length() - std::hypot(dx, dy)));
  }
  const MidpointAnalysis ma = midpoint_analysis(flat, p, q, er, 1e-9);
  for (std::size_t i = 0; i < er.geodesics.size(); ++i) {
    const auto& g = er.geodesics[i];
    const TorusPoint expect = canonical({(0.5 + static_cast<double>(g.offset.m)) / 2.0,
                                         (0.3 + static_cast<double>(g.offset.n)) / 2.0});
    mid_err = std::max(mid_err, torus_coord_dist(ma.entries[i].midpoint, expect));
  }
  c.require(len_err < 1e-9, "length error " + num(len_err) + " < 1e-9");
  c.require(mid_err < 1e-9, "midpoint error " + num(mid_err) + " < 1e-9");
  c.require(ma.clusters.size() == 4, "midpoint classes " + std::to_string(ma.clusters.size()) + " == 4");
  return c;
}

Check secure_side() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const TorusPoint p{0.1, 0.0}, q{0.37, 0.0};
  const double delta = 1e-4;
  const Involution inv = involution_for_pair(rd, 0.0, p.x, q.x);
  const std::vector<TorusPoint> B = blocking_candidates(inv, p, q, delta);
  c.require(B.size() <= 4 && !B.empty(), "blocking points " + std::to_string(B.size()) + " <= 4");
  const SecurityReport rep = verify_blocking(rd, p, q, B, 30.0, delta);
  std::size_t blocked = 0;
  double gap = 0.0, nearest = 0.0;
  for (const auto& g : rep.geodesics) {
    blocked += g.blocked ? 1 : 0;
    gap = std::max(gap, g.endpoint_velocity_gap);
    nearest = std::max(nearest, g.nearest.distance);
  }
  c.require(rep.geodesics.size() >= 20, "geodesics " + std::to_string(rep.geodesics.size()) + " >= 20");
  c.require(blocked == rep.geodesics.size(), "blocked " + std::to_string(blocked) + ", worst passage " + num(nearest) + " < 1e-4");
  c.require(rep.verdict == BlockingVerdict::BlockedAtScale, std::string("verdict ") + to_string(rep.verdict));
  c.require(gap < 1e-6, "endpoint velocity gap " + num(gap) + " < 1e-6");
  const double t = seconds_since(t0);
  c.require(t < 60.0, "runtime " + num(t) + " s < 60 s");
  return c;
}

Check insecure_side() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const TorusPoint p{0.1, 0.25}, q{0.37, 0.25};
  const AdmissibleCylinder cyl = latitude_cylinder(rd, p, q);
  const std::vector<double> eps{0.02, 0.05, 0.1};
  const InsecurityCertificate cert = insecurity_certificate(rd, cyl, p, q, 8, eps);
  c.require(cert.valid, std::string("certificate ") + (cert.valid ? "VALID" : "INVALID"));
  bool increasing = true;
  double worst_gap = 0.0;
  for (std::size_t i = 1; i < cert.lengths.size(); ++i) {
    increasing = increasing && cert.lengths[i] > cert.lengths[i - 1];
    worst_gap = std::max(worst_gap, std::abs(cert.lengths[i] - cert.lengths[i - 1] - cert.boundary_period) / cert.boundary_period);
  }
  c.require(increasing && worst_gap <= 0.2, "relative gap deviation " + num(worst_gap) + " <= 0.2");
  double closest = 1.0;
  for (double d : cert.min_boundary_distance) closest = std::min(closest, d);
  c.require(cert.avoid_ok && closest > 0.0, "closest interior approach to boundary " + num(closest));
  c.require(cert.conjugate_ok, "no conjugate points");
  // T(eps) for n = 5..8 against n = 4, recomputed from the records.
  double worst_ratio = 1.0;
  for (double e : eps) {
    double t4 = 0.0;
    for (const auto& r : cert.excursion.records) {
      if (r.n == 4 && r.eps == e) t4 = r.t_n;
    }
    for (const auto& r : cert.excursion.records) {
      if (r.eps != e || r.n < 5) continue;
      const double ratio = t4 > 0.0 ? std::max(r.t_n / t4, t4 / r.t_n) : INFINITY;
      worst_ratio = std::max(worst_ratio, ratio);
    }
  }
  c.require(worst_ratio <= 2.0, "T ratio vs n=4 " + num(worst_ratio) + " <= 2");
  std::mt19937_64 rng(7);
  std::vector<TorusPoint> B;
  while (B.size() < 5) {
    const TorusPoint b{uniform01(rng), uniform(rng, cyl.a_low + 0.05, cyl.a_high - 0.05)};
    if (torus_coord_dist(b, p) > 1e-2 && torus_coord_dist(b, q) > 1e-2) B.push_back(b);
  }
  const EscapeResult er = escape_test(rd, cert, B, 1e-3);
  c.require(er.witness.has_value(), er.witness ? "escape witness n=" + std::to_string(*er.witness) : "no escape witness");
  const double t = seconds_since(t0);
  c.require(t < 120.0, "runtime " + num(t) + " s < 120 s");
  return c;
}

Check one_sided() {
  Check c;
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const TorusPoint p{0.1, 0.25}, q{0.5, 0.0};
  const AdmissibleCylinder cyl = latitude_cylinder(rd, p, q);
  const InsecurityCertificate cert = insecurity_certificate(rd, cyl, p, q, 8, {0.02, 0.05, 0.1});
  c.require(cert.one_sided, "one-sided form selected");
  c.require(cert.valid, std::string("certificate ") + (cert.valid ? "VALID" : "INVALID"));
  return c;
}

Check intersections() {
  Check c;
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace equator = integrate_heading(rd, {0.0, 0.0}, 0.0, rd.f(0.0));
  const GeodesicTrace meridian = integrate_heading(rd, {0.3, 0.0}, kPi / 2.0, 1.0);
  const IntersectionResult a = intersection_count(rd, equator, meridian);
  c.require(a.count() == 1, "equator x meridian count " + std::to_string(a.count()) + " == 1");
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace h10 = integrate_heading(flat, {0.0, 0.1}, 0.0, 1.0);
  const GeodesicTrace h12 = integrate_heading(flat, {0.3, 0.0}, std::atan2(2.0, 1.0), std::sqrt(5.0));
  const IntersectionResult b = intersection_count(flat, h10, h12);
  bool same_sign = true;
  for (const auto& x : b.crossings) same_sign = same_sign && x.sign == b.crossings.front().sign;
  c.require(b.count() == 2, "flat (1,0) x (1,2) count " + std::to_string(b.count()) + " == 2");
  c.require(same_sign && b.count() > 0, "constant sign");
  return c;
}

Check jacobi_monodromy() {
  Check c;
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const double k = 2.0 * kPi;  // sqrt(-K) on the inner equator
  const GeodesicTrace inner = integrate_heading(rd, {0.0, 0.0}, 0.0, 3.0);
  const JacobiSolution js = jacobi(rd, inner, 0.0, 1.0);
  double rel = 0.0;
  for (std::size_t i = 1; i < js.samples.size(); ++i) {
    const double exact = std::sinh(k * js.samples[i].t) / k;
    rel = std::max(rel, std::abs(js.value(i) - exact) / std::abs(exact));
  }
  c.require(rel < 1e-7, "sinh relative error " + num(rel) + " < 1e-7");
  const GeodesicTrace period = integrate_heading(rd, {0.0, 0.0}, 0.0, rd.f(0.0));
  const Matrix2 M = monodromy(rd, period);
  const double det_err = std::abs(determinant(M) - 1.0);
  c.require(det_err < 1e-8, "|det - 1| " + num(det_err) + " < 1e-8");
  const Eigen2 ev = eigenvalues(M);
  const double d1 = std::hypot(ev.re1 - 1.0, ev.im1), d2 = std::hypot(ev.re2 - 1.0, ev.im2);
  c.require(std::min(d1, d2) > 1e-6, "eigenvalues " + num(ev.re1) + ", " + num(ev.re2) + " away from 1");
  const double K_outer = -rd.eval(0.5).d2f / rd.f(0.5);
  const GeodesicTrace outer = integrate_heading(rd, {0.0, 0.5}, 0.0, 3.0);
  const ConjugateReport cr = has_conjugate_points(rd, outer);
  const double err = cr.first ? std::abs(*cr.first - kPi / std::sqrt(K_outer)) : INFINITY;
  c.require(err < 1e-7, "first conjugate point error " + num(err) + " < 1e-7");
  return c;
}

Check busemann() {
  Check c;
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const RaySpec ray = make_ray(rd, {0.0, 0.0}, 0.0, 200.0);
  c.require(ray.asserted_minimal, "equator ray subsegments minimal");
  std::mt19937_64 rng(11);
  std::vector<CoverPoint> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({uniform01(rng), uniform01(rng)});
  const std::vector<double> horizons{50.0, 100.0, 200.0};
  std::vector<std::vector<double>> B(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    for (const auto& P : pts) B[h].push_back(busemann_estimate(rd, ray, P, horizons[h]));
  }
  // t -> d(P, c(t)) - t is non-increasing; slack covers solver noise.
  double worst_increase = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    worst_increase = std::max({worst_increase, B[1][i] - B[0][i], B[2][i] - B[1][i]});
  }
  c.require(worst_increase <= 1e-9, "monotonicity: worst increase " + num(worst_increase) + " <= 1e-9");
  double worst_excess = -INFINITY;
  int unsolved = 0;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t j = (i + 1) % pts.size();
      const BvpSolution d = shortest_cover_geodesic(rd, pts[i], pts[j]);
      if (!d.converged) ++unsolved;
      worst_excess = std::max(worst_excess, std::abs(B[h][i] - B[h][j]) - d.length);
    }
  }
  c.require(unsolved == 0, "distance solves failed: " + std::to_string(unsolved));
  c.require(worst_excess <= 1e-9, "Lipschitz: worst |dB| - d " + num(worst_excess) + " <= 1e-9");
  const double self = coray_residual(rd, ray, ray.carrier, 1.0, 20.0);
  c.require(self < 1e-9, "ray coray residual " + num(self) + " < 1e-9");
  const MetricProfile flat = MetricProfile::flat();
  const RaySpec fray = make_ray(flat, {0.0, 0.0}, 0.0, 200.0);
  const GeodesicTrace perp = integrate_heading(flat, {0.0, 0.0}, kPi / 2.0, 2.0);
  const double perp_res = coray_residual(flat, fray, perp, 0.5, 1.5);
  c.require(perp_res >= 0.5, "flat perpendicular residual " + num(perp_res) + " >= 0.5");
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Check determinism(const std::string& cli, const std::string& profile_dir) {
  Check c;
  const auto base = std::filesystem::temp_directory_path() / ("geoblock_accept_" + std::to_string(::getpid()));
  std::vector<std::string> outputs;
  for (int run = 0; run < 2; ++run) {
    const auto dir = base / std::to_string(run);
    const std::string cmd = "\"" + cli + "\" insecure --profile \"" + profile_dir + "/round_1_2.json\" --out \"" +
                            dir.string() + "\" --p 0.1,0.25 --q 0.37,0.25 --nmax 8 --eps 0.02,0.05,0.1 --seed 42 > /dev/null";
    const int rc = std::system(cmd.c_str());
    c.require(rc == 0, "run " + std::to_string(run) + " exit status " + std::to_string(rc));
    outputs.push_back(slurp(dir / "insecure.json"));
  }
  c.require(!outputs[0].empty() && outputs[0] == outputs[1],
            "insecure.json byte-identical (" + std::to_string(outputs[0].size()) + " bytes)");
  std::filesystem::remove_all(base);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "geoblock";
  const std::string profiles = argc > 2 ? argv[2] : "profiles";
  run(1, "conservation of the Clairaut value and unit speed", conservation);
  run(2, "flat enumeration against the lattice", flat_oracle);
  run(3, "blocking by involution fixed points on the inner equator", secure_side);
  run(4, "insecurity certificate for an interior pair", insecure_side);
  run(5, "one-sided certificate with q on the boundary", one_sided);
  run(6, "intersection counts of closed geodesics", intersections);
  run(7, "Jacobi field and monodromy oracles", jacobi_monodromy);
  run(8, "Busemann function checks", busemann);
  run(9, "deterministic insecure reports", [&] { return determinism(cli, profiles); });
  std::printf("%d criterion/criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
