#include <cmath>
#include <functional>
#include <numbers>

#include <doctest.h>

#include "geoblock/errors.hpp"
#include "geoblock/security.hpp"

using namespace geoblock;
using doctest::Approx;

namespace {
ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Rejected;
}
}  // namespace

TEST_CASE("involution fixed points") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const Involution inv = involution_for_pair(rd, 0.0, 0.1, 0.37);
  CHECK(inv.r == Approx(0.235));
  CHECK(inv.a == Approx(0.0));
  for (const auto& f : inv.fixed_points) CHECK(torus_coord_dist(inv.apply(f), f) < 1e-12);
  const TorusPoint p{0.1, 0.0};
  CHECK(torus_coord_dist(inv.apply(p), {0.37, 0.0}) < 1e-12);
  CHECK(blocking_candidates(inv, p, {0.37, 0.0}, 1e-4).size() == 4);
  // Fixed points within the exclusion radius of the given pair are dropped.
  const Involution sym = involution_for_pair(rd, 0.0, 0.0, 0.5);
  const auto left = blocking_candidates(sym, {0.25, 0.0}, {0.75, 0.0}, 1e-4);
  CHECK(left.size() == 2);
  for (const auto& b : left) CHECK(b.y == doctest::Approx(0.5));
  CHECK(kind_of([&] { involution_for_pair(rd, 0.25, 0.1, 0.3); }) == ErrorKind::HypothesisViolated);
  CHECK(kind_of([] { involution_for_pair(MetricProfile::flat(), 0.0, 0.1, 0.3); }) == ErrorKind::HypothesisViolated);
  const MetricProfile lopsided = MetricProfile::fourier(2.0, {-0.5, 0.0}, {0.0, 0.1});
  CHECK(kind_of([&] { involution_for_pair(lopsided, lopsided.min_location(), 0.1, 0.3); }) ==
        ErrorKind::HypothesisViolated);
}

TEST_CASE("closest passage on a flat line") {
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace tr = integrate_heading(flat, {0.0, 0.0}, 0.0, 3.0);
  const Passage ps = closest_passage(flat, tr, {0.6, 0.01}, 0.0, 3.0);
  CHECK(ps.distance == Approx(0.01).epsilon(1e-9));
  CHECK(std::fmod(ps.t, 1.0) == Approx(0.6).epsilon(1e-8));
}

TEST_CASE("short-scale blocking on the inner equator") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const TorusPoint p{0.1, 0.0}, q{0.37, 0.0};
  const Involution inv = involution_for_pair(rd, 0.0, p.x, q.x);
  const auto B = blocking_candidates(inv, p, q, 1e-4);
  const SecurityReport rep = verify_blocking(rd, p, q, B, 3.0, 1e-4);
  CHECK(rep.geodesics.size() >= 3);
  CHECK(rep.verdict == BlockingVerdict::BlockedAtScale);
  for (const auto& g : rep.geodesics) {
    CHECK(g.blocked);
    CHECK(g.endpoint_velocity_gap < 1e-6);
  }
  // A blocking set missing the fixed points fails.
  const SecurityReport bad = verify_blocking(rd, p, q, {TorusPoint{0.6, 0.3}}, 3.0, 1e-4);
  CHECK(bad.verdict == BlockingVerdict::UnblockedWitnesses);
  CHECK_FALSE(bad.witnesses.empty());
  CHECK(kind_of([&] { verify_blocking(rd, p, q, {p}, 3.0, 1e-4); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("flat midpoints fall into parity classes") {
  const MetricProfile flat = MetricProfile::flat();
  const MidpointAnalysis ma = midpoint_analysis(flat, {0.0, 0.0}, {0.5, 0.3}, 3.0);
  CHECK(ma.clusters.size() == 4);
  std::size_t total = 0;
  for (const auto& c : ma.clusters) total += c.size;
  CHECK(total == ma.entries.size());
}

TEST_CASE("insecurity certificate and escape test") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const auto cyls = detect_cylinders(rd, {1, 0});
  REQUIRE(cyls.size() == 1);
  const TorusPoint p{0.1, 0.25}, q{0.37, 0.25};
  const InsecurityCertificate cert = insecurity_certificate(rd, cyls[0], p, q, 4, {0.05, 0.1});
  CHECK(cert.valid);
  CHECK_FALSE(cert.one_sided);
  CHECK(cert.boundary_period == Approx(1.0).epsilon(1e-9));
  CHECK(cert.lengths.size() == 4);
  CHECK(cert.reference_n == 2);
  const EscapeResult er = escape_test(rd, cert, {TorusPoint{0.5, 0.6}, TorusPoint{0.2, 0.4}}, 1e-3);
  REQUIRE(er.witness.has_value());
  CHECK(er.min_distance[static_cast<std::size_t>(*er.witness - 1)] >= 1e-3);
  // Blocking points on every c_n exhaust the test.
  std::vector<TorusPoint> on_curves;
  for (const auto& g : cert.geodesics) {
    const auto& s = g.trace.samples[g.trace.samples.size() / 2];
    on_curves.push_back(project({s.X, s.Y}));
  }
  CHECK_FALSE(escape_test(rd, cert, on_curves, 1e-3).witness.has_value());
  CHECK(kind_of([&] { insecurity_certificate(rd, cyls[0], p, q, 1, {0.1}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { insecurity_certificate(MetricProfile::flat(), cyls[0], p, q, 4, {0.1}); }) == ErrorKind::Rejected);
}

TEST_CASE("intersection counts") {
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace a = integrate_heading(flat, {0.0, 0.1}, 0.0, 1.0);
  const GeodesicTrace b = integrate_heading(flat, {0.3, 0.0}, std::atan2(3.0, 1.0), std::sqrt(10.0));
  const IntersectionResult r = intersection_count(flat, a, b);
  CHECK(r.count() == 3);  // |det((1,0),(1,3))|
  CHECK(std::abs(r.signed_sum) == 3);
  const GeodesicTrace c = integrate_heading(flat, {0.0, 0.6}, 0.0, 1.0);
  CHECK(intersection_count(flat, a, c).count() == 0);
  // Crossing angle atan(3) falls below a demanding threshold.
  CHECK(kind_of([&] { intersection_count(flat, a, b, 1.3); }) == ErrorKind::TangencyDetected);
}

TEST_CASE("G conditions on the round torus") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  GConditionOptions o;
  o.classes = {{1, 0}, {0, 1}};
  o.cylinders.seeds = 256;
  const GConditions g = g_conditions(rd, o);
  REQUIRE(g.classes.size() == 2);
  CHECK(g.g1);
  CHECK(g.classes[0].cylinders == 1);
  CHECK(g.classes[0].have_monodromy);
  CHECK(g.classes[0].nondegenerate);
  CHECK(g.classes[1].foliated);
  CHECK_FALSE(g.g2);  // meridians foliate the torus
}
