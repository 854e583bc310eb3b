#include <cmath>
#include <numbers>

#include <doctest.h>

#include "geoblock/connect.hpp"
#include "geoblock/errors.hpp"

using namespace geoblock;
using doctest::Approx;

TEST_CASE("homology class arithmetic") {
  CHECK(gcd_abs(-12, 18) == 6);
  CHECK(is_prime({1, 2}));
  CHECK_FALSE(is_prime({2, 4}));
  CHECK_FALSE(is_prime({0, 0}));
  CHECK(intersection_number({1, 0}, {0, 1}) == 1);
  CHECK(intersection_number({1, 0}, {1, 2}) == 2);
  for (HomologyClass h : {HomologyClass{1, 0}, HomologyClass{0, 1}, HomologyClass{3, -5}, HomologyClass{-7, 2}}) {
    CHECK(intersection_number(h, dual_class(h)) == 1);
  }
  CHECK_THROWS_AS(dual_class({2, 2}), Error);
}

TEST_CASE("shooting on the flat torus hits the straight-line heading") {
  const MetricProfile flat = MetricProfile::flat();
  const JoiningGeodesic g = shoot(flat, {0.1, 0.2}, {1.6, 1.0}, 0.4, 10.0);
  CHECK(g.initial_heading == Approx(std::atan2(0.8, 1.5)).epsilon(1e-9));
  CHECK(g.trace.length() == Approx(std::hypot(1.5, 0.8)).epsilon(1e-9));
  CHECK(g.hit_error < 1e-8);
}

TEST_CASE("flat enumeration counts lattice lifts") {
  const MetricProfile flat = MetricProfile::flat();
  const EnumerationResult er = enumerate_joining(flat, {0.0, 0.0}, {0.25, 0.5}, 2.0);
  std::size_t expect = 0;
  for (int m = -3; m <= 3; ++m) {
    for (int n = -3; n <= 3; ++n) expect += std::hypot(0.25 + m, 0.5 + n) <= 2.0 ? 1 : 0;
  }
  CHECK(er.geodesics.size() == expect);
  for (std::size_t i = 1; i < er.geodesics.size(); ++i) {
    CHECK(er.geodesics[i - 1].trace.length() <= er.geodesics[i].trace.length());
  }
  CHECK_THROWS_AS(enumerate_joining(flat, {0.0, 0.0}, {0.25, 0.5}, -1.0), Error);
}

TEST_CASE("polygon shortening converges to the chord on the flat torus") {
  const MetricProfile flat = MetricProfile::flat();
  Polygon poly{{{0.0, 0.0}, {0.3, 0.6}, {0.5, -0.2}, {1.0, 0.0}}, false, {}};
  const ShortenResult r = shorten(flat, poly);
  CHECK(r.converged);
  CHECK(r.length == Approx(1.0).epsilon(1e-9));
  CHECK(polygon_length(flat, r.polygon) == Approx(r.length));
}

TEST_CASE("boundary value solver on the flat torus") {
  const MetricProfile flat = MetricProfile::flat();
  const BvpSolution s = solve_cover_geodesic(flat, {0.1, 0.1}, {2.3, -0.7});
  REQUIRE(s.converged);
  CHECK(s.length == Approx(std::hypot(2.2, 0.8)).epsilon(1e-10));
  CHECK(s.initial_heading == Approx(std::atan2(-0.8, 2.2)).epsilon(1e-10));
}

TEST_CASE("westward joins converge") {
  // Headings near +-pi used to split across the atan2 branch cut.
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const BvpSolution s = solve_cover_geodesic(rd, {0.885, 0.394}, {0.257, 0.316});
  REQUIRE(s.converged);
  CHECK(s.residual < 1e-10);
  CHECK(s.trace.end().X == Approx(0.257).epsilon(1e-9));
  CHECK(s.trace.end().Y == Approx(0.316).epsilon(1e-9));
  const double F0 = sample_clairaut(rd, s.trace.samples.front());
  CHECK(sample_clairaut(rd, s.trace.samples.back()) == Approx(F0).epsilon(1e-9));
}

TEST_CASE("shortest cover geodesic along the hyperbolic equator") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const BvpSolution s = shortest_cover_geodesic(rd, {0.1, 0.0}, {3.1, 0.0});
  REQUIRE(s.converged);
  CHECK(s.length == Approx(3.0).epsilon(1e-10));
  // Distances obey the triangle inequality through an intermediate point.
  const BvpSolution a = shortest_cover_geodesic(rd, {0.1, 0.3}, {0.6, 0.8});
  const BvpSolution b = shortest_cover_geodesic(rd, {0.6, 0.8}, {1.4, 0.2});
  const BvpSolution c = shortest_cover_geodesic(rd, {0.1, 0.3}, {1.4, 0.2});
  REQUIRE((a.converged && b.converged && c.converged));
  CHECK(c.length <= a.length + b.length + 1e-10);
}

TEST_CASE("minimal closed geodesics") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const auto eq = minimal_periodic(rd, {1, 0});
  REQUIRE(eq.size() == 1);
  CHECK(eq[0].length == Approx(1.0).epsilon(1e-9));
  for (const auto& s : eq[0].trace.samples) CHECK(circle_dist(wrap01(s.Y), 0.0) < 1e-6);
  const auto mer = minimal_periodic(rd, {0, 1});
  REQUIRE_FALSE(mer.empty());
  CHECK(mer[0].length == Approx(1.0).epsilon(1e-9));  // every meridian has unit length
  CHECK_THROWS_AS(minimal_periodic(rd, {2, 0}), Error);
}

TEST_CASE("minimal closed geodesics on the flat torus") {
  const MetricProfile flat = MetricProfile::flat();
  const auto loops = minimal_periodic(flat, {1, 2});
  REQUIRE_FALSE(loops.empty());
  CHECK(loops[0].length == Approx(std::sqrt(5.0)).epsilon(1e-9));
}

TEST_CASE("lift offsets, directions and minimality") {
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace tr = integrate_heading(flat, {0.2, 0.3}, std::atan2(1.0, 2.0), std::hypot(2.0, 1.0));
  const HomologyClass off = lift_offset(tr);
  CHECK(off.m == 2);
  CHECK(off.n == 1);
  const Direction d = homological_direction(tr);
  CHECK(d.x == Approx(2.0 / std::sqrt(5.0)));
  CHECK(d.y == Approx(1.0 / std::sqrt(5.0)));
  CHECK_THROWS_AS(homological_direction(tr, 100.0), Error);
  const MinimalityReport mr = is_homotopically_minimal(flat, tr, off);
  CHECK(mr.minimal);
  CHECK(std::abs(mr.margin) < 1e-6);
  CHECK(point_trace_distance({0.2, 0.3}, tr) < 1e-12);
}

TEST_CASE("latitude on the positively curved side is not minimal") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace outer = integrate_heading(rd, {0.2, 0.5}, 0.0, 3.0 * 1.5);
  const MinimalityReport mr = is_homotopically_minimal(rd, outer, lift_offset(outer));
  CHECK_FALSE(mr.minimal);
  CHECK(mr.margin > 0.1);
}
