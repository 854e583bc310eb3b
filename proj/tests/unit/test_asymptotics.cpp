#include <cmath>
#include <numbers>

#include <doctest.h>

#include "geoblock/asymptotics.hpp"
#include "geoblock/errors.hpp"

using namespace geoblock;
using doctest::Approx;

TEST_CASE("busemann function of a flat ray is minus the projection") {
  const MetricProfile flat = MetricProfile::flat();
  const RaySpec ray = make_ray(flat, {0.0, 0.0}, 0.0, 200.0);
  CHECK(ray.asserted_minimal);
  CHECK(ray.horizon() == Approx(200.0));
  // Exact value -x + y^2 / (2 (H - x)) + O(H^-3).
  const CoverPoint P{0.3, 0.4};
  const double b = busemann_estimate(flat, ray, P, 200.0);
  CHECK(b == Approx(-0.3 + 0.16 / (2.0 * 199.7)).epsilon(1e-9));
  // Points on the ray take the exact value -s.
  CHECK(busemann_estimate(flat, ray, CoverPoint{5.0, 0.0}, 100.0) == Approx(-5.0).epsilon(1e-12));
  CHECK_THROWS_AS(busemann_estimate(flat, ray, P, 300.0), Error);
}

TEST_CASE("busemann estimates decrease with the horizon") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const RaySpec ray = make_ray(rd, {0.0, 0.0}, 0.0, 60.0, false);
  const CoverPoint P{0.3, 0.2};
  const double b20 = busemann_estimate(rd, ray, P, 20.0);
  const double b60 = busemann_estimate(rd, ray, P, 60.0);
  CHECK(b60 <= b20 + 1e-9);
  CHECK(std::abs(b60) <= std::hypot(0.3 * 2.0, 0.2) + 1e-9);  // |B(P) - B(c(0))| <= d(P, c(0))
}

TEST_CASE("coray residuals") {
  const MetricProfile flat = MetricProfile::flat();
  const RaySpec ray = make_ray(flat, {0.0, 0.0}, 0.0, 100.0);
  const GeodesicTrace parallel = integrate_heading(flat, {0.0, 0.5}, 0.0, 10.0);
  CHECK(coray_residual(flat, ray, parallel, 1.0, 5.0) < 1e-3);
  const GeodesicTrace perp = integrate_heading(flat, {0.0, 0.0}, std::numbers::pi / 2.0, 3.0);
  // B_H(0, y) = sqrt(H^2 + y^2) - H on the flat torus.
  const double expect = 2.0 + std::sqrt(1e4 + 6.25) - std::sqrt(1e4 + 0.25);
  CHECK(coray_residual(flat, ray, perp, 0.5, 2.5) == Approx(expect).epsilon(1e-9));
  CHECK_THROWS_AS(coray_residual(flat, ray, perp, 2.0, 1.0), Error);
}

TEST_CASE("latitude cylinders of the round torus") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const ClassScan scan = scan_class(rd, {1, 0});
  CHECK_FALSE(scan.foliated);
  REQUIRE(scan.minimizers.size() == 1);
  REQUIRE(scan.cylinders.size() == 1);
  const AdmissibleCylinder& cy = scan.cylinders[0];
  CHECK(cy.a_high - cy.a_low == Approx(1.0).epsilon(1e-6));
  CHECK(distance_to_boundary(cy, {0.3, cy.a_low + 0.25}) == Approx(0.25).epsilon(1e-6));
  CHECK_THROWS_AS(detect_cylinders(rd, {2, 0}), Error);
}

TEST_CASE("the flat torus is foliated") {
  const MetricProfile flat = MetricProfile::flat();
  CylinderOptions o;
  o.seeds = 64;
  const ClassScan scan = scan_class(flat, {1, 0}, o);
  CHECK(scan.foliated);
  CHECK(scan.cylinders.empty());
}

TEST_CASE("strip geodesics and excursion records") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const auto cyls = detect_cylinders(rd, {1, 0});
  REQUIRE(cyls.size() == 1);
  const auto lifts = strip_lifts(cyls[0], {0.1, 0.25}, {0.37, 0.25});
  CHECK(lifts[0].Y > cyls[0].a_low);
  CHECK(lifts[0].Y < cyls[0].a_high);
  const auto geos = strip_geodesics(rd, cyls[0], {0.1, 0.25}, {0.37, 0.25}, {1, 2, 3});
  REQUIRE(geos.size() == 3);
  for (std::size_t i = 1; i < geos.size(); ++i) {
    // Each extra turn adds about one boundary length (the equator has length 1).
    CHECK(geos[i].length - geos[i - 1].length == Approx(1.0).epsilon(0.05));
  }
  const ExcursionProfile ep = excursion_from(cyls[0], geos, {0.05, 0.1}, false);
  CHECK(ep.records.size() == 6);
  CHECK(ep.T.size() == 2);
  CHECK(ep.T[0] >= ep.T[1]);  // smaller eps needs longer to reach
  for (const auto& r : ep.records) {
    if (!r.reached) continue;
    CHECK(r.entry <= r.exit);
    CHECK(r.t_n == Approx(std::max(r.entry, r.length - r.exit)));
  }
  CHECK_THROWS_AS(strip_lifts(cyls[0], {0.1, 0.0}, {0.3, 0.25}), Error);  // p on the boundary
}
