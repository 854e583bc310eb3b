#include <cmath>
#include <numbers>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "geoblock/errors.hpp"
#include "geoblock/metric.hpp"

using namespace geoblock;
using doctest::Approx;

TEST_CASE("circle helpers") {
  CHECK(wrap01(1.25) == Approx(0.25));
  CHECK(wrap01(-0.25) == Approx(0.75));
  CHECK(wrap01(-1e-18) < 1.0);
  CHECK(circle_dist(0.95, 0.05) == Approx(0.1));
  CHECK(torus_coord_dist({0.9, 0.1}, {0.1, 0.9}) == Approx(std::hypot(0.2, 0.2)));
  const TorusPoint p = project({3.25, -0.5});
  CHECK(p.x == Approx(0.25));
  CHECK(p.y == Approx(0.5));
}

TEST_CASE("round profile values and curvature") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const double tp = 2.0 * std::numbers::pi;
  for (double y : {0.0, 0.1, 0.37, 0.5, 0.9}) {
    const ProfileValue v = rd.eval(y);
    CHECK(v.f == Approx(2.0 - std::cos(tp * y)).epsilon(1e-14));
    CHECK(v.df == Approx(tp * std::sin(tp * y)).epsilon(1e-12));
    CHECK(v.d2f == Approx(tp * tp * std::cos(tp * y)).epsilon(1e-12));
  }
  CHECK(gaussian_curvature(rd, 0.0) == Approx(-tp * tp));
  CHECK(gaussian_curvature(rd, 0.5) == Approx(tp * tp / 3.0));
  CHECK(rd.min_location() == Approx(0.0).epsilon(1e-12));
  CHECK(rd.min_value() == Approx(1.0));
  CHECK(rd.local_minima().size() == 1);
  CHECK(latitude_length(rd, 0.5) == Approx(3.0));
  CHECK_FALSE(rd.is_flat());
}

TEST_CASE("fourier profile matches the round profile it encodes") {
  const MetricProfile a = MetricProfile::round(1.0, 2.0);
  const MetricProfile b = MetricProfile::fourier(2.0, {-1.0}, {});
  for (double y = 0.0; y < 1.0; y += 0.0625) {
    CHECK(a.f(y) == Approx(b.f(y)).epsilon(1e-14));
    CHECK(a.eval(y).d2f == Approx(b.eval(y).d2f).epsilon(1e-12));
  }
}

TEST_CASE("flat profile") {
  const MetricProfile f = MetricProfile::flat();
  CHECK(f.is_flat());
  CHECK(f.f(0.3) == 1.0);
  CHECK(gaussian_curvature(f, 0.7) == 0.0);
}

TEST_CASE("invalid profiles are rejected") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Rejected;
  };
  CHECK(kind_of([] { MetricProfile::round(2.0, 2.0); }) == ErrorKind::InvalidProfile);
  CHECK(kind_of([] { MetricProfile::round(-1.0, 2.0); }) == ErrorKind::InvalidProfile);
  CHECK(kind_of([] { MetricProfile::fourier(1.0, {-1.5}, {}); }) == ErrorKind::InvalidProfile);
  CHECK(kind_of([] { profile_from_json(nlohmann::json{{"kind", "torus"}}); }) == ErrorKind::InvalidProfile);
  CHECK(kind_of([] { profile_from_json(nlohmann::json{{"kind", "round"}, {"r", 1.0}}); }) == ErrorKind::InvalidProfile);
  CHECK(kind_of([] { load_profile("/nonexistent/profile.json"); }) == ErrorKind::InvalidProfile);
}

TEST_CASE("profile json round trip and hash") {
  const MetricProfile a = MetricProfile::fourier(2.0, {-0.8, 0.1}, {0.05});
  const MetricProfile b = profile_from_json(profile_to_json(a));
  CHECK(profile_hash(a) == profile_hash(b));
  CHECK(profile_hash(a).size() == 16);
  CHECK(profile_hash(a) != profile_hash(MetricProfile::round(1.0, 2.0)));
}

TEST_CASE("distances to latitudes and between nearby points") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  CHECK(dist_to_latitude(rd, {0.3, 0.1}, 0.0) == Approx(0.1));
  CHECK(dist_to_latitude(rd, {0.3, 0.95}, 0.0) == Approx(0.05));
  // On the inner equator f = 1, so small horizontal steps have their coordinate length.
  CHECK(local_distance(rd, {0.1, 0.0}, {0.1 + 1e-6, 0.0}) == Approx(1e-6).epsilon(1e-9));
  CHECK(local_distance(rd, {0.1, 0.5}, {0.1 + 1e-6, 0.5}) == Approx(3e-6).epsilon(1e-9));
}
