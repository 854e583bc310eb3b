#include <cmath>
#include <numbers>

#include <doctest.h>

#include "geoblock/errors.hpp"
#include "geoblock/flow.hpp"

using namespace geoblock;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("flat geodesics are straight lines") {
  const MetricProfile flat = MetricProfile::flat();
  const double th = 0.3;
  const GeodesicTrace tr = integrate_heading(flat, {0.2, 0.4}, th, 7.5);
  CHECK(tr.length() == Approx(7.5));
  CHECK(tr.end().X == Approx(0.2 + 7.5 * std::cos(th)).epsilon(1e-12));
  CHECK(tr.end().Y == Approx(0.4 + 7.5 * std::sin(th)).epsilon(1e-12));
  for (const auto& s : tr.samples) CHECK(s.theta == Approx(th).epsilon(1e-12));
}

TEST_CASE("heading conversions are inverse") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  for (double th : {-2.5, -0.4, 0.0, 1.1, 3.0}) {
    const PhaseState s = state_from_heading(rd, {0.3, 0.2}, th);
    CHECK(heading(rd, s) == Approx(th).epsilon(1e-14));
    CHECK(speed_squared(rd, s) == Approx(1.0).epsilon(1e-14));
    CHECK(clairaut(rd, s) == Approx(rd.f(0.2) * std::cos(th)).epsilon(1e-14));
  }
  PhaseState raw{{0.0, 0.1}, 3.0, 4.0};
  CHECK(speed_squared(rd, normalized(rd, raw)) == Approx(1.0));
}

TEST_CASE("latitudes are geodesic exactly at critical points of f") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace inner = integrate_heading(rd, {0.0, 0.0}, 0.0, 1.0);
  CHECK(inner.end().X == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(inner.end().Y) < 1e-14);
  const GeodesicTrace outer = integrate_heading(rd, {0.0, 0.5}, 0.0, 3.0);
  CHECK(outer.end().X == Approx(1.0).epsilon(1e-12));
  const GeodesicTrace off = integrate_heading(rd, {0.0, 0.25}, 0.0, 0.5);
  // f cos(theta) is conserved, so a geodesic tangent to a latitude can only move toward larger f.
  for (const auto& smp : off.samples) CHECK(rd.f(smp.Y) >= rd.f(0.25) - 1e-12);
  CHECK(off.end().Y > 0.25);
}

TEST_CASE("meridians run vertically at unit speed") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace m = integrate_heading(rd, {0.4, 0.1}, kPi / 2.0, 2.0);
  CHECK(m.end().X == Approx(0.4).epsilon(1e-13));
  CHECK(m.end().Y == Approx(2.1).epsilon(1e-12));
}

TEST_CASE("clairaut value is conserved") {
  const MetricProfile p = MetricProfile::fourier(2.0, {-0.8, 0.1}, {0.05});
  const GeodesicTrace tr = integrate_heading(p, {0.1, 0.3}, 0.9, 50.0);
  const double F0 = sample_clairaut(p, tr.samples.front());
  for (const auto& s : tr.samples) CHECK(sample_clairaut(p, s) == Approx(F0).epsilon(1e-9));
}

TEST_CASE("reversal retraces the geodesic") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace tr = integrate_heading(rd, {0.1, 0.3}, 0.7, 4.0);
  const GeodesicTrace rv = reversed(tr);
  CHECK(rv.start().X == Approx(tr.end().X));
  CHECK(rv.end().Y == Approx(tr.start().Y));
  const GeodesicTrace back = integrate_heading(rd, rv.start(), rv.samples.front().theta, 4.0);
  CHECK(back.end().X == Approx(tr.start().X).epsilon(1e-9));
  CHECK(back.end().Y == Approx(tr.start().Y).epsilon(1e-9));
}

TEST_CASE("concatenation and trace_at agree with a single integration") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const GeodesicTrace whole = integrate_heading(rd, {0.1, 0.3}, 0.7, 3.0);
  const GeodesicTrace a = integrate_heading(rd, {0.1, 0.3}, 0.7, 1.2);
  const GeodesicTrace b = integrate_heading(rd, a.end(), a.samples.back().theta, 1.8);
  const GeodesicTrace c = concatenate({a, b});
  CHECK(c.length() == Approx(3.0));
  CHECK(c.end().X == Approx(whole.end().X).epsilon(1e-10));
  const TraceSample mid = trace_at(rd, whole, 1.2);
  CHECK(mid.X == Approx(a.end().X).epsilon(1e-10));
  CHECK(mid.Y == Approx(a.end().Y).epsilon(1e-10));
}

TEST_CASE("flow map equals trace endpoint") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const auto z = flow_map(rd, {0.1, 0.3, 0.7}, 2.0);
  const GeodesicTrace tr = integrate_heading(rd, {0.1, 0.3}, 0.7, 2.0);
  CHECK(z[0] == Approx(tr.end().X).epsilon(1e-10));
  CHECK(z[1] == Approx(tr.end().Y).epsilon(1e-10));
  CHECK(z[2] == Approx(tr.samples.back().theta).epsilon(1e-10));
}

TEST_CASE("section lines are crossed at the flat oracle") {
  const MetricProfile flat = MetricProfile::flat();
  const double th = 0.5;
  const SweepResult sr = sweep_lines(flat, {0.0, 0.0}, th, {1.0, 2.0}, 10.0);
  REQUIRE(sr.reached_all);
  REQUIRE(sr.hits.size() == 2);
  CHECK(sr.hits[0].t == Approx(1.0 / std::cos(th)).epsilon(1e-10));
  CHECK(sr.hits[1].Y == Approx(2.0 * std::tan(th)).epsilon(1e-10));
}

TEST_CASE("jacobi fields against closed forms") {
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace line = integrate_heading(flat, {0.0, 0.0}, 0.4, 2.0);
  const JacobiSolution jf = jacobi(flat, line, 0.0, 1.0);
  for (std::size_t i = 0; i < jf.samples.size(); ++i) CHECK(jf.value(i) == Approx(jf.samples[i].t).epsilon(1e-12));
  CHECK(jf.zeros.empty());
  // Outer equator: K = 4 pi^2 / 3, J = sin(sqrt K t) / sqrt K.
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const double k = 2.0 * kPi / std::sqrt(3.0);
  const GeodesicTrace outer = integrate_heading(rd, {0.0, 0.5}, 0.0, 2.0);
  const JacobiSolution js = jacobi(rd, outer, 0.0, 1.0);
  for (std::size_t i = 0; i < js.samples.size(); i += 7) {
    CHECK(js.value(i) == Approx(std::sin(k * js.samples[i].t) / k).epsilon(1e-9).scale(1.0));
  }
  REQUIRE(js.zeros.size() >= 1);
  CHECK(js.zeros[0] == Approx(kPi / k).epsilon(1e-10));
}

TEST_CASE("conjugate points") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const ConjugateReport inner = has_conjugate_points(rd, integrate_heading(rd, {0.0, 0.0}, 0.0, 5.0));
  CHECK_FALSE(inner.has_conjugate);
  const ConjugateReport outer = has_conjugate_points(rd, integrate_heading(rd, {0.0, 0.5}, 0.0, 0.5));
  CHECK_FALSE(outer.has_conjugate);  // first conjugate point is at sqrt(3)/2
}

TEST_CASE("monodromy of closed latitudes") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const Matrix2 M = monodromy(rd, integrate_heading(rd, {0.0, 0.0}, 0.0, 1.0));
  CHECK(determinant(M) == Approx(1.0).epsilon(1e-9));
  const Eigen2 e = eigenvalues(M);
  CHECK(e.real);
  // Hyperbolic equator: eigenvalues e^{+-2 pi} of the (Y, theta) map.
  CHECK(std::max(e.re1, e.re2) == Approx(std::exp(2.0 * kPi)).epsilon(1e-8));
  CHECK(std::min(e.re1, e.re2) == Approx(std::exp(-2.0 * kPi)).epsilon(1e-6));
  const Matrix2 rot{{{std::cos(0.3), -std::sin(0.3)}, {std::sin(0.3), std::cos(0.3)}}};
  const Eigen2 r = eigenvalues(rot);
  CHECK_FALSE(r.real);
  CHECK(std::hypot(r.re1, r.im1) == Approx(1.0));
}

TEST_CASE("non-closed traces are rejected by monodromy") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  CHECK_THROWS_AS(monodromy(rd, integrate_heading(rd, {0.0, 0.2}, 0.3, 1.0)), Error);
}

TEST_CASE("invalid lengths are rejected") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  CHECK_THROWS_AS(integrate_heading(rd, {0.0, 0.0}, 0.0, -1.0), Error);
}
