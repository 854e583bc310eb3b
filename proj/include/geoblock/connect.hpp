#pragma once

// Two-point problems per homotopy class in the universal cover, enumeration
// of joining geodesics, and minimal closed geodesics in integer classes.

#include <cstdint>
#include <optional>
#include <vector>

#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"

namespace geoblock {

struct HomologyClass {
  long m = 0;
  long n = 0;

  bool is_zero() const { return m == 0 && n == 0; }
  bool operator==(const HomologyClass&) const = default;
};

long gcd_abs(long a, long b);
/// gcd(|m|, |n|) == 1, with gcd(0, k) = k.
bool is_prime(HomologyClass h);
/// Algebraic intersection number h1 . h2 = m1 n2 - n1 m2.
long intersection_number(HomologyClass a, HomologyClass b);
/// A class k with h . k = 1 (h prime).
HomologyClass dual_class(HomologyClass h);

struct JoiningGeodesic {
  GeodesicTrace trace;
  HomologyClass offset;
  double initial_heading = 0.0;
  double hit_error = 0.0;
};

struct ShootOptions {
  double hit_tol = 1e-8;
  int max_iterations = 200;
  // Headings near a hyperbolic latitude keep Y and theta tiny for long
  // stretches, so the absolute tolerance of the final traces sits below
  // the general default.
  FlowOptions flow{1e-14, 1e-12, 0.01};
  FlowOptions sweep_flow{1e-12, 1e-12, 0.01};
};

/// Geodesic from the lift of p in the fundamental domain to the cover point
/// `target`, refining the heading from theta0. The miss is measured on the
/// vertical line through the target (X is strictly monotone along geodesics
/// that are not meridians). Throws NoConvergence when no root is bracketed
/// from theta0 or the hit tolerance cannot be met.
JoiningGeodesic shoot(const MetricProfile& profile, TorusPoint p, CoverPoint target, double theta0,
                      double max_length, const ShootOptions& opts = {});

/// Refinement inside a known heading bracket. Returns nullopt on a miss.
std::optional<JoiningGeodesic> shoot_bracket(const MetricProfile& profile, CoverPoint P,
                                             CoverPoint target, double theta_a, double theta_b,
                                             double max_length, const ShootOptions& opts = {});

struct EnumerateOptions {
  int sweep = 4096;          // headings per half-plane
  int max_doublings = 2;     // extra sweeps at 2x, 4x, ... until saturation
  double angle_dedup = 1e-9;
  ShootOptions shoot;
};

struct EnumerationResult {
  std::vector<JoiningGeodesic> geodesics;  // sorted by length
  std::vector<int> sweep_sizes;            // sweeps actually run
  std::vector<int> found_per_sweep;        // cumulative distinct geodesics after each sweep
  bool saturated = false;                  // last doubling found nothing new
};

/// Best-effort inventory of geodesics of length <= max_length joining p to q,
/// over all lift offsets. Deterministic for fixed options.
EnumerationResult enumerate_joining(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                                    double max_length, const EnumerateOptions& opts = {});

// ---- polygon shortening -------------------------------------------------

struct Polygon {
  std::vector<CoverPoint> vertices;  // open: includes both endpoints; closed: N distinct vertices
  bool closed = false;
  HomologyClass offset;  // closed polygons: V_N = V_0 + offset
};

struct ShortenOptions {
  int max_iterations = 400;
  double gradient_tol = 1e-11;
};

struct ShortenResult {
  Polygon polygon;
  bool converged = false;
  int iterations = 0;
  double length = 0.0;
};

/// Midpoint-rule discrete length of a polygon.
double polygon_length(const MetricProfile& profile, const Polygon& poly);

/// Minimizes the discrete energy N * sum_i (f(ybar)^2 dX^2 + dY^2) over the
/// free vertices with a damped Newton iteration. Endpoints of open polygons are
/// fixed; closed polygons keep their offset, so the free homotopy class is preserved.
ShortenResult shorten(const MetricProfile& profile, Polygon poly, const ShortenOptions& opts = {});

// ---- two-point boundary value problems ----------------------------------

struct BvpOptions {
  double segment_length = 0.25;
  double vertices_per_unit = 16.0;
  double residual_tol = 1e-12;
  int max_newton = 40;
  FlowOptions flow;
  ShortenOptions shorten;
};

struct BvpSolution {
  GeodesicTrace trace;
  double length = 0.0;
  double residual = 0.0;
  double initial_heading = 0.0;
  bool converged = false;
};

/// Geodesic from P to Q in the cover in the homotopy class fixed by the
/// endpoints: polygon shortening from `guess` (straight chord when empty),
/// then multiple shooting polish.
BvpSolution solve_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                 const std::vector<CoverPoint>& guess = {},
                                 const BvpOptions& opts = {});

/// Multiple-shooting polish seeded from a nearby geodesic trajectory (no
/// shortening, so the solution stays next to the guess).
BvpSolution polish_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                  const GeodesicTrace& guess, const BvpOptions& opts = {});

/// Shortest of the BVP solutions started from the chord and from guesses bent
/// towards neighbouring latitude minima. Approximates the cover distance.
BvpSolution shortest_cover_geodesic(const MetricProfile& profile, CoverPoint P, CoverPoint Q,
                                    const BvpOptions& opts = {});

// ---- closed geodesics ----------------------------------------------------

struct PeriodicOptions {
  int seeds = 16;
  std::uint64_t rng_seed = 1;
  double length_tol = 1e-7;     // candidates within this of the global minimum
  double cluster_tol = 1e-4;    // Hausdorff threshold between distinct loops
  double closure_tol = 1e-10;
  FlowOptions flow;
  ShortenOptions shorten;
};

struct PeriodicGeodesic {
  GeodesicTrace trace;
  double length = 0.0;
  HomologyClass h;
};

/// Distinct minimal closed geodesics in class h found by curve shortening from
/// `opts.seeds` straight loops. Throws NotPrime.
std::vector<PeriodicGeodesic> minimal_periodic(const MetricProfile& profile, HomologyClass h,
                                               const PeriodicOptions& opts = {});

/// Same, with explicit seed loops through the given base points.
std::vector<PeriodicGeodesic> minimal_periodic_from(const MetricProfile& profile, HomologyClass h,
                                                    const std::vector<CoverPoint>& bases,
                                                    const PeriodicOptions& opts = {});

/// Converged loops within length_tol of the shortest one, unclustered, in
/// seed order.
std::vector<PeriodicGeodesic> minimal_periodic_candidates(const MetricProfile& profile, HomologyClass h,
                                                          const std::vector<CoverPoint>& bases,
                                                          const PeriodicOptions& opts = {});

/// One representative per Hausdorff cluster, sorted by start y (n == 0) or x.
std::vector<PeriodicGeodesic> cluster_periodic(std::vector<PeriodicGeodesic> loops, double cluster_tol);

/// Circular mean of u = -n X + m Y over the samples of a loop in class h, in (-1/2, 1/2].
double transversal_coordinate(const GeodesicTrace& trace, HomologyClass h);

/// Closed geodesic in class h through (or near) P with heading theta and
/// period guess: Gauss-Newton on start offset, heading and length.
std::optional<PeriodicGeodesic> polish_closed(const MetricProfile& profile, HomologyClass h,
                                              CoverPoint P, double theta, double length,
                                              const PeriodicOptions& opts = {});

/// Hausdorff distance between two traces projected to the torus (samples
/// against polyline segments).
double hausdorff_torus(const GeodesicTrace& a, const GeodesicTrace& b);

/// Distance from a torus point to a projected trace polyline.
double point_trace_distance(TorusPoint p, const GeodesicTrace& trace);

struct MinimalityReport {
  bool minimal = false;
  double margin = 0.0;  // trace length minus the best competitor length
  double best_length = 0.0;
};

/// Lift offset of a cover path: floor(end) - floor(start) componentwise.
HomologyClass lift_offset(const GeodesicTrace& trace);

/// Compares the trace length with the shortest geodesic between the same cover
/// endpoints found by the BVP solver. `offset` must agree with lift_offset(trace)
/// up to endpoints on cell boundaries (InvalidArgument otherwise).
MinimalityReport is_homotopically_minimal(const MetricProfile& profile, const GeodesicTrace& trace,
                                          HomologyClass offset, const BvpOptions& opts = {});

struct Direction {
  double x = 0.0;
  double y = 0.0;
};

/// Normalized lift displacement end - start.
Direction homological_direction(const GeodesicTrace& trace, double min_horizon = 0.0);

}  // namespace geoblock
