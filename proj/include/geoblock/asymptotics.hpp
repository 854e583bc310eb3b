#pragma once

// Busemann functions of rays, coray checks, admissible cylinders bounded by
// minimal closed geodesics, and excursion profiles of long minimal
// geodesics inside such cylinders.

#include <array>
#include <vector>

#include "geoblock/connect.hpp"
#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"

namespace geoblock {

struct RaySpec {
  GeodesicTrace carrier;         // c : [0, H] -> cover
  bool asserted_minimal = false;  // subsegment minimality checks passed
  double horizon() const { return carrier.length(); }
};

struct RayOptions {
  double window = 4.0;  // length of the subsegments checked for minimality
  int windows = 3;
  BvpOptions bvp;
};

/// Geodesic ray from P with heading theta up to `horizon`. With verify set,
/// subsegments are compared with the shortest competitor between their
/// endpoints and asserted_minimal records the outcome.
RaySpec make_ray(const MetricProfile& profile, CoverPoint P, double theta, double horizon,
                 bool verify = true, const RayOptions& opts = {});

struct BusemannOptions {
  double on_ray_tol = 1e-12;  // points this close to the carrier are treated as on it
  BvpOptions bvp;
};

/// d(P, c(t)) - t with the cover distance from the shortest BVP solution. For
/// P = c(s) with s <= t the value is -s exactly. Throws HorizonExceeded when t
/// exceeds the ray horizon.
double busemann_estimate(const MetricProfile& profile, const RaySpec& ray, CoverPoint P, double t,
                         const BusemannOptions& opts = {});

/// Torus point lifted to the cell containing the start of the ray.
double busemann_estimate(const MetricProfile& profile, const RaySpec& ray, TorusPoint p, double t,
                         const BusemannOptions& opts = {});

/// |B(cand(t)) - B(cand(s)) - (s - t)| with B estimated at the ray horizon.
double coray_residual(const MetricProfile& profile, const RaySpec& ray,
                      const GeodesicTrace& candidate, double s, double t,
                      const BusemannOptions& opts = {});

// ---- admissible cylinders --------------------------------------------------

// A component of the complement of the minimal closed geodesics of a class.
// In the strip coordinate u = -n X + m Y it is a_low < u < a_high; for the
// latitude class (1, 0) these are latitudes.
struct AdmissibleCylinder {
  double a_low = 0.0;
  double a_high = 0.0;
  HomologyClass h;
  std::array<GeodesicTrace, 2> boundary_traces;  // lower and upper boundary lifts
};

struct CylinderOptions {
  int seeds = 2048;
  double foliation_tol = 1e-3;
  PeriodicOptions periodic;
};

struct ClassScan {
  HomologyClass h;
  bool foliated = false;
  std::vector<PeriodicGeodesic> minimizers;  // one per cluster
  std::vector<AdmissibleCylinder> cylinders;
};

/// Minimal closed geodesics of class h from a grid of seeds along the dual
/// class, the foliation test and the complement components.
ClassScan scan_class(const MetricProfile& profile, HomologyClass h, const CylinderOptions& opts = {});

/// Complement components of the union of minimal closed geodesics in class h.
/// Empty when the minimizers pass within foliation_tol of every seed point.
/// Throws NotPrime.
std::vector<AdmissibleCylinder> detect_cylinders(const MetricProfile& profile, HomologyClass h,
                                                 const CylinderOptions& opts = {});

/// Distance to the cylinder boundary (exact for latitude bands).
double distance_to_boundary(const AdmissibleCylinder& cyl, CoverPoint P);

// ---- excursion profiles ----------------------------------------------------

struct StripGeodesic {
  int n = 0;
  GeodesicTrace trace;
  double length = 0.0;
  CoverPoint start;
  CoverPoint target;  // lift of q plus n times the cylinder class
};

struct ExcursionRecord {
  int n = 0;
  double length = 0.0;
  double eps = 0.0;
  double entry = 0.0;  // first time of the longest stay within eps of the boundary
  double exit = 0.0;   // last time of that stay (the length in one-sided mode)
  double t_n = 0.0;    // max(entry, length - exit)
  double maxdist = 0.0;  // max boundary distance on [T(eps), L - T(eps)] (or [T(eps), L])
  bool reached = false;  // the geodesic came within eps at all
};

struct ExcursionProfile {
  std::vector<ExcursionRecord> records;  // ordered by n, then eps
  std::vector<double> eps_grid;
  std::vector<double> T;                 // empirical T(eps) = sup_n t_n
  bool one_sided = false;                // q on the boundary
};

struct StripOptions {
  BvpOptions bvp;
  double boundary_tol = 1e-9;  // q this close to the boundary counts as on it
};

/// Default options for strip geodesics: near-boundary passages need absolute
/// accuracy far below the default integrator tolerance.
StripOptions default_strip_options();

/// Lifts of p (interior) and q (closure) into the strip of the cylinder.
std::array<CoverPoint, 2> strip_lifts(const AdmissibleCylinder& cyl, TorusPoint p, TorusPoint q,
                                      double boundary_tol = 1e-9);

/// Minimal geodesics inside the strip from the lift of p to the lift of q
/// plus n times the cylinder class. Throws MissingGeodesic if one cannot be
/// found, Rejected for flat profiles or non-latitude cylinders.
std::vector<StripGeodesic> strip_geodesics(const MetricProfile& profile, const AdmissibleCylinder& cyl,
                                           TorusPoint p, TorusPoint q, const std::vector<int>& ns,
                                           const StripOptions& opts = default_strip_options());

/// Excursion records from precomputed strip geodesics.
ExcursionProfile excursion_from(const AdmissibleCylinder& cyl, const std::vector<StripGeodesic>& geos,
                                const std::vector<double>& eps_grid, bool one_sided);

ExcursionProfile excursion_profile(const MetricProfile& profile, const AdmissibleCylinder& cyl,
                                   TorusPoint p, TorusPoint q, const std::vector<int>& ns,
                                   const std::vector<double>& eps_grid,
                                   const StripOptions& opts = default_strip_options());

}  // namespace geoblock
