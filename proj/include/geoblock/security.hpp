#pragma once

// Blocking sets on tori of revolution, midpoint analysis, insecurity
// certificates for pairs in an admissible cylinder, intersection counts of
// closed geodesics, and the (G1)/(G2)/(G3) diagnostics.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "geoblock/asymptotics.hpp"
#include "geoblock/connect.hpp"
#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"

namespace geoblock {

// phi(x, y) = (2r - x, 2a - y): the reflection of the x-circle swapping p and
// q times the reflection of the y-circle about the symmetry latitude a.
struct Involution {
  double r = 0.0;
  double a = 0.0;
  std::array<TorusPoint, 4> fixed_points;  // {r, r+1/2} x {a, a+1/2}
  TorusPoint apply(TorusPoint u) const;
};

/// Checks that f has its unique global minimum at a and is symmetric about
/// it (|f(a+s) - f(a-s)| <= 1e-9), then builds the involution for the
/// x-coordinates p and q. Throws HypothesisViolated.
Involution involution_for_pair(const MetricProfile& profile, double a, double p, double q);

/// Fixed points of the involution farther than `exclusion` from p and q.
std::vector<TorusPoint> blocking_candidates(const Involution& inv, TorusPoint p, TorusPoint q,
                                            double exclusion);

struct Passage {
  std::size_t point = 0;  // index into the candidate set
  double t = 0.0;         // arclength of closest approach
  double distance = 0.0;  // local metric distance at t
};

/// Closest approach of the trace to b over t in [t_lo, t_hi]: sample scan,
/// then Brent refinement of t -> distance around each local minimum.
Passage closest_passage(const MetricProfile& profile, const GeodesicTrace& trace, TorusPoint b,
                        double t_lo, double t_hi, const FlowOptions& flow = {});

struct GeodesicBlocking {
  std::size_t index = 0;  // position in the enumeration
  double length = 0.0;
  HomologyClass offset;
  bool blocked = false;
  Passage nearest;  // closest approach over all candidates
  double endpoint_velocity_gap = 0.0;  // |c'(0) - c'(L)| in the orthonormal frame
};

enum class BlockingVerdict { BlockedAtScale, UnblockedWitnesses };
const char* to_string(BlockingVerdict v);

struct SecurityReport {
  TorusPoint p, q;
  double max_length = 0.0;
  double delta = 0.0;
  std::vector<TorusPoint> blocking_set;
  EnumerationResult enumeration;
  std::vector<GeodesicBlocking> geodesics;
  BlockingVerdict verdict = BlockingVerdict::BlockedAtScale;
  std::vector<std::size_t> witnesses;  // unblocked geodesic indices
};

/// Enumerates joining geodesics up to max_length and checks that each passes
/// within delta of the candidate set. Candidates within delta of p or q are
/// rejected with InvalidArgument.
SecurityReport verify_blocking(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                               const std::vector<TorusPoint>& blocking_set, double max_length, double delta,
                               const EnumerateOptions& opts = {});

/// Same, over a precomputed enumeration.
SecurityReport verify_blocking(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                               const std::vector<TorusPoint>& blocking_set, double max_length, double delta,
                               EnumerationResult enumeration);

struct MidpointEntry {
  std::size_t index = 0;
  TorusPoint midpoint;
  std::size_t cluster = 0;
};

struct MidpointCluster {
  TorusPoint center;  // first member
  std::size_t size = 0;
  bool is_endpoint = false;  // coincides with p or q
};

struct MidpointAnalysis {
  std::vector<MidpointEntry> entries;
  std::vector<MidpointCluster> clusters;
  double cluster_tol = 1e-5;
};

MidpointAnalysis midpoint_analysis(const MetricProfile& profile, TorusPoint p, TorusPoint q,
                                   const EnumerationResult& enumeration, double cluster_tol = 1e-5);
MidpointAnalysis midpoint_analysis(const MetricProfile& profile, TorusPoint p, TorusPoint q, double max_length,
                                   const EnumerateOptions& opts = {}, double cluster_tol = 1e-5);

// ---- insecurity certificates ---------------------------------------------------

struct CertificateOptions {
  double gap_tolerance = 0.2;  // length gaps within this fraction of the boundary period
  double growth_factor = 2.0;  // T_n(eps) within this factor of its value at n_max / 2
  StripOptions strip = default_strip_options();
};

struct InsecurityCertificate {
  TorusPoint p, q;
  AdmissibleCylinder cylinder;
  bool one_sided = false;
  double boundary_period = 0.0;
  std::vector<StripGeodesic> geodesics;  // c_n, n = 1..n_max
  // (a) lengths
  std::vector<double> lengths;
  std::vector<double> gaps;
  bool lengths_ok = false;
  // (b) interiors avoid the boundary
  std::vector<double> min_boundary_distance;
  bool avoid_ok = false;
  // (c) conjugate points
  std::vector<bool> conjugate;
  std::vector<double> first_conjugate;  // NaN when none
  bool conjugate_ok = false;
  // (d) excursion profile
  ExcursionProfile excursion;
  int reference_n = 0;
  bool excursion_ok = false;
  bool valid = false;
  CertificateOptions options;
};

/// Builds c_n from p to the lift of q plus n times the cylinder class and
/// evaluates conditions (a)-(d). q on the boundary selects the one-sided form
/// of (d). Throws MissingGeodesic, Rejected (flat), InvalidArgument (p not interior).
InsecurityCertificate insecurity_certificate(const MetricProfile& profile, const AdmissibleCylinder& cyl,
                                             TorusPoint p, TorusPoint q, int n_max,
                                             const std::vector<double>& eps_grid,
                                             const CertificateOptions& opts = {});

struct EscapeResult {
  std::optional<int> witness;    // n of the first escaping c_n
  std::vector<double> min_distance;  // per c_n, min interior distance to the set
};

/// First certificate geodesic whose interior stays at least delta from every
/// point of the set. Rejected unless the certificate is valid.
EscapeResult escape_test(const MetricProfile& profile, const InsecurityCertificate& cert,
                         const std::vector<TorusPoint>& blocking_set, double delta);

// ---- intersections and G conditions ----------------------------------------------

struct Crossing {
  double t1 = 0.0;
  double t2 = 0.0;
  TorusPoint point;
  int sign = 0;        // orientation of (c1', c2')
  double angle = 0.0;  // crossing angle in (0, pi)
};

struct IntersectionResult {
  std::vector<Crossing> crossings;
  std::size_t count() const { return crossings.size(); }
  int signed_sum = 0;
};

/// Crossings of two closed geodesics given by one period each. Throws
/// TangencyDetected when a crossing angle is below `min_angle`.
IntersectionResult intersection_count(const MetricProfile& profile, const GeodesicTrace& c1,
                                      const GeodesicTrace& c2, double min_angle = 1e-6,
                                      const FlowOptions& flow = {});

struct ClassDiagnostic {
  HomologyClass h;
  bool foliated = false;
  std::size_t cylinders = 0;
  std::size_t clusters = 0;  // distinct minimal closed geodesics
  double min_length = 0.0;
  // Monodromy of the representative when the minimizer is unique.
  bool have_monodromy = false;
  Eigen2 eigen;
  bool nondegenerate = false;
};

struct GConditions {
  std::vector<ClassDiagnostic> classes;
  bool g1 = false;
  bool g2 = false;
  bool g3 = false;
  std::optional<std::array<HomologyClass, 2>> g2_pair;
  double cluster_tol = 1e-4;
  double eigen_margin = 1e-6;
};

struct GConditionOptions {
  std::vector<HomologyClass> classes{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  CylinderOptions cylinders;
  double eigen_margin = 1e-6;
};

GConditions g_conditions(const MetricProfile& profile, const GConditionOptions& opts = {});

}  // namespace geoblock
