#pragma once

// Geodesic flow, Jacobi fields and monodromy on the torus of revolution and
// its universal cover.
//
// The integrator evolves (X, Y, theta) where theta is the heading measured in
// the orthonormal frame (f d/dx, d/dy):
//   xi = cos(theta) / f(Y),  eta = sin(theta),
//   X' = cos(theta) / f,  Y' = sin(theta),  theta' = f'(Y) cos(theta) / f.
// Unit speed holds identically; the Clairaut value is F = f cos(theta).

#include <array>
#include <optional>
#include <vector>

#include "geoblock/metric.hpp"

namespace geoblock {

struct PhaseState {
  CoverPoint pos;
  double xi = 0.0;   // coefficient of d/dx
  double eta = 0.0;  // coefficient of d/dy
};

struct PhaseDerivative {
  double dX = 0.0;
  double dY = 0.0;
  double dxi = 0.0;
  double deta = 0.0;
};

/// Unit tangent vector at P with heading theta in the orthonormal frame.
PhaseState state_from_heading(const MetricProfile& profile, CoverPoint P, double theta);

/// Heading of a (not necessarily normalized) state.
double heading(const MetricProfile& profile, const PhaseState& s);

/// Rescale (xi, eta) so that f^2 xi^2 + eta^2 = 1.
PhaseState normalized(const MetricProfile& profile, PhaseState s);

double speed_squared(const MetricProfile& profile, const PhaseState& s);

/// Euler-Lagrange equations of the metric in (xi, eta) form.
PhaseDerivative geodesic_rhs(const MetricProfile& profile, const PhaseState& s);

/// Clairaut integral F = f(y)^2 xi.
double clairaut(const MetricProfile& profile, const PhaseState& s);

struct FlowOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double output_step = 0.01;     // maximum spacing between stored samples
  double min_step = 1e-14;       // below this the adaptive control gives up
  long max_steps = 50'000'000;
  // Extend geodesics that return to their starting latitude and heading by
  // translation instead of integrating every period.
  bool translate = true;
};

struct TraceSample {
  double t = 0.0;
  double X = 0.0;
  double Y = 0.0;
  double theta = 0.0;
};

// Arclength-sampled geodesic in the universal cover. Samples hold the
// integrator state; PhaseState views are derived with the profile.
struct GeodesicTrace {
  std::vector<TraceSample> samples;

  bool empty() const { return samples.empty(); }
  double length() const { return samples.empty() ? 0.0 : samples.back().t; }
  CoverPoint start() const { return {samples.front().X, samples.front().Y}; }
  CoverPoint end() const { return {samples.back().X, samples.back().Y}; }
};

PhaseState sample_state(const MetricProfile& profile, const TraceSample& s);
double sample_clairaut(const MetricProfile& profile, const TraceSample& s);

/// Point at arbitrary arclength t in [0, length], by re-integration from the
/// nearest preceding sample.
TraceSample trace_at(const MetricProfile& profile, const GeodesicTrace& trace, double t,
                     const FlowOptions& opts = {});

/// Integrate from `start` for arclength `length` (> 0).
GeodesicTrace integrate(const MetricProfile& profile, const PhaseState& start, double length,
                        const FlowOptions& opts = {});
GeodesicTrace integrate_heading(const MetricProfile& profile, CoverPoint P, double theta,
                                double length, const FlowOptions& opts = {});

/// Reverse parameterization: the same trace traversed backwards.
GeodesicTrace reversed(const GeodesicTrace& trace);

/// Concatenate traces whose end/start points agree; sample times are shifted.
GeodesicTrace concatenate(const std::vector<GeodesicTrace>& pieces);

/// One flow map evaluation (X, Y, theta) -> state after arclength h.
std::array<double, 3> flow_map(const MetricProfile& profile, const std::array<double, 3>& z,
                               double h, const FlowOptions& opts = {});

// Crossings of vertical lines X = const recorded during a sweep integration.
struct SectionHit {
  double X_line = 0.0;
  double t = 0.0;
  double Y = 0.0;
  double theta = 0.0;
};

struct SweepResult {
  std::vector<SectionHit> hits;  // ordered by t
  TraceSample end;               // state when integration stopped
  bool reached_all = false;      // every requested line was crossed
};

/// Integrate from (P, theta) until arclength `max_length` or until all lines
/// X = lines[i] have been crossed. Lines must be sorted in the direction of
/// motion (X is strictly monotone along every geodesic with nonzero Clairaut value).
SweepResult sweep_lines(const MetricProfile& profile, CoverPoint P, double theta,
                        const std::vector<double>& lines, double max_length,
                        const FlowOptions& opts = {});

struct JacobiSample {
  double t = 0.0;
  double J = 0.0;
  double dJ = 0.0;
  double log_scale = 0.0;  // true values are J * exp(log_scale), dJ * exp(log_scale)
};

struct JacobiSolution {
  std::vector<JacobiSample> samples;
  std::vector<double> zeros;  // zero crossings of J in (0, length]
  double value(std::size_t i) const;
  double derivative(std::size_t i) const;
};

/// Normal Jacobi equation J'' + K(t) J = 0 along the trace.
JacobiSolution jacobi(const MetricProfile& profile, const GeodesicTrace& trace, double J0,
                      double dJ0, const FlowOptions& opts = {});

struct ConjugateReport {
  bool has_conjugate = false;
  std::optional<double> first;
};

/// Conjugate points of trace(0) along the open interval (0, length).
ConjugateReport has_conjugate_points(const MetricProfile& profile, const GeodesicTrace& trace,
                                     const FlowOptions& opts = {});

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct MonodromyOptions {
  double closure_tol = 1e-8;
  FlowOptions flow;
};

/// Fundamental matrix of (J, J') over one period of a closed geodesic.
Matrix2 monodromy(const MetricProfile& profile, const GeodesicTrace& periodic_trace,
                  const MonodromyOptions& opts = {});

struct Eigen2 {
  bool real = true;
  double re1 = 0.0, im1 = 0.0, re2 = 0.0, im2 = 0.0;
};
Eigen2 eigenvalues(const Matrix2& m);
double determinant(const Matrix2& m);

}  // namespace geoblock
