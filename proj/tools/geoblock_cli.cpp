// geoblock: command-line front end. Each subcommand loads a profile, runs one
// library operation and writes <cmd>.json, CSV plot data and <cmd>_plots.json
// into the output directory.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoblock/asymptotics.hpp"
#include "geoblock/connect.hpp"
#include "geoblock/errors.hpp"
#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"
#include "geoblock/random.hpp"
#include "geoblock/report.hpp"
#include "geoblock/security.hpp"

using namespace geoblock;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string command;
  std::string profile_path;
  std::string out_dir = "geoblock-out";
  std::optional<double> lmax;
  std::optional<int> nmax;
  std::vector<double> eps;
  std::optional<int> sweep;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::vector<double> p, q, cls;
  std::optional<double> theta, length, delta, latitude;
};

struct Outcome {
  json tolerances;
  json body;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::vector<PlotSpec> plots;
  std::vector<std::string> summary;
};

TorusPoint point_arg(const std::vector<double>& v, const char* name, std::optional<TorusPoint> fallback = {}) {
  if (v.empty()) {
    if (fallback) return *fallback;
    throw Error(ErrorKind::InvalidArgument, std::string("--") + name + " is required for this command");
  }
  if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, std::string("--") + name + " takes two values x,y");
  return {v[0], v[1]};
}

HomologyClass class_arg(const std::vector<double>& v, HomologyClass fallback) {
  if (v.empty()) return fallback;
  if (v.size() != 2 || v[0] != std::round(v[0]) || v[1] != std::round(v[1])) {
    throw Error(ErrorKind::InvalidArgument, "--class takes two integers m,n");
  }
  return {std::lround(v[0]), std::lround(v[1])};
}

double positive(std::optional<double> v, double fallback, const char* name) {
  const double x = v.value_or(fallback);
  if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, std::string("--") + name + " must be positive");
  return x;
}

std::vector<double> eps_grid(const RunConfig& c) {
  std::vector<double> e = c.eps.empty() ? std::vector<double>{0.02, 0.05, 0.1} : c.eps;
  for (double v : e) {
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, "--eps values must be positive");
  }
  return e;
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// ---- commands -------------------------------------------------------------------

Outcome cmd_integrate(const MetricProfile& prof, const RunConfig& c) {
  FlowOptions flow;
  if (c.tol) flow.abs_tol = flow.rel_tol = positive(c.tol, 1e-12, "tol");
  const TorusPoint p = point_arg(c.p, "p", TorusPoint{0.0, 0.0});
  const double theta = c.theta.value_or(0.0);
  const double L = positive(c.length, 10.0, "length");
  const GeodesicTrace tr = integrate_heading(prof, {p.x, p.y}, theta, L, flow);
  Outcome o;
  o.tolerances = {{"flow", to_json(flow)}};
  o.body = {{"start", to_json(p)}, {"theta", theta}, {"trace", trace_summary(prof, tr)}};
  o.files.emplace_back("integrate_trace.csv", trace_csv(prof, tr));
  o.plots.push_back({"integrate_trace.csv", "geodesic in the universal cover", "X", {"Y"}, ""});
  o.plots.push_back({"integrate_trace.csv", "Clairaut value along the geodesic", "t", {"clairaut"}, ""});
  o.summary.push_back("length " + fmt(tr.length()) + ", end (" + fmt(tr.end().X) + ", " + fmt(tr.end().Y) +
                      "), clairaut drift " + fmt(o.body["trace"]["clairaut_drift"].get<double>(), 3));
  return o;
}

Outcome cmd_connect(const MetricProfile& prof, const RunConfig& c) {
  const TorusPoint p = canonical(point_arg(c.p, "p")), q = canonical(point_arg(c.q, "q"));
  const HomologyClass off = class_arg(c.cls, {0, 0});
  BvpOptions bvp;
  if (c.tol) bvp.residual_tol = positive(c.tol, 1e-12, "tol");
  const CoverPoint P{p.x, p.y};
  const CoverPoint Q{q.x + static_cast<double>(off.m), q.y + static_cast<double>(off.n)};
  const BvpSolution sol = shortest_cover_geodesic(prof, P, Q, bvp);
  if (!sol.converged) throw Error(ErrorKind::NoConvergence, "no geodesic found in the requested class");
  const MinimalityReport mr = is_homotopically_minimal(prof, sol.trace, off, bvp);
  Outcome o;
  o.tolerances = {{"residual_tol", bvp.residual_tol}, {"flow", to_json(bvp.flow)}};
  o.body = {{"p", to_json(p)},
            {"q", to_json(q)},
            {"offset", to_json(off)},
            {"length", sol.length},
            {"residual", sol.residual},
            {"initial_heading", sol.initial_heading},
            {"trace", trace_summary(prof, sol.trace)},
            {"minimal", mr.minimal},
            {"minimality_margin", mr.margin}};
  o.files.emplace_back("connect_trace.csv", trace_csv(prof, sol.trace));
  o.plots.push_back({"connect_trace.csv", "joining geodesic in the universal cover", "X", {"Y"}, ""});
  o.summary.push_back("length " + fmt(sol.length, 10) + ", residual " + fmt(sol.residual, 3) +
                      (mr.minimal ? ", minimal in its class" : ", not minimal in its class"));
  return o;
}

EnumerateOptions enumerate_options(const RunConfig& c) {
  EnumerateOptions eo;
  if (c.sweep) {
    if (*c.sweep < 16) throw Error(ErrorKind::InvalidArgument, "--sweep must be at least 16");
    eo.sweep = *c.sweep;
  }
  if (c.tol) eo.shoot.hit_tol = positive(c.tol, 1e-8, "tol");
  return eo;
}

json enumerate_tolerances(const EnumerateOptions& eo) {
  return {{"hit_tol", eo.shoot.hit_tol},
          {"sweep", eo.sweep},
          {"max_doublings", eo.max_doublings},
          {"angle_dedup", eo.angle_dedup},
          {"flow", to_json(eo.shoot.flow)},
          {"sweep_flow", to_json(eo.shoot.sweep_flow)}};
}

Outcome cmd_enumerate(const MetricProfile& prof, const RunConfig& c) {
  const TorusPoint p = point_arg(c.p, "p"), q = point_arg(c.q, "q");
  const double lmax = positive(c.lmax, 5.0, "lmax");
  const EnumerateOptions eo = enumerate_options(c);
  const EnumerationResult er = enumerate_joining(prof, p, q, lmax, eo);
  const MidpointAnalysis ma = midpoint_analysis(prof, p, q, er);
  Outcome o;
  o.tolerances = enumerate_tolerances(eo);
  o.tolerances["midpoint_cluster_tol"] = ma.cluster_tol;
  o.body = {{"p", to_json(canonical(p))},
            {"q", to_json(canonical(q))},
            {"max_length", lmax},
            {"enumeration", to_json(prof, er)},
            {"midpoints", to_json(ma)}};
  std::string csv = "index,length,offset_m,offset_n,initial_heading,midpoint_x,midpoint_y,cluster\n";
  for (std::size_t i = 0; i < er.geodesics.size(); ++i) {
    const auto& g = er.geodesics[i];
    const auto& e = ma.entries[i];
    csv += std::to_string(i) + "," + fmt(g.trace.length(), 17) + "," + std::to_string(g.offset.m) + "," +
           std::to_string(g.offset.n) + "," + fmt(g.initial_heading, 17) + "," + fmt(e.midpoint.x, 17) + "," +
           fmt(e.midpoint.y, 17) + "," + std::to_string(e.cluster) + "\n";
  }
  o.files.emplace_back("enumerate.csv", csv);
  o.plots.push_back({"enumerate.csv", "length spectrum of joining geodesics", "index", {"length"}, ""});
  o.plots.push_back({"enumerate.csv", "midpoints of joining geodesics", "midpoint_x", {"midpoint_y"}, "cluster"});
  o.summary.push_back(std::to_string(er.geodesics.size()) + " joining geodesics up to length " + fmt(lmax) + ", " +
                      std::to_string(ma.clusters.size()) + " midpoint clusters");
  return o;
}

PeriodicOptions periodic_options(const RunConfig& c) {
  PeriodicOptions po;
  po.rng_seed = c.seed;
  if (c.tol) po.length_tol = positive(c.tol, 1e-7, "tol");
  return po;
}

json periodic_tolerances(const PeriodicOptions& po) {
  return {{"seeds", po.seeds},
          {"rng_seed", po.rng_seed},
          {"length_tol", po.length_tol},
          {"cluster_tol", po.cluster_tol},
          {"closure_tol", po.closure_tol},
          {"flow", to_json(po.flow)}};
}

Outcome cmd_minimal(const MetricProfile& prof, const RunConfig& c) {
  const HomologyClass h = class_arg(c.cls, {1, 0});
  const PeriodicOptions po = periodic_options(c);
  const std::vector<PeriodicGeodesic> loops = minimal_periodic(prof, h, po);
  Outcome o;
  o.tolerances = periodic_tolerances(po);
  json arr = json::array();
  std::vector<GeodesicTrace> traces;
  for (const auto& g : loops) {
    arr.push_back(to_json(prof, g));
    traces.push_back(g.trace);
  }
  o.body = {{"class", to_json(h)}, {"count", loops.size()}, {"loops", std::move(arr)}};
  o.files.emplace_back("minimal_traces.csv", traces_csv(prof, traces, "loop"));
  o.plots.push_back({"minimal_traces.csv", "minimal closed geodesics", "X", {"Y"}, "loop"});
  o.summary.push_back(std::to_string(loops.size()) + " minimal closed geodesic(s) in class (" + std::to_string(h.m) +
                      "," + std::to_string(h.n) + ")" +
                      (loops.empty() ? "" : ", length " + fmt(loops.front().length, 10)));
  return o;
}

CylinderOptions cylinder_options(const RunConfig& c) {
  CylinderOptions co;
  co.periodic = periodic_options(c);
  return co;
}

Outcome cmd_cylinders(const MetricProfile& prof, const RunConfig& c) {
  const HomologyClass h = class_arg(c.cls, {1, 0});
  const CylinderOptions co = cylinder_options(c);
  const ClassScan scan = scan_class(prof, h, co);
  Outcome o;
  o.tolerances = {{"seeds", co.seeds}, {"foliation_tol", co.foliation_tol}, {"periodic", periodic_tolerances(co.periodic)}};
  json cyl = json::array();
  std::vector<GeodesicTrace> traces;
  for (const auto& cy : scan.cylinders) {
    cyl.push_back(to_json(cy));
    traces.push_back(cy.boundary_traces[0]);
    traces.push_back(cy.boundary_traces[1]);
  }
  json mins = json::array();
  for (const auto& m : scan.minimizers) mins.push_back(to_json(prof, m));
  o.body = {{"class", to_json(h)}, {"foliated", scan.foliated}, {"minimizers", std::move(mins)}, {"cylinders", std::move(cyl)}};
  o.files.emplace_back("cylinders_boundaries.csv", traces_csv(prof, traces, "boundary"));
  o.plots.push_back({"cylinders_boundaries.csv", "cylinder boundary geodesics", "X", {"Y"}, "boundary"});
  o.summary.push_back(scan.foliated ? std::string("foliated by minimal closed geodesics: no admissible cylinder")
                                    : std::to_string(scan.cylinders.size()) + " admissible cylinder(s), " +
                                          std::to_string(scan.minimizers.size()) + " minimal closed geodesic(s)");
  return o;
}

Outcome cmd_block(const MetricProfile& prof, const RunConfig& c) {
  const TorusPoint p = canonical(point_arg(c.p, "p")), q = canonical(point_arg(c.q, "q"));
  const double lmax = positive(c.lmax, 30.0, "lmax");
  const double delta = positive(c.delta, 1e-4, "delta");
  const double a = c.latitude.value_or(prof.min_location());
  if (circle_dist(p.y, a) > 1e-12 || circle_dist(q.y, a) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "p and q must lie on the symmetry latitude");
  }
  const Involution inv = involution_for_pair(prof, a, p.x, q.x);
  const std::vector<TorusPoint> B = blocking_candidates(inv, p, q, delta);
  const EnumerateOptions eo = enumerate_options(c);
  SecurityReport rep = verify_blocking(prof, p, q, B, lmax, delta, enumerate_joining(prof, p, q, lmax, eo));
  const MidpointAnalysis ma = midpoint_analysis(prof, p, q, rep.enumeration);
  Outcome o;
  o.tolerances = enumerate_tolerances(eo);
  o.tolerances["delta"] = delta;
  o.tolerances["midpoint_cluster_tol"] = ma.cluster_tol;
  json fixed = json::array();
  for (const auto& f : inv.fixed_points) fixed.push_back(to_json(f));
  o.body = {{"involution", {{"r", inv.r}, {"a", inv.a}, {"fixed_points", std::move(fixed)}}},
            {"report", to_json(prof, rep)},
            {"midpoints", to_json(ma)}};
  std::string csv = "index,length,offset_m,offset_n,passage_distance,blocked,endpoint_velocity_gap,midpoint_x,midpoint_y\n";
  double max_gap = 0.0;
  for (std::size_t i = 0; i < rep.geodesics.size(); ++i) {
    const auto& g = rep.geodesics[i];
    max_gap = std::max(max_gap, g.endpoint_velocity_gap);
    csv += std::to_string(i) + "," + fmt(g.length, 17) + "," + std::to_string(g.offset.m) + "," +
           std::to_string(g.offset.n) + "," + fmt(g.nearest.distance, 17) + "," + (g.blocked ? "1" : "0") + "," +
           fmt(g.endpoint_velocity_gap, 17) + "," + fmt(ma.entries[i].midpoint.x, 17) + "," +
           fmt(ma.entries[i].midpoint.y, 17) + "\n";
  }
  o.files.emplace_back("block.csv", csv);
  o.plots.push_back({"block.csv", "closest passage to the blocking set", "length", {"passage_distance"}, ""});
  o.plots.push_back({"block.csv", "midpoints", "midpoint_x", {"midpoint_y"}, ""});
  o.summary.push_back(std::string(to_string(rep.verdict)) + " for " + std::to_string(rep.geodesics.size()) +
                      " geodesics of length <= " + fmt(lmax) + " (delta " + fmt(delta) + ", " +
                      std::to_string(B.size()) + " blocking points, max endpoint velocity gap " + fmt(max_gap, 3) + ")");
  o.summary.push_back("note: blocking is verified only up to the length bound");
  return o;
}

// Cylinder of class h whose interior contains p.
AdmissibleCylinder cylinder_for(const MetricProfile& prof, HomologyClass h, TorusPoint p, TorusPoint q,
                                const RunConfig& c, double boundary_tol) {
  if (prof.is_flat()) throw Error(ErrorKind::Rejected, "flat metrics have no admissible cylinder");
  const std::vector<AdmissibleCylinder> cyls = detect_cylinders(prof, h, cylinder_options(c));
  if (cyls.empty()) throw Error(ErrorKind::Rejected, "no admissible cylinder in the requested class");
  for (const auto& cy : cyls) {
    try {
      strip_lifts(cy, p, q, boundary_tol);
      return cy;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidArgument) throw;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "p is not interior to an admissible cylinder containing q in its closure");
}

Outcome cmd_insecure(const MetricProfile& prof, const RunConfig& c) {
  const TorusPoint p = canonical(point_arg(c.p, "p")), q = canonical(point_arg(c.q, "q"));
  const HomologyClass h = class_arg(c.cls, {1, 0});
  const int nmax = c.nmax.value_or(8);
  if (nmax < 2) throw Error(ErrorKind::InvalidArgument, "--nmax must be at least 2");
  const std::vector<double> eps = eps_grid(c);
  const double delta = positive(c.delta, 1e-3, "delta");
  CertificateOptions co;
  if (c.tol) co.strip.boundary_tol = positive(c.tol, 1e-9, "tol");
  const AdmissibleCylinder cyl = cylinder_for(prof, h, p, q, c, co.strip.boundary_tol);
  const InsecurityCertificate cert = insecurity_certificate(prof, cyl, p, q, nmax, eps, co);
  Outcome o;
  o.tolerances = {{"boundary_tol", co.strip.boundary_tol},
                  {"gap_tolerance", co.gap_tolerance},
                  {"growth_factor", co.growth_factor},
                  {"bvp_residual_tol", co.strip.bvp.residual_tol},
                  {"flow", to_json(co.strip.bvp.flow)},
                  {"delta", delta},
                  {"eps", eps},
                  {"seed", c.seed}};
  o.body = {{"certificate", to_json(prof, cert)}};
  if (cert.valid) {
    // Random interior blocking candidates away from p, q and the boundary.
    std::mt19937_64 rng(c.seed);
    const double sm = static_cast<double>(cyl.h.m);
    const double w = cyl.a_high - cyl.a_low;
    std::vector<TorusPoint> B;
    while (B.size() < 5) {
      const double u = cyl.a_low + w * (0.05 + 0.9 * uniform01(rng));
      const TorusPoint b = canonical({uniform01(rng), u / sm});
      if (torus_coord_dist(b, p) > 10.0 * delta && torus_coord_dist(b, q) > 10.0 * delta) B.push_back(b);
    }
    const EscapeResult er = escape_test(prof, cert, B, delta);
    json pts = json::array();
    for (const auto& b : B) pts.push_back(to_json(b));
    o.body["escape"] = to_json(er);
    o.body["escape"]["blocking_set"] = std::move(pts);
    o.body["escape"]["delta"] = delta;
    o.summary.push_back(er.witness ? "escape test: c_" + std::to_string(*er.witness) + " avoids 5 random interior points"
                                   : std::string("escape test: exhausted (raise --nmax)"));
  }
  std::vector<GeodesicTrace> traces;
  for (const auto& g : cert.geodesics) traces.push_back(g.trace);
  o.files.emplace_back("insecure_traces.csv", traces_csv(prof, traces, "n_index"));
  o.files.emplace_back("insecure_excursion.csv", excursion_csv(cert.excursion));
  o.plots.push_back({"insecure_traces.csv", "certificate geodesics c_n", "X", {"Y"}, "n_index"});
  o.plots.push_back({"insecure_excursion.csv", "time to reach the eps-neighbourhood of the boundary", "n", {"t_n"}, "eps"});
  o.summary.insert(o.summary.begin(),
                   std::string("certificate ") + (cert.valid ? "VALID" : "INVALID") + (cert.one_sided ? " (one-sided)" : "") +
                       ": lengths " + (cert.lengths_ok ? "ok" : "fail") + ", avoidance " + (cert.avoid_ok ? "ok" : "fail") +
                       ", conjugate points " + (cert.conjugate_ok ? "none" : "present") + ", excursion " +
                       (cert.excursion_ok ? "bounded" : "unbounded"));
  return o;
}

Outcome cmd_excursion(const MetricProfile& prof, const RunConfig& c) {
  const TorusPoint p = canonical(point_arg(c.p, "p")), q = canonical(point_arg(c.q, "q"));
  const HomologyClass h = class_arg(c.cls, {1, 0});
  const int nmax = c.nmax.value_or(8);
  if (nmax < 1) throw Error(ErrorKind::InvalidArgument, "--nmax must be positive");
  const std::vector<double> eps = eps_grid(c);
  StripOptions so = default_strip_options();
  if (c.tol) so.boundary_tol = positive(c.tol, 1e-9, "tol");
  const AdmissibleCylinder cyl = cylinder_for(prof, h, p, q, c, so.boundary_tol);
  std::vector<int> ns;
  for (int n = 1; n <= nmax; ++n) ns.push_back(n);
  const ExcursionProfile ep = excursion_profile(prof, cyl, p, q, ns, eps, so);
  Outcome o;
  o.tolerances = {{"boundary_tol", so.boundary_tol}, {"bvp_residual_tol", so.bvp.residual_tol}, {"flow", to_json(so.bvp.flow)}, {"eps", eps}};
  o.body = {{"p", to_json(p)}, {"q", to_json(q)}, {"cylinder", to_json(cyl)}, {"excursion", to_json(ep)}};
  o.files.emplace_back("excursion.csv", excursion_csv(ep));
  o.plots.push_back({"excursion.csv", "time to reach the eps-neighbourhood of the boundary", "n", {"t_n"}, "eps"});
  o.plots.push_back({"excursion.csv", "largest boundary distance after T(eps)", "n", {"maxdist"}, "eps"});
  std::string line = std::string(ep.one_sided ? "one-sided" : "two-sided") + " excursion profile, T(eps):";
  for (std::size_t i = 0; i < eps.size(); ++i) line += " " + fmt(eps[i]) + "->" + fmt(ep.T[i]);
  o.summary.push_back(line);
  return o;
}

Outcome cmd_gcheck(const MetricProfile& prof, const RunConfig& c) {
  GConditionOptions go;
  go.cylinders = cylinder_options(c);
  if (!c.cls.empty()) go.classes = {class_arg(c.cls, {1, 0})};
  const GConditions g = g_conditions(prof, go);
  Outcome o;
  o.tolerances = {{"eigen_margin", go.eigen_margin},
                  {"foliation_tol", go.cylinders.foliation_tol},
                  {"seeds", go.cylinders.seeds},
                  {"periodic", periodic_tolerances(go.cylinders.periodic)}};
  o.body = to_json(g);
  std::string csv = "m,n,foliated,cylinders,clusters,min_length,nondegenerate\n";
  for (const auto& d : g.classes) {
    csv += std::to_string(d.h.m) + "," + std::to_string(d.h.n) + "," + (d.foliated ? "1" : "0") + "," +
           std::to_string(d.cylinders) + "," + std::to_string(d.clusters) + "," + fmt(d.min_length, 17) + "," +
           (d.nondegenerate ? "1" : "0") + "\n";
    o.summary.push_back("class (" + std::to_string(d.h.m) + "," + std::to_string(d.h.n) + "): " +
                        (d.foliated ? "foliated" : std::to_string(d.cylinders) + " cylinder(s)") + ", " +
                        std::to_string(d.clusters) + " minimizer(s)" +
                        (d.have_monodromy ? (d.nondegenerate ? ", nondegenerate" : ", degenerate") : ""));
  }
  o.files.emplace_back("gcheck.csv", csv);
  o.plots.push_back({"gcheck.csv", "minimal closed geodesic counts per class", "m", {"clusters"}, "n"});
  o.summary.push_back(std::string("G1 ") + (g.g1 ? "holds" : "fails") + ", G2 " + (g.g2 ? "holds" : "fails") + ", G3 " +
                      (g.g3 ? "holds" : "fails") + " (at scan resolution)");
  return o;
}

void emit_error(const std::string& kind, const std::string& message, int code) {
  const json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic blocking, insecurity certificates and excursion profiles on tori of revolution"};
  app.require_subcommand(1);
  RunConfig cfg;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"integrate", "integrate a geodesic from --p with heading --theta for --length"},
      {"connect", "shortest geodesic from p to q in the lift class --class"},
      {"enumerate", "joining geodesics from p to q up to --lmax, with midpoints"},
      {"minimal", "minimal closed geodesics in --class"},
      {"cylinders", "admissible cylinders bounded by minimal closed geodesics of --class"},
      {"block", "verify the involution blocking set for p, q on the symmetry latitude"},
      {"insecure", "insecurity certificate for p, q in an admissible cylinder"},
      {"gcheck", "G1/G2/G3 diagnostics over a set of classes"},
      {"excursion", "boundary excursion profile of long minimal strip geodesics"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->fallthrough();
    sub->callback([&cfg, n = name] { cfg.command = n; });
  }
  app.add_option("--profile", cfg.profile_path, "metric profile JSON file")->required();
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--lmax", cfg.lmax, "maximal geodesic length");
  app.add_option("--nmax", cfg.nmax, "number of certificate geodesics");
  app.add_option("--eps", cfg.eps, "comma-separated eps grid")->delimiter(',');
  app.add_option("--sweep", cfg.sweep, "headings per half-plane in the enumeration sweep");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--tol", cfg.tol, "primary tolerance of the command (see README)");
  app.add_option("--p", cfg.p, "first point x,y")->delimiter(',');
  app.add_option("--q", cfg.q, "second point x,y")->delimiter(',');
  app.add_option("--class", cfg.cls, "homotopy class or lift offset m,n")->delimiter(',');
  app.add_option("--theta", cfg.theta, "initial heading (integrate)");
  app.add_option("--length", cfg.length, "integration length (integrate)");
  app.add_option("--delta", cfg.delta, "passage / escape distance");
  app.add_option("--latitude", cfg.latitude, "symmetry latitude (block); default: location of min f");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("InvalidArgument", e.what(), 2);
    return 2;
  }

  try {
    const MetricProfile prof = load_profile(cfg.profile_path);
    Outcome o;
    if (cfg.command == "integrate") o = cmd_integrate(prof, cfg);
    else if (cfg.command == "connect") o = cmd_connect(prof, cfg);
    else if (cfg.command == "enumerate") o = cmd_enumerate(prof, cfg);
    else if (cfg.command == "minimal") o = cmd_minimal(prof, cfg);
    else if (cfg.command == "cylinders") o = cmd_cylinders(prof, cfg);
    else if (cfg.command == "block") o = cmd_block(prof, cfg);
    else if (cfg.command == "insecure") o = cmd_insecure(prof, cfg);
    else if (cfg.command == "gcheck") o = cmd_gcheck(prof, cfg);
    else o = cmd_excursion(prof, cfg);

    const std::filesystem::path dir(cfg.out_dir);
    json rep = report_envelope(cfg.command, prof, o.tolerances, std::move(o.body));
    std::vector<std::string> names;
    for (const auto& [name, content] : o.files) {
      write_atomic(dir / name, content);
      names.push_back(name);
    }
    rep["files"] = names;
    rep["plot_manifest"] = cfg.command + "_plots.json";
    write_atomic(dir / (cfg.command + ".json"), dump_json(rep));
    write_atomic(dir / (cfg.command + "_plots.json"), dump_json(plot_manifest(o.plots)));

    std::cout << cfg.command << " | profile " << profile_hash(prof) << " | geoblock " << library_version() << "\n";
    for (const auto& line : o.summary) std::cout << "  " << line << "\n";
    std::cout << "  report: " << (dir / (cfg.command + ".json")).string() << "\n";
    return 0;
  } catch (const Error& e) {
    const int code = e.is_input_error() ? 2 : 1;
    emit_error(to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error("Internal", e.what(), 1);
    return 1;
  }
}
