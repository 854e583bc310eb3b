#include "geoblock/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <system_error>

#include "geoblock/errors.hpp"

namespace geoblock {

using nlohmann::json;

namespace {

// Shortest round-trip text of a double; non-finite values as nan/inf.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON has no NaN or infinity.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

const char* library_version() { return "0.3.0"; }

json report_envelope(const std::string& command, const MetricProfile& profile, const json& tolerances,
                     json body) {
  json j;
  j["command"] = command;
  j["library"] = "geoblock";
  j["version"] = library_version();
  j["profile"] = profile_to_json(profile);
  j["profile_hash"] = profile_hash(profile);
  j["tolerances"] = tolerances;
  j["result"] = std::move(body);
  return j;
}

json to_json(TorusPoint p) { return json::array({p.x, p.y}); }
json to_json(CoverPoint p) { return json::array({p.X, p.Y}); }
json to_json(HomologyClass h) { return json::array({h.m, h.n}); }

json to_json(const FlowOptions& o) {
  return {{"abs_tol", o.abs_tol},
          {"rel_tol", o.rel_tol},
          {"output_step", o.output_step},
          {"min_step", o.min_step},
          {"max_steps", o.max_steps},
          {"translate", o.translate}};
}

json trace_summary(const MetricProfile& profile, const GeodesicTrace& trace) {
  json j;
  j["samples"] = trace.samples.size();
  if (trace.empty()) return j;
  j["length"] = trace.length();
  j["start"] = to_json(trace.start());
  j["end"] = to_json(trace.end());
  j["start_heading"] = trace.samples.front().theta;
  j["end_heading"] = trace.samples.back().theta;
  const double F0 = sample_clairaut(profile, trace.samples.front());
  double drift = 0.0, speed = 0.0;
  for (const auto& s : trace.samples) {
    drift = std::max(drift, std::abs(sample_clairaut(profile, s) - F0));
    speed = std::max(speed, std::abs(std::sqrt(speed_squared(profile, sample_state(profile, s))) - 1.0));
  }
  j["clairaut"] = F0;
  j["clairaut_drift"] = drift;
  j["speed_drift"] = speed;
  return j;
}

json to_json(const MetricProfile& profile, const EnumerationResult& e) {
  std::map<std::pair<long, long>, double> shortest;
  for (const auto& g : e.geodesics) {
    const auto key = std::make_pair(g.offset.m, g.offset.n);
    const double L = g.trace.length();
    auto it = shortest.find(key);
    if (it == shortest.end() || L < it->second) shortest[key] = L;
  }
  json arr = json::array();
  for (std::size_t i = 0; i < e.geodesics.size(); ++i) {
    const auto& g = e.geodesics[i];
    const double L = g.trace.length();
    json r;
    r["index"] = i;
    r["length"] = L;
    r["offset_m"] = g.offset.m;
    r["offset_n"] = g.offset.n;
    r["initial_heading"] = g.initial_heading;
    r["end_heading"] = g.trace.samples.back().theta;
    r["hit_error"] = g.hit_error;
    r["clairaut"] = sample_clairaut(profile, g.trace.samples.front());
    r["minimal"] = L <= shortest[{g.offset.m, g.offset.n}] + 1e-6;
    arr.push_back(std::move(r));
  }
  return {{"count", e.geodesics.size()},
          {"geodesics", std::move(arr)},
          {"sweep_sizes", e.sweep_sizes},
          {"found_per_sweep", e.found_per_sweep},
          {"saturated", e.saturated}};
}

json to_json(const MetricProfile& profile, const PeriodicGeodesic& g) {
  json j = trace_summary(profile, g.trace);
  j["class"] = to_json(g.h);
  j["period"] = g.length;
  j["transversal"] = transversal_coordinate(g.trace, g.h);
  return j;
}

json to_json(const AdmissibleCylinder& c) {
  return {{"class", to_json(c.h)},
          {"a_low", c.a_low},
          {"a_high", c.a_high},
          {"boundary_lengths", json::array({c.boundary_traces[0].length(), c.boundary_traces[1].length()})}};
}

json to_json(const ExcursionProfile& e) {
  json recs = json::array();
  for (const auto& r : e.records) {
    recs.push_back({{"n", r.n},
                    {"length", r.length},
                    {"eps", r.eps},
                    {"entry", jnum(r.entry)},
                    {"exit", jnum(r.exit)},
                    {"t_n", jnum(r.t_n)},
                    {"maxdist", r.maxdist},
                    {"reached", r.reached}});
  }
  json T = json::array();
  for (double v : e.T) T.push_back(jnum(v));
  return {{"eps_grid", e.eps_grid}, {"T", std::move(T)}, {"one_sided", e.one_sided}, {"records", std::move(recs)}};
}

json to_json(const MetricProfile& profile, const SecurityReport& r) {
  json B = json::array();
  for (const auto& b : r.blocking_set) B.push_back(to_json(b));
  json enumeration = to_json(profile, r.enumeration);
  json per = json::array();
  for (const auto& g : r.geodesics) {
    per.push_back({{"index", g.index},
                   {"length", g.length},
                   {"offset", to_json(g.offset)},
                   {"blocked", g.blocked},
                   {"blocking_point", g.nearest.point},
                   {"passage_t", g.nearest.t},
                   {"passage_distance", jnum(g.nearest.distance)},
                   {"endpoint_velocity_gap", g.endpoint_velocity_gap}});
  }
  return {{"p", to_json(r.p)},
          {"q", to_json(r.q)},
          {"max_length", r.max_length},
          {"delta", r.delta},
          {"blocking_set", std::move(B)},
          {"enumeration", std::move(enumeration)},
          {"blocking", std::move(per)},
          {"verdict", to_string(r.verdict)},
          {"witnesses", r.witnesses},
          {"caveat", "blocking is verified only for geodesics of length <= max_length"}};
}

json to_json(const MidpointAnalysis& m) {
  json clusters = json::array();
  for (const auto& c : m.clusters) {
    clusters.push_back({{"center", to_json(c.center)}, {"size", c.size}, {"is_endpoint", c.is_endpoint}});
  }
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"index", e.index}, {"midpoint", to_json(e.midpoint)}, {"cluster", e.cluster}});
  }
  return {{"cluster_tol", m.cluster_tol}, {"clusters", std::move(clusters)}, {"entries", std::move(entries)}};
}

json to_json(const MetricProfile& profile, const InsecurityCertificate& c) {
  json geos = json::array();
  for (std::size_t i = 0; i < c.geodesics.size(); ++i) {
    const auto& g = c.geodesics[i];
    json s = trace_summary(profile, g.trace);
    s["n"] = g.n;
    s["target"] = to_json(g.target);
    s["min_boundary_distance"] = c.min_boundary_distance[i];
    s["conjugate"] = static_cast<bool>(c.conjugate[i]);
    s["first_conjugate"] = jnum(c.first_conjugate[i]);
    geos.push_back(std::move(s));
  }
  return {{"p", to_json(c.p)},
          {"q", to_json(c.q)},
          {"cylinder", to_json(c.cylinder)},
          {"one_sided", c.one_sided},
          {"boundary_period", c.boundary_period},
          {"geodesics", std::move(geos)},
          {"lengths", c.lengths},
          {"gaps", c.gaps},
          {"conditions",
           {{"lengths", c.lengths_ok},
            {"avoid_boundary", c.avoid_ok},
            {"no_conjugate_points", c.conjugate_ok},
            {"bounded_excursion", c.excursion_ok}}},
          {"reference_n", c.reference_n},
          {"gap_tolerance", c.options.gap_tolerance},
          {"growth_factor", c.options.growth_factor},
          {"excursion", to_json(c.excursion)},
          {"verdict", c.valid ? "VALID" : "INVALID"}};
}

json to_json(const EscapeResult& e) {
  json md = json::array();
  for (double v : e.min_distance) md.push_back(jnum(v));
  return {{"witness", e.witness ? json(*e.witness) : json(nullptr)},
          {"min_distance", std::move(md)},
          {"outcome", e.witness ? "witness" : "exhausted"}};
}

json to_json(const IntersectionResult& r) {
  json cs = json::array();
  for (const auto& c : r.crossings) {
    cs.push_back({{"t1", c.t1}, {"t2", c.t2}, {"point", to_json(c.point)}, {"sign", c.sign}, {"angle", c.angle}});
  }
  return {{"count", r.count()}, {"signed_sum", r.signed_sum}, {"crossings", std::move(cs)}};
}

json to_json(const GConditions& g) {
  json cls = json::array();
  for (const auto& d : g.classes) {
    json e{{"class", to_json(d.h)},
           {"foliated", d.foliated},
           {"cylinders", d.cylinders},
           {"clusters", d.clusters},
           {"min_length", jnum(d.min_length)},
           {"have_monodromy", d.have_monodromy},
           {"nondegenerate", d.nondegenerate}};
    if (d.have_monodromy) {
      e["eigenvalues"] = {{"real", d.eigen.real},
                          {"values", json::array({json::array({d.eigen.re1, d.eigen.im1}),
                                                  json::array({d.eigen.re2, d.eigen.im2})})}};
    }
    cls.push_back(std::move(e));
  }
  json pair = nullptr;
  if (g.g2_pair) pair = json::array({to_json((*g.g2_pair)[0]), to_json((*g.g2_pair)[1])});
  return {{"classes", std::move(cls)},
          {"G1", g.g1},
          {"G2", g.g2},
          {"G3", g.g3},
          {"G2_pair", std::move(pair)},
          {"cluster_tol", g.cluster_tol},
          {"eigen_margin", g.eigen_margin}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

namespace {

void trace_rows(std::string& out, const MetricProfile& profile, const GeodesicTrace& trace, const std::string* tag) {
  for (const auto& s : trace.samples) {
    const PhaseState ps = sample_state(profile, s);
    if (tag != nullptr) out += *tag + ",";
    out += num(s.t) + "," + num(s.X) + "," + num(s.Y) + "," + num(ps.xi) + "," + num(ps.eta) + "," +
           num(sample_clairaut(profile, s)) + "\n";
  }
}

}  // namespace

std::string trace_csv(const MetricProfile& profile, const GeodesicTrace& trace) {
  std::string out = "t,X,Y,xi,eta,clairaut\n";
  trace_rows(out, profile, trace, nullptr);
  return out;
}

std::string traces_csv(const MetricProfile& profile, const std::vector<GeodesicTrace>& traces,
                       const std::string& tag_column) {
  std::string out = tag_column + ",t,X,Y,xi,eta,clairaut\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::string tag = std::to_string(i);
    trace_rows(out, profile, traces[i], &tag);
  }
  return out;
}

std::string excursion_csv(const ExcursionProfile& e) {
  std::string out = "n,L_n,eps,entry,exit,t_n,maxdist\n";
  for (const auto& r : e.records) {
    out += std::to_string(r.n) + "," + num(r.length) + "," + num(r.eps) + "," + num(r.entry) + "," + num(r.exit) +
           "," + num(r.t_n) + "," + num(r.maxdist) + "\n";
  }
  return out;
}

json plot_manifest(const std::vector<PlotSpec>& plots) {
  json arr = json::array();
  for (const auto& p : plots) {
    json e{{"file", p.file}, {"title", p.title}, {"x", p.x}, {"y", p.y}};
    if (!p.group.empty()) e["group"] = p.group;
    arr.push_back(std::move(e));
  }
  return {{"plots", std::move(arr)}};
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::InvalidArgument, "cannot create output directory " + dir.string());
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::InvalidArgument, "write failed for " + path.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::InvalidArgument, "cannot rename onto " + path.string());
  }
}

}  // namespace geoblock
