#pragma once

// JSON and CSV serialization of library results, report envelopes and
// atomic file output.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoblock/asymptotics.hpp"
#include "geoblock/connect.hpp"
#include "geoblock/flow.hpp"
#include "geoblock/metric.hpp"
#include "geoblock/security.hpp"

namespace geoblock {

/// Library version embedded in every report.
const char* library_version();

/// Common report header: command, library version, profile and its hash,
/// effective tolerances. `body` is stored under "result".
nlohmann::json report_envelope(const std::string& command, const MetricProfile& profile,
                               const nlohmann::json& tolerances, nlohmann::json body);

nlohmann::json to_json(TorusPoint p);
nlohmann::json to_json(CoverPoint p);
nlohmann::json to_json(HomologyClass h);
nlohmann::json to_json(const FlowOptions& o);

/// Length, endpoints, sample count and conservation drifts of a trace.
nlohmann::json trace_summary(const MetricProfile& profile, const GeodesicTrace& trace);

/// Geodesics sorted by length with lift offsets, hit errors and the flag
/// `minimal` (within 1e-6 of the shortest found with the same offset).
nlohmann::json to_json(const MetricProfile& profile, const EnumerationResult& e);
nlohmann::json to_json(const MetricProfile& profile, const PeriodicGeodesic& g);
nlohmann::json to_json(const AdmissibleCylinder& c);
nlohmann::json to_json(const ExcursionProfile& e);
nlohmann::json to_json(const MetricProfile& profile, const SecurityReport& r);
nlohmann::json to_json(const MidpointAnalysis& m);
nlohmann::json to_json(const MetricProfile& profile, const InsecurityCertificate& c);
nlohmann::json to_json(const EscapeResult& e);
nlohmann::json to_json(const IntersectionResult& r);
nlohmann::json to_json(const GConditions& g);

/// Deterministic text form: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Columns t, X, Y, xi, eta, clairaut. An optional leading column tags the
/// rows (e.g. a geodesic index) when several traces share one file.
std::string trace_csv(const MetricProfile& profile, const GeodesicTrace& trace);
std::string traces_csv(const MetricProfile& profile, const std::vector<GeodesicTrace>& traces,
                       const std::string& tag_column);

/// Columns n, L_n, eps, entry, exit, t_n, maxdist.
std::string excursion_csv(const ExcursionProfile& e);

struct PlotSpec {
  std::string file;
  std::string title;
  std::string x;
  std::vector<std::string> y;
  std::string group;  // column separating series, empty for none
};

nlohmann::json plot_manifest(const std::vector<PlotSpec>& plots);

/// Writes through a temporary file in the same directory and renames it over
/// the target. Throws InvalidArgument when the directory cannot be written.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace geoblock
