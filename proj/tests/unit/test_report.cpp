#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "geoblock/report.hpp"

using namespace geoblock;

TEST_CASE("report envelope carries provenance of the run") {
  const MetricProfile rd = MetricProfile::round(1.0, 2.0);
  const nlohmann::json env = report_envelope("demo", rd, {{"tol", 1e-9}}, {{"value", 3}});
  CHECK(env["command"] == "demo");
  CHECK(env["profile_hash"] == profile_hash(rd));
  CHECK(env["version"] == library_version());
  CHECK(env["tolerances"]["tol"] == 1e-9);
  CHECK(env["result"]["value"] == 3);
}

TEST_CASE("json dumps are deterministic and finite") {
  nlohmann::json a;
  a["b"] = 1.0;
  a["a"] = std::nan("");
  a["c"] = {0.1, INFINITY};
  const std::string s = dump_json(a);
  CHECK(s == dump_json(nlohmann::json::parse(s)));
  CHECK(s.find("NaN") == std::string::npos);
  CHECK(s.back() == '\n');
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(nlohmann::json::parse(s)["a"].is_null());
}

TEST_CASE("trace csv has one row per sample") {
  const MetricProfile flat = MetricProfile::flat();
  const GeodesicTrace tr = integrate_heading(flat, {0.0, 0.0}, 0.3, 1.0);
  const std::string csv = trace_csv(flat, tr);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == tr.samples.size() + 1);
  CHECK(csv.rfind("t,X,Y,xi,eta,clairaut\n", 0) == 0);
  const std::string multi = traces_csv(flat, {tr, tr}, "loop");
  CHECK(multi.rfind("loop,", 0) == 0);
}

TEST_CASE("plot manifest names axes") {
  const nlohmann::json m = plot_manifest({{"a.csv", "title", "t", {"X", "Y"}, ""}});
  REQUIRE(m["plots"].size() == 1);
  CHECK(m["plots"][0]["x"] == "t");
  CHECK(m["plots"][0]["y"][1] == "Y");
}

TEST_CASE("atomic writes replace files and leave no temporaries") {
  const auto dir = std::filesystem::temp_directory_path() / "geoblock_report_test";
  std::filesystem::remove_all(dir);
  write_atomic(dir / "x.json", "first\n");
  write_atomic(dir / "x.json", "second\n");
  std::ifstream in(dir / "x.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "second\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(write_atomic("/proc/geoblock_forbidden/x.json", "x"));
}
