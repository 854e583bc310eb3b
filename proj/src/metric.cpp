#include "geoblock/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "geoblock/errors.hpp"

namespace geoblock {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPositivityGrid = 10000;

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidProfile: return "InvalidProfile";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NotPeriodic: return "NotPeriodic";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotPrime: return "NotPrime";
    case ErrorKind::ZeroDisplacement: return "ZeroDisplacement";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::MissingGeodesic: return "MissingGeodesic";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::TangencyDetected: return "TangencyDetected";
    case ErrorKind::Rejected: return "Rejected";
  }
  return "Unknown";
}

double wrap01(double v) {
  double r = v - std::floor(v);
  // floor can leave r == 1 for tiny negative v.
  return r >= 1.0 ? 0.0 : r;
}

double circle_dist(double a, double b) {
  double d = wrap01(a - b);
  return std::min(d, 1.0 - d);
}

TorusPoint canonical(TorusPoint p) { return {wrap01(p.x), wrap01(p.y)}; }

TorusPoint project(CoverPoint P) { return {wrap01(P.X), wrap01(P.Y)}; }

double torus_coord_dist(TorusPoint a, TorusPoint b) {
  return std::hypot(circle_dist(a.x, b.x), circle_dist(a.y, b.y));
}

MetricProfile MetricProfile::flat() {
  MetricProfile p;
  p.kind_ = ProfileKind::Flat;
  p.validate_and_index();
  return p;
}

MetricProfile MetricProfile::round(double r, double R) {
  if (!(r > 0.0) || !(R > r)) {
    throw Error(ErrorKind::InvalidProfile, "round profile requires 0 < r < R");
  }
  MetricProfile p;
  p.kind_ = ProfileKind::Round;
  p.r_ = r;
  p.R_ = R;
  p.validate_and_index();
  return p;
}

MetricProfile MetricProfile::fourier(double a0, std::vector<double> cos_coeffs,
                                     std::vector<double> sin_coeffs) {
  MetricProfile p;
  p.kind_ = ProfileKind::Fourier;
  p.a0_ = a0;
  p.cos_ = std::move(cos_coeffs);
  p.sin_ = std::move(sin_coeffs);
  for (double c : p.cos_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidProfile, "non-finite Fourier coefficient");
  }
  for (double c : p.sin_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidProfile, "non-finite Fourier coefficient");
  }
  p.validate_and_index();
  return p;
}

bool MetricProfile::is_flat() const {
  if (kind_ == ProfileKind::Flat) return true;
  if (kind_ == ProfileKind::Round) return false;
  auto zero = [](double c) { return c == 0.0; };
  return std::all_of(cos_.begin(), cos_.end(), zero) && std::all_of(sin_.begin(), sin_.end(), zero);
}

ProfileValue MetricProfile::eval(double y) const {
  switch (kind_) {
    case ProfileKind::Flat:
      return {1.0, 0.0, 0.0};
    case ProfileKind::Round: {
      const double c = std::cos(kTwoPi * y);
      const double s = std::sin(kTwoPi * y);
      return {R_ - r_ * c, kTwoPi * r_ * s, kTwoPi * kTwoPi * r_ * c};
    }
    case ProfileKind::Fourier: {
      ProfileValue v{a0_, 0.0, 0.0};
      const std::size_t n = std::max(cos_.size(), sin_.size());
      for (std::size_t k = 1; k <= n; ++k) {
        const double w = kTwoPi * static_cast<double>(k);
        const double c = std::cos(w * y);
        const double s = std::sin(w * y);
        const double a = k <= cos_.size() ? cos_[k - 1] : 0.0;
        const double b = k <= sin_.size() ? sin_[k - 1] : 0.0;
        v.f += a * c + b * s;
        v.df += w * (-a * s + b * c);
        v.d2f += -w * w * (a * c + b * s);
      }
      return v;
    }
  }
  return {};
}

void MetricProfile::validate_and_index() {
  // Dense grid, then Newton on f' for every grid-local minimum.
  std::vector<double> vals(kPositivityGrid);
  for (int i = 0; i < kPositivityGrid; ++i) {
    vals[i] = eval(static_cast<double>(i) / kPositivityGrid).f;
    if (!std::isfinite(vals[i])) throw Error(ErrorKind::InvalidProfile, "profile is not finite");
  }
  local_minima_.clear();
  min_f_ = vals[0];
  min_y_ = 0.0;
  if (is_flat()) {
    if (!(vals[0] > 0.0)) throw Error(ErrorKind::InvalidProfile, "profile must be positive");
    min_f_ = vals[0];
    return;
  }
  const double h = 1.0 / kPositivityGrid;
  for (int i = 0; i < kPositivityGrid; ++i) {
    const double prev = vals[(i + kPositivityGrid - 1) % kPositivityGrid];
    const double next = vals[(i + 1) % kPositivityGrid];
    if (!(vals[i] <= prev && vals[i] < next)) continue;
    double y = i * h;
    for (int it = 0; it < 50; ++it) {
      const ProfileValue v = eval(y);
      if (v.d2f <= 0.0) break;
      const double step = v.df / v.d2f;
      y -= std::clamp(step, -h, h);
      if (std::abs(step) < 1e-15) break;
    }
    y = wrap01(y);
    const double fy = eval(y).f;
    bool dup = false;
    for (double m : local_minima_) {
      if (circle_dist(m, y) < 1e-9) dup = true;
    }
    if (!dup) local_minima_.push_back(y);
    if (fy < min_f_) {
      min_f_ = fy;
      min_y_ = y;
    }
  }
  for (double v : vals) min_f_ = std::min(min_f_, v);
  if (!(min_f_ > 0.0)) {
    throw Error(ErrorKind::InvalidProfile, "profile must be strictly positive (min f <= 0)");
  }
  std::sort(local_minima_.begin(), local_minima_.end());
}

ProfileValue eval_f(const MetricProfile& profile, double y) { return profile.eval(y); }

double gaussian_curvature(const MetricProfile& profile, double y) {
  const ProfileValue v = profile.eval(y);
  if (v.d2f == 0.0) return 0.0;
  return -v.d2f / v.f;
}

double latitude_length(const MetricProfile& profile, double y) { return profile.f(y); }

double dist_to_latitude(const MetricProfile& /*profile*/, TorusPoint p, double a) {
  return circle_dist(p.y, a);
}

double local_distance(const MetricProfile& profile, TorusPoint a, TorusPoint b) {
  double dx = wrap01(b.x - a.x);
  if (dx > 0.5) dx -= 1.0;
  double dy = wrap01(b.y - a.y);
  if (dy > 0.5) dy -= 1.0;
  const double f = profile.f(a.y + 0.5 * dy);
  return std::hypot(f * dx, dy);
}

MetricProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorKind::InvalidProfile, "profile must be an object with a string \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "flat") return MetricProfile::flat();
    if (kind == "round") {
      if (!j.contains("r") || !j.contains("R")) {
        throw Error(ErrorKind::InvalidProfile, "round profile requires \"r\" and \"R\"");
      }
      return MetricProfile::round(j.at("r").get<double>(), j.at("R").get<double>());
    }
    if (kind == "fourier") {
      if (!j.contains("a0")) throw Error(ErrorKind::InvalidProfile, "fourier profile requires \"a0\"");
      std::vector<double> c = j.value("cos", std::vector<double>{});
      std::vector<double> s = j.value("sin", std::vector<double>{});
      return MetricProfile::fourier(j.at("a0").get<double>(), std::move(c), std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidProfile, std::string("malformed profile: ") + e.what());
  }
  throw Error(ErrorKind::InvalidProfile, "unknown profile kind \"" + kind + "\"");
}

nlohmann::json profile_to_json(const MetricProfile& profile) {
  switch (profile.kind()) {
    case ProfileKind::Flat:
      return {{"kind", "flat"}};
    case ProfileKind::Round:
      return {{"kind", "round"}, {"r", profile.round_r()}, {"R", profile.round_R()}};
    case ProfileKind::Fourier:
      return {{"kind", "fourier"},
              {"a0", profile.a0()},
              {"cos", profile.cos_coeffs()},
              {"sin", profile.sin_coeffs()}};
  }
  return {};
}

MetricProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidProfile, "cannot open profile file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidProfile, std::string("profile parse error: ") + e.what());
  }
  return profile_from_json(j);
}

std::string profile_hash(const MetricProfile& profile) {
  const std::string text = profile_to_json(profile).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace geoblock
