#pragma once

// Metric profiles f on the circle T = R/Z defining the torus of revolution
//   ds^2 = f(y)^2 dx^2 + dy^2
// on T^2 = R^2 / Z^2. Both circle factors have period 1.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace geoblock {

struct TorusPoint {
  double x = 0.0;
  double y = 0.0;
};

struct CoverPoint {
  double X = 0.0;
  double Y = 0.0;
};

/// Reduce a real number to its canonical representative in [0, 1).
double wrap01(double v);

/// Distance on the circle R/Z.
double circle_dist(double a, double b);

TorusPoint canonical(TorusPoint p);
TorusPoint project(CoverPoint P);

/// Componentwise circle distance, combined Euclidean. Not the Riemannian distance.
double torus_coord_dist(TorusPoint a, TorusPoint b);

struct ProfileValue {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

enum class ProfileKind { Flat, Round, Fourier };

// Immutable after construction. Fourier profiles are
//   f(y) = a0 + sum_k cos[k-1] cos(2 pi k y) + sin[k-1] sin(2 pi k y).
// Round(r, R) is f(y) = R - r cos(2 pi y). The length normalization relative
// to the embedded torus with angular metric (R - r cos b)^2 da^2 + r^2 db^2 is
// a constant factor: equator lengths here are f(y) instead of 2 pi f(y).
class MetricProfile {
 public:
  static MetricProfile flat();
  static MetricProfile round(double r, double R);
  static MetricProfile fourier(double a0, std::vector<double> cos_coeffs,
                               std::vector<double> sin_coeffs);

  ProfileKind kind() const { return kind_; }
  double round_r() const { return r_; }
  double round_R() const { return R_; }
  double a0() const { return a0_; }
  const std::vector<double>& cos_coeffs() const { return cos_; }
  const std::vector<double>& sin_coeffs() const { return sin_; }

  ProfileValue eval(double y) const;
  double f(double y) const { return eval(y).f; }

  /// Global minimum of f over the circle (location in [0,1), value).
  double min_location() const { return min_y_; }
  double min_value() const { return min_f_; }

  /// All local minima (dense sampling + Newton polish), sorted by location.
  const std::vector<double>& local_minima() const { return local_minima_; }

  bool is_flat() const;

 private:
  MetricProfile() = default;
  void validate_and_index();

  ProfileKind kind_ = ProfileKind::Flat;
  double r_ = 0.0;
  double R_ = 0.0;
  double a0_ = 1.0;
  std::vector<double> cos_;
  std::vector<double> sin_;
  double min_y_ = 0.0;
  double min_f_ = 1.0;
  std::vector<double> local_minima_;
};

/// (f, f', f'') at y.
ProfileValue eval_f(const MetricProfile& profile, double y);

/// K = -f''(y) / f(y).
double gaussian_curvature(const MetricProfile& profile, double y);

/// g-length of the latitude loop x -> (x, y).
double latitude_length(const MetricProfile& profile, double y);

/// Riemannian distance from p to the latitude circle {y = a}: the vertical
/// displacement is a lower bound for any path and the vertical segment attains it.
double dist_to_latitude(const MetricProfile& profile, TorusPoint p, double a);

/// Local metric distance sqrt(f(ybar)^2 dx^2 + dy^2) between nearby points,
/// using the shortest coordinate representative. Accurate to second order for
/// small separations; used for passage tests near blocking points.
double local_distance(const MetricProfile& profile, TorusPoint a, TorusPoint b);

// Profile file schema:
//   {"kind":"round","r":1.0,"R":2.0} | {"kind":"flat"} |
//   {"kind":"fourier","a0":...,"cos":[...],"sin":[...]}
MetricProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const MetricProfile& profile);
MetricProfile load_profile(const std::string& path);

/// Stable FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string profile_hash(const MetricProfile& profile);

}  // namespace geoblock
