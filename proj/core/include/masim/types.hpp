#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace masim {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wavelength of a carrier, lambda = c / f_c.
double wavelength_m(double carrier_hz);

// 10*log10 with a floor so that exact zeros stay finite in exported files.
double to_db(double linear, double floor_db = -300.0);
double from_db(double db);

// MA coordinate in the movement plane.
struct Position {
  double x_m = 0.0;
  double y_m = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

// Invalid input: bad configuration, violated precondition, malformed file.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem failures; the message always names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Steering vectors of the estimated paths are (numerically) linearly
// dependent for the given aperture, so zero-forcing has no solution.
class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace masim
