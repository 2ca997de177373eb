#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "masim/types.hpp"

namespace masim {

// One far-field propagation path. Angles are in degrees at this boundary and
// converted to radians internally.
struct PathComponent {
  double elevation_deg = 0.0;  // theta_l in [-90, 90]
  double azimuth_deg = 0.0;    // phi_l in [-90, 90]
  double amplitude = 0.0;      // small-scale amplitude alpha_l >= 0
  double delay_s = 0.0;        // propagation delay tau_l >= 0
};

// Path state information: the ground truth (or an estimate) of the multipath
// channel seen from the reference position r0 = (0, 0).
struct PathStateInfo {
  std::vector<PathComponent> paths;
  double large_scale_gain = 1.0;  // beta
  double carrier_hz = 0.0;

  // Throws ValidationError on out-of-range fields. With `normalized`, the
  // squared amplitudes must sum to 1 within +/-0.01.
  void validate(bool normalized = false) const;

  double wavelength_m() const;
  double sum_amplitude() const;
  double sum_power() const;
};

// Rectangular movement region C_r, sampled on a regular grid. The grid is
// built outward from the center so the center is always a grid point.
struct MovementRegion {
  double x_extent_m = 0.0;  // half-width along x
  double y_extent_m = 0.0;  // half-width along y
  double x_step_m = 1e-3;
  double y_step_m = 1e-3;
  double center_x_m = 0.0;
  double center_y_m = 0.0;

  void validate() const;

  std::vector<double> x_axis() const;
  std::vector<double> y_axis() const;
  // Row-major by y then x: index = iy * nx + ix.
  std::vector<Position> grid() const;
  std::size_t size() const;

  bool contains(Position p, double tol_m = 1e-12) const;
  Position clamp(Position p) const;
};

// Variation of the propagation distance of one path at r w.r.t. r0:
// d(r) = x cos(theta) sin(phi) + y sin(theta).
double path_distance_delta(const PathComponent& path, Position r);

// Field-response vector f(r); element l = exp(+j 2 pi d_l(r) / lambda).
CVec field_response_vector(const PathStateInfo& psi, Position r, double wavelength_m);

// Complex coefficient of path l at r including the spatial phase:
// sqrt(beta) alpha_l exp(-j 2 pi (d_l(r) / lambda + f_c tau_l)).
cplx path_coefficient(const PathStateInfo& psi, std::size_t l, Position r);

// h(r) = sqrt(beta) f(r)^H b.
cplx channel_response(const PathStateInfo& psi, Position r);

// g(r) = |sum_l alpha_l exp(-j 2 pi (d_l(r) / lambda + f_c tau_l))|^2, which
// excludes beta.
double small_scale_gain(const PathStateInfo& psi, Position r);

struct GainMap {
  std::vector<double> x_axis_m;
  std::vector<double> y_axis_m;
  std::vector<double> gain;  // linear, index iy * nx + ix

  std::size_t nx() const { return x_axis_m.size(); }
  std::size_t ny() const { return y_axis_m.size(); }
  std::size_t size() const { return gain.size(); }
  Position position(std::size_t index) const;
  double at(std::size_t ix, std::size_t iy) const { return gain[iy * nx() + ix]; }

  // First index of the maximum / minimum in row-major order, so ties resolve
  // to the smallest (y, x).
  std::size_t argmax() const;
  std::size_t argmin() const;
  double max_db() const;
  double min_db() const;
};

GainMap gain_map(const PathStateInfo& psi, const MovementRegion& region);

// CSV `x_m,y_m,gain_db`, rows ordered by y then x, 9 significant digits.
void write_gain_csv(const GainMap& map, std::ostream& out);

}  // namespace masim
