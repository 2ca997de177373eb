#include "masim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace masim {

double wavelength_m(double carrier_hz) {
  if (!(carrier_hz > 0.0)) throw ValidationError("carrier frequency must be positive");
  return kSpeedOfLight / carrier_hz;
}

double to_db(double linear, double floor_db) {
  if (!(linear > 0.0)) return floor_db;
  return std::max(10.0 * std::log10(linear), floor_db);
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

void PathStateInfo::validate(bool normalized) const {
  if (paths.empty()) throw ValidationError("PSI must contain at least one path");
  if (!(carrier_hz > 0.0)) throw ValidationError("PSI carrier_hz must be positive");
  if (!(large_scale_gain >= 0.0)) throw ValidationError("large-scale gain must be >= 0");
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const auto& p = paths[l];
    const std::string tag = "path " + std::to_string(l) + ": ";
    if (!(p.elevation_deg >= -90.0 && p.elevation_deg <= 90.0)) {
      throw ValidationError(tag + "elevation outside [-90, 90] deg");
    }
    if (!(p.azimuth_deg >= -90.0 && p.azimuth_deg <= 90.0)) {
      throw ValidationError(tag + "azimuth outside [-90, 90] deg");
    }
    if (!(p.amplitude >= 0.0)) throw ValidationError(tag + "amplitude must be >= 0");
    if (!(p.delay_s >= 0.0)) throw ValidationError(tag + "delay must be >= 0");
  }
  if (normalized) {
    const double s = sum_power();
    if (s < 0.99 || s > 1.01) {
      throw ValidationError("normalized PSI requires sum of squared amplitudes in [0.99, 1.01]");
    }
  }
}

double PathStateInfo::wavelength_m() const { return masim::wavelength_m(carrier_hz); }

double PathStateInfo::sum_amplitude() const {
  double s = 0.0;
  for (const auto& p : paths) s += p.amplitude;
  return s;
}

double PathStateInfo::sum_power() const {
  double s = 0.0;
  for (const auto& p : paths) s += p.amplitude * p.amplitude;
  return s;
}

namespace {

// Points center + k*step for k = -n..n, n = floor(extent / step). Computing
// each point from the center keeps it exact instead of accumulating steps.
std::vector<double> centered_axis(double center, double extent, double step) {
  const auto n = static_cast<long>(std::floor(extent / step + 1e-9));
  std::vector<double> axis;
  axis.reserve(static_cast<std::size_t>(2 * n + 1));
  for (long k = -n; k <= n; ++k) {
    double v = center + static_cast<double>(k) * step;
    // Snap round-off residue around the coordinate origin.
    if (std::abs(v) < 1e-12 * std::max(1.0, std::abs(center) + extent)) v = 0.0;
    axis.push_back(v);
  }
  return axis;
}

}  // namespace

void MovementRegion::validate() const {
  if (!(x_extent_m >= 0.0) || !(y_extent_m >= 0.0)) {
    throw ValidationError("movement region extents must be >= 0");
  }
  if (!(x_step_m > 0.0) || !(y_step_m > 0.0)) {
    throw ValidationError("movement region steps must be > 0");
  }
  if (!std::isfinite(center_x_m) || !std::isfinite(center_y_m)) {
    throw ValidationError("movement region center must be finite");
  }
}

std::vector<double> MovementRegion::x_axis() const {
  validate();
  return centered_axis(center_x_m, x_extent_m, x_step_m);
}

std::vector<double> MovementRegion::y_axis() const {
  validate();
  return centered_axis(center_y_m, y_extent_m, y_step_m);
}

std::vector<Position> MovementRegion::grid() const {
  const auto xs = x_axis();
  const auto ys = y_axis();
  std::vector<Position> out;
  out.reserve(xs.size() * ys.size());
  for (double y : ys) {
    for (double x : xs) out.push_back({x, y});
  }
  return out;
}

std::size_t MovementRegion::size() const { return x_axis().size() * y_axis().size(); }

bool MovementRegion::contains(Position p, double tol_m) const {
  return std::abs(p.x_m - center_x_m) <= x_extent_m + tol_m &&
         std::abs(p.y_m - center_y_m) <= y_extent_m + tol_m;
}

Position MovementRegion::clamp(Position p) const {
  return {std::clamp(p.x_m, center_x_m - x_extent_m, center_x_m + x_extent_m),
          std::clamp(p.y_m, center_y_m - y_extent_m, center_y_m + y_extent_m)};
}

double path_distance_delta(const PathComponent& path, Position r) {
  const double theta = deg_to_rad(path.elevation_deg);
  const double phi = deg_to_rad(path.azimuth_deg);
  return r.x_m * std::cos(theta) * std::sin(phi) + r.y_m * std::sin(theta);
}

CVec field_response_vector(const PathStateInfo& psi, Position r, double wavelength) {
  if (!(wavelength > 0.0)) throw ValidationError("wavelength must be positive");
  CVec f;
  f.reserve(psi.paths.size());
  for (const auto& p : psi.paths) {
    f.push_back(std::polar(1.0, 2.0 * kPi * path_distance_delta(p, r) / wavelength));
  }
  return f;
}

namespace {

// Phase of one path at r in cycles: d_l(r)/lambda + f_c tau_l. The carrier
// term is reduced modulo one cycle before combining so that tau*f_c (tens of
// cycles at mmWave) does not swamp the spatial term's precision.
double path_phase_cycles(const PathComponent& p, Position r, double lambda, double fc) {
  const double carrier = fc * p.delay_s;
  return path_distance_delta(p, r) / lambda + (carrier - std::floor(carrier));
}

}  // namespace

cplx path_coefficient(const PathStateInfo& psi, std::size_t l, Position r) {
  const double lambda = psi.wavelength_m();
  const auto& p = psi.paths.at(l);
  return std::sqrt(psi.large_scale_gain) *
         std::polar(p.amplitude, -2.0 * kPi * path_phase_cycles(p, r, lambda, psi.carrier_hz));
}

cplx channel_response(const PathStateInfo& psi, Position r) {
  const double lambda = psi.wavelength_m();
  cplx sum{0.0, 0.0};
  for (const auto& p : psi.paths) {
    sum += std::polar(p.amplitude, -2.0 * kPi * path_phase_cycles(p, r, lambda, psi.carrier_hz));
  }
  return std::sqrt(psi.large_scale_gain) * sum;
}

double small_scale_gain(const PathStateInfo& psi, Position r) {
  const double lambda = psi.wavelength_m();
  cplx sum{0.0, 0.0};
  for (const auto& p : psi.paths) {
    sum += std::polar(p.amplitude, -2.0 * kPi * path_phase_cycles(p, r, lambda, psi.carrier_hz));
  }
  return std::norm(sum);
}

Position GainMap::position(std::size_t index) const {
  return {x_axis_m[index % nx()], y_axis_m[index / nx()]};
}

std::size_t GainMap::argmax() const {
  return static_cast<std::size_t>(std::max_element(gain.begin(), gain.end()) - gain.begin());
}

std::size_t GainMap::argmin() const {
  return static_cast<std::size_t>(std::min_element(gain.begin(), gain.end()) - gain.begin());
}

double GainMap::max_db() const { return to_db(gain[argmax()]); }
double GainMap::min_db() const { return to_db(gain[argmin()]); }

GainMap gain_map(const PathStateInfo& psi, const MovementRegion& region) {
  psi.validate();
  GainMap map;
  map.x_axis_m = region.x_axis();
  map.y_axis_m = region.y_axis();
  map.gain.resize(map.x_axis_m.size() * map.y_axis_m.size());
  for (std::size_t iy = 0; iy < map.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.nx(); ++ix) {
      map.gain[iy * map.nx() + ix] = small_scale_gain(psi, {map.x_axis_m[ix], map.y_axis_m[iy]});
    }
  }
  return map;
}

void write_gain_csv(const GainMap& map, std::ostream& out) {
  out << "x_m,y_m,gain_db\n";
  char line[128];
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto p = map.position(i);
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", p.x_m, p.y_m, to_db(map.gain[i]));
    out << line;
  }
}

}  // namespace masim
