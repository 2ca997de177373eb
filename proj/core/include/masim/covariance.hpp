#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "masim/signals.hpp"
#include "masim/types.hpp"

namespace masim {

struct Direction {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

// Search grid for the angular spectrum. Both axes run min..max inclusive.
struct AngleGrid {
  double elevation_step_deg = 0.5;
  double azimuth_step_deg = 0.5;
  double elevation_min_deg = -90.0;
  double elevation_max_deg = 90.0;
  double azimuth_min_deg = -90.0;
  double azimuth_max_deg = 90.0;

  void validate() const;
  std::vector<double> elevations() const;
  std::vector<double> azimuths() const;
};

// Power angular spectrum, values[e * num_azimuths + a].
struct PasMatrix {
  AngleGrid grid;
  std::vector<double> elevations_deg;
  std::vector<double> azimuths_deg;
  std::vector<double> values;

  std::size_t num_elevations() const { return elevations_deg.size(); }
  std::size_t num_azimuths() const { return azimuths_deg.size(); }
  double at(std::size_t e, std::size_t a) const { return values[e * num_azimuths() + a]; }
  double max_value() const;
};

// Element q = exp(-j 2 pi d(theta, phi, r_q) / lambda).
CVec array_response(double theta_deg, double phi_deg, std::span<const Position> positions,
                    double wavelength_m);

// Sample covariance R = sum_n y[n] y[n]^H of the Q position-indexed captures.
//
// Positions are kept in canonical order (sorted by x, then y) so the result does
// not depend on record order. When they form a product set xs x ys the index is
// p = ix * ny + iy and the angular spectrum is evaluated separably.
class SpatialCovariance {
 public:
  SpatialCovariance(std::vector<Position> positions, Eigen::MatrixXcd r, double wavelength_m);

  static SpatialCovariance from_records(std::span<const IQRecord> records, double wavelength_m);

  const std::vector<Position>& positions() const { return positions_; }
  const Eigen::MatrixXcd& matrix() const { return r_; }
  double wavelength_m() const { return wavelength_; }
  std::size_t size() const { return positions_.size(); }
  bool is_lattice() const { return !xs_.empty(); }

  CVec steering(Direction d) const;
  Eigen::MatrixXcd steering_matrix(std::span<const Direction> dirs) const;

  // f^H R f over the grid.
  PasMatrix pas(const AngleGrid& grid) const;

  // P R P with P the orthogonal projector off span{f(d) : d in dirs}.
  SpatialCovariance deflated(std::span<const Direction> dirs) const;

  // (P f)^H R (P f) for each candidate, P as above (identity when `project_out`
  // is empty).
  std::vector<double> projected_power(std::span<const Direction> candidates,
                                      std::span<const Direction> project_out) const;

 private:
  PasMatrix pas_separable(const AngleGrid& grid) const;
  PasMatrix pas_generic(const AngleGrid& grid) const;

  std::vector<Position> positions_;
  Eigen::MatrixXcd r_;
  double wavelength_ = 0.0;
  std::vector<double> xs_;  // empty unless lattice
  std::vector<double> ys_;
};

}  // namespace masim
