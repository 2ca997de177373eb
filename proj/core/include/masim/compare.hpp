#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "masim/channel.hpp"
#include "masim/powermeter.hpp"

namespace masim {

// Position-labelled dB values, any order.
struct MapSamples {
  std::vector<Position> positions;
  std::vector<double> values_db;
};

MapSamples to_samples(const GainMap& map);
MapSamples to_samples(const PowerMap& map);

// Reads a three-column CSV `x_m,y_m,<value>` as written by the gain / power
// exporters.
MapSamples read_map_csv(const std::filesystem::path& path);

struct CompareReport {
  std::size_t num_points = 0;
  double correlation = 0.0;  // Pearson, on dB values
  double offset_db = 0.0;    // mean(a - b)
  double rms_residual_db = 0.0;
  double max_abs_residual_db = 0.0;
  std::vector<double> residuals_db;  // a - b - offset, sorted (y, x) order
  Position argmax_a;
  Position argmax_b;
  long displacement_x_steps = 0;
  long displacement_y_steps = 0;
};

// Both maps must cover the same grid. Points are matched after sorting by
// (y, x); ties in the argmax resolve to the smallest (y, x).
CompareReport compare_maps(const MapSamples& a, const MapSamples& b);

std::string compare_report_to_json(const CompareReport& r);

}  // namespace masim
