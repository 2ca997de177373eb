#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "masim/channel.hpp"
#include "masim/covariance.hpp"
#include "masim/signals.hpp"

namespace masim {

// Q position-indexed OFDM captures plus everything needed to equalize them.
struct SoundingCampaign {
  std::vector<IQRecord> records;
  OfdmNumerology numerology;  // num_symbols = symbols present in each record
  SymbolGrid tx_symbols;      // b_{i,m}
  CVec sys_response;          // H_sys[i]; empty means all ones
  double tx_power = 1.0;
  double carrier_hz = 0.0;

  void validate() const;
  std::vector<Position> positions() const;
};

struct PathPeak {
  Direction direction;
  double value = 0.0;          // spectrum value where the path was detected
  double prominence_db = 0.0;  // value relative to the global maximum, <= 0
};

struct EstimatedPath {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  double amplitude = 0.0;
  double delay_s = 0.0;
  double prominence_db = 0.0;
};

struct EstimatedPsi {
  std::vector<EstimatedPath> paths;  // descending amplitude
  double carrier_hz = 0.0;
  double grid_step_deg = 0.5;
  std::vector<std::string> warnings;

  PathStateInfo to_psi(double large_scale_gain = 1.0) const;
};

struct PdsMatrix {
  std::size_t num_positions = 0;
  std::size_t num_bins = 0;
  double delay_step_s = 0.0;  // tau_d
  std::vector<double> values; // values[q * num_bins + n]

  double at(std::size_t q, std::size_t n) const { return values[q * num_bins + n]; }
};

struct EstimatorOptions {
  AngleGrid grid;
  std::size_t max_paths = 8;
  double prominence_db = 20.0;
  int refine_window_steps = 4;
  int refine_sweeps = 3;
  std::size_t delay_oversample = 8;
  double min_peak_to_median_db = 20.0;
  double sys_response_floor = 1e-6;
  std::size_t guard_taps = 64;
};

// Calibrated per-subcarrier response, Y / (sqrt(p_t) b H_sys) up to the FFT
// scale. Subcarriers with |H_sys| <= floor are zeroed and flagged.
struct Calibration {
  CVec values;
  std::vector<std::uint8_t> usable;
};

Calibration calibrate(std::span<const cplx> raw, std::span<const cplx> sys_response,
                      double floor = 1e-6);

// Equalized channel frequency responses, one row per record (record order).
struct ChannelResponses {
  Eigen::MatrixXcd h;                 // Q x I
  std::vector<std::uint8_t> usable;   // per subcarrier
};

ChannelResponses equalize(const SoundingCampaign& campaign, double sys_floor = 1e-6);

PasMatrix compute_pas(const SoundingCampaign& campaign, const AngleGrid& grid);

// Literal 8-neighbour local maxima of a PAS surface within prominence_db of
// the global maximum, strongest first, at most max_paths.
std::vector<PathPeak> find_peaks(const PasMatrix& pas, std::size_t max_paths,
                                 double prominence_db);

// Successive detection on the covariance: take the spectrum maximum, project
// its steering vector out of R, repeat until the maximum falls prominence_db
// below the first one; then re-search each path in a local window with the
// other paths projected out.
std::vector<PathPeak> find_paths(const SpatialCovariance& cov, const EstimatorOptions& options,
                                 PasMatrix* first_pas = nullptr);

// w_l = (1/sqrt(Q)) (I - F_l (F_l^H F_l)^{-1} F_l^H) f_l, with F_l the steering
// vectors of all paths but `target`.
CVec zf_weights(std::span<const Direction> paths, std::size_t target,
                std::span<const Position> positions, double wavelength_m);

EstimatedPsi estimate_delay_amplitude(const ChannelResponses& responses,
                                      const SoundingCampaign& campaign,
                                      std::span<const CVec> weights,
                                      std::span<const PathPeak> paths,
                                      const EstimatorOptions& options = {});

PdsMatrix compute_pds(const ChannelResponses& responses, const OfdmNumerology& numerology);
PdsMatrix compute_pds(const SoundingCampaign& campaign);

struct EstimationResult {
  EstimatedPsi psi;
  PasMatrix pas;
  std::vector<PathPeak> peaks;
};

EstimationResult estimate_psi(const SoundingCampaign& campaign, const EstimatorOptions& options = {});

}  // namespace masim
