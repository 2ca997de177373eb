#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "masim/fft.hpp"
#include "masim/signals.hpp"

namespace masim {

struct PowerMeasurement {
  Position position;
  double power_linear = 0.0;  // p_hat = |Y[k_hat]|^2 / N^2
  double power_db = 0.0;      // dBr
  std::size_t fft_size = 0;   // N_s
  std::size_t num_samples = 0;
  std::size_t peak_bin = 0;   // k_hat, reduced modulo N_s for negative tones
};

// Copies x and appends zeros up to fft_size. Throws if fft_size < x.size().
CVec zero_pad(std::span<const cplx> x, std::size_t fft_size);

// Next power of two >= 8N.
std::size_t default_fft_size(std::size_t num_samples);

// k_hat = round(N_s T f0) mod N_s. Throws if |f0| >= 1/(2T).
std::size_t tone_bin(double f0_hz, double sample_interval_s, std::size_t fft_size);

// Holds one FFT plan so a sweep does not re-plan per record.
class PowerMeter {
 public:
  explicit PowerMeter(std::size_t fft_size);

  std::size_t fft_size() const { return plan_.size(); }
  PowerMeasurement measure(const IQRecord& record, double f0_hz);

 private:
  FftPlan plan_;
  CVec work_;
};

// fft_size == 0 selects default_fft_size(N).
PowerMeasurement measure_power(const IQRecord& record, double f0_hz, std::size_t fft_size = 0);

struct PowerMap {
  std::vector<PowerMeasurement> points;  // manifest order
};

// All records must share T and N.
PowerMap sweep_measure(std::span<const IQRecord> records, double f0_hz, std::size_t fft_size = 0);

// CSV `x_m,y_m,power_dbr`, in map order.
void write_power_csv(const PowerMap& map, std::ostream& out);

}  // namespace masim
