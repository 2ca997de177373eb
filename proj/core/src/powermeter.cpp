#include "masim/powermeter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace masim {

CVec zero_pad(std::span<const cplx> x, std::size_t fft_size) {
  if (fft_size < x.size()) {
    throw ValidationError("FFT size " + std::to_string(fft_size) + " is smaller than the record (" +
                          std::to_string(x.size()) + " samples)");
  }
  CVec out(fft_size, cplx{0.0, 0.0});
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

std::size_t default_fft_size(std::size_t num_samples) { return next_pow2(8 * num_samples); }

std::size_t tone_bin(double f0_hz, double sample_interval_s, std::size_t fft_size) {
  if (!(std::abs(f0_hz) * 2.0 * sample_interval_s < 1.0)) {
    throw ValidationError("tone frequency " + std::to_string(f0_hz) +
                          " Hz is outside the Nyquist band");
  }
  const auto n_s = static_cast<long long>(fft_size);
  long long k = std::llround(static_cast<double>(fft_size) * sample_interval_s * f0_hz);
  k %= n_s;
  if (k < 0) k += n_s;
  return static_cast<std::size_t>(k);
}

PowerMeter::PowerMeter(std::size_t fft_size)
    : plan_(fft_size, FftPlan::Direction::kForward), work_(fft_size) {}

PowerMeasurement PowerMeter::measure(const IQRecord& record, double f0_hz) {
  const std::size_t n = record.samples.size();
  if (n == 0) throw ValidationError("empty IQ record");
  const std::size_t n_s = plan_.size();
  if (n_s < n) {
    throw ValidationError("FFT size " + std::to_string(n_s) + " is smaller than the record (" +
                          std::to_string(n) + " samples)");
  }
  PowerMeasurement m;
  m.position = record.position;
  m.fft_size = n_s;
  m.num_samples = n;
  m.peak_bin = tone_bin(f0_hz, record.sample_interval_s, n_s);

  // Rectangular window: the record as-is, zero padded to N_s.
  std::copy(record.samples.begin(), record.samples.end(), work_.begin());
  std::fill(work_.begin() + static_cast<std::ptrdiff_t>(n), work_.end(), cplx{0.0, 0.0});
  plan_.execute(work_, work_);

  const double nn = static_cast<double>(n);
  m.power_linear = std::norm(work_[m.peak_bin]) / (nn * nn);
  m.power_db = to_db(m.power_linear);
  return m;
}

PowerMeasurement measure_power(const IQRecord& record, double f0_hz, std::size_t fft_size) {
  if (fft_size == 0) fft_size = default_fft_size(record.samples.size());
  PowerMeter meter(fft_size);
  return meter.measure(record, f0_hz);
}

PowerMap sweep_measure(std::span<const IQRecord> records, double f0_hz, std::size_t fft_size) {
  PowerMap map;
  if (records.empty()) return map;
  const auto& first = records.front();
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].samples.size() != first.samples.size() ||
        records[i].sample_interval_s != first.sample_interval_s) {
      throw ValidationError("record " + std::to_string(i) +
                            " does not share the sample count / interval of record 0");
    }
  }
  if (fft_size == 0) fft_size = default_fft_size(first.samples.size());
  PowerMeter meter(fft_size);
  map.points.reserve(records.size());
  for (const auto& r : records) map.points.push_back(meter.measure(r, f0_hz));
  return map;
}

void write_power_csv(const PowerMap& map, std::ostream& out) {
  out << "x_m,y_m,power_dbr\n";
  char line[128];
  for (const auto& p : map.points) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", p.position.x_m, p.position.y_m,
                  p.power_db);
    out << line;
  }
}

}  // namespace masim
