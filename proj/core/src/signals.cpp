#include "masim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "masim/fft.hpp"

namespace masim {

void OfdmNumerology::validate(double bandwidth_hz) const {
  if (!(subcarrier_spacing_hz > 0.0)) throw ValidationError("subcarrier spacing must be > 0");
  if (num_subcarriers == 0) throw ValidationError("number of subcarriers must be >= 1");
  if (num_symbols == 0) throw ValidationError("number of OFDM symbols must be >= 1");
  if (!(cp_duration_s >= 0.0)) throw ValidationError("cyclic prefix duration must be >= 0");
  const double occupied = static_cast<double>(num_subcarriers) * subcarrier_spacing_hz;
  if (occupied > bandwidth_hz * (1.0 + 1e-12)) {
    throw ValidationError("I * delta_f = " + std::to_string(occupied) +
                          " Hz exceeds the bandwidth " + std::to_string(bandwidth_hz) + " Hz");
  }
  if (cp_samples() > num_subcarriers) throw ValidationError("cyclic prefix longer than a symbol");
}

double OfdmNumerology::sample_interval_s() const {
  return 1.0 / (static_cast<double>(num_subcarriers) * subcarrier_spacing_hz);
}

std::size_t OfdmNumerology::cp_samples() const {
  return static_cast<std::size_t>(std::llround(cp_duration_s / sample_interval_s()));
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CVec gen_tone(double f0_hz, std::size_t num_samples, double sample_interval_s) {
  if (!(sample_interval_s > 0.0)) throw ValidationError("sample interval must be > 0");
  if (!(std::abs(f0_hz) * 2.0 * sample_interval_s < 1.0)) {
    throw ValidationError("tone frequency violates |f0| < 1/(2T) (aliasing)");
  }
  CVec out(num_samples);
  // Cycles per sample; reduce n*f0*T modulo 1 to keep phase accurate for long records.
  const double cps = f0_hz * sample_interval_s;
  for (std::size_t n = 0; n < num_samples; ++n) {
    double cycles = cps * static_cast<double>(n);
    cycles -= std::floor(cycles);
    out[n] = std::polar(1.0, 2.0 * kPi * cycles);
  }
  return out;
}

SymbolGrid qpsk_symbols(std::size_t num_subcarriers, std::size_t num_symbols, std::uint64_t seed) {
  SymbolGrid grid{num_subcarriers, num_symbols, CVec(num_subcarriers * num_symbols)};
  std::mt19937_64 rng(seed);
  const double a = 1.0 / std::sqrt(2.0 * static_cast<double>(num_subcarriers));
  std::uint64_t bits = 0;
  int left = 0;
  for (auto& b : grid.values) {
    if (left < 2) {
      bits = rng();
      left = 64;
    }
    const double re = (bits & 1U) ? -a : a;
    const double im = (bits & 2U) ? -a : a;
    bits >>= 2;
    left -= 2;
    b = {re, im};
  }
  return grid;
}

OfdmFrame gen_ofdm(const OfdmNumerology& numerology, SymbolGrid symbols) {
  const std::size_t n_sc = numerology.num_subcarriers;
  const std::size_t n_sym = numerology.num_symbols;
  if (symbols.num_subcarriers != n_sc || symbols.num_symbols != n_sym ||
      symbols.values.size() != n_sc * n_sym) {
    throw ValidationError("symbol grid does not match the OFDM numerology");
  }
  const std::size_t cp = numerology.cp_samples();
  const std::size_t sps = n_sc + cp;

  OfdmFrame frame;
  frame.samples.resize(n_sym * sps);
  FftPlan inverse(n_sc, FftPlan::Direction::kInverse);
  CVec body(n_sc);
  for (std::size_t m = 0; m < n_sym; ++m) {
    std::span<const cplx> bm(symbols.values.data() + m * n_sc, n_sc);
    inverse.execute(bm, body);
    // s[n] = sum_i b_i exp(j 2 pi i n / I), i.e. I times the normalized inverse DFT.
    for (auto& v : body) v *= static_cast<double>(n_sc);
    auto* dst = frame.samples.data() + m * sps;
    std::copy(body.end() - static_cast<std::ptrdiff_t>(cp), body.end(), dst);
    std::copy(body.begin(), body.end(), dst + cp);
  }
  frame.symbols = std::move(symbols);
  return frame;
}

OfdmFrame gen_ofdm(const OfdmNumerology& numerology, std::uint64_t symbol_seed) {
  return gen_ofdm(numerology, qpsk_symbols(numerology.num_subcarriers, numerology.num_symbols,
                                           symbol_seed));
}

CVec apply_channel_narrowband(std::span<const cplx> tx, const PathStateInfo& psi, Position r,
                              double tx_power) {
  const cplx g = channel_response(psi, r) * std::sqrt(tx_power);
  CVec out(tx.size());
  std::transform(tx.begin(), tx.end(), out.begin(), [g](cplx v) { return g * v; });
  return out;
}

CVec apply_channel(std::span<const cplx> tx, const PathStateInfo& psi, Position r,
                   double sample_interval_s, double tx_power) {
  if (!(sample_interval_s > 0.0)) throw ValidationError("sample interval must be > 0");
  const std::size_t n = tx.size();
  if (n == 0) return {};
  const double buffer_s = static_cast<double>(n) * sample_interval_s;
  for (const auto& p : psi.paths) {
    if (p.delay_s >= buffer_s) {
      throw ValidationError("path delay " + std::to_string(p.delay_s) +
                            " s exceeds the buffer length " + std::to_string(buffer_s) + " s");
    }
  }
  const CVec spectrum = fft(tx);
  CVec shaped(n, cplx{0.0, 0.0});
  const double amp = std::sqrt(tx_power);
  for (std::size_t l = 0; l < psi.paths.size(); ++l) {
    const cplx hl = path_coefficient(psi, l, r) * amp;
    const double shift = psi.paths[l].delay_s / sample_interval_s;  // in samples
    for (std::size_t k = 0; k < n; ++k) {
      // Signed frequency index for band-limited fractional delays.
      const double kk = (k < (n + 1) / 2) ? static_cast<double>(k)
                                          : static_cast<double>(k) - static_cast<double>(n);
      double cycles = kk * shift / static_cast<double>(n);
      cycles -= std::floor(cycles);
      shaped[k] += hl * spectrum[k] * std::polar(1.0, -2.0 * kPi * cycles);
    }
  }
  return ifft(shaped);
}

CVec channel_frequency_response(const PathStateInfo& psi, Position r,
                                const OfdmNumerology& numerology) {
  const std::size_t n_sc = numerology.num_subcarriers;
  CVec response(n_sc, cplx{0.0, 0.0});
  for (std::size_t l = 0; l < psi.paths.size(); ++l) {
    const cplx hl = path_coefficient(psi, l, r);
    const double cycles_per_sc = numerology.subcarrier_spacing_hz * psi.paths[l].delay_s;
    for (std::size_t i = 0; i < n_sc; ++i) {
      double cycles = cycles_per_sc * static_cast<double>(i);
      cycles -= std::floor(cycles);
      response[i] += hl * std::polar(1.0, -2.0 * kPi * cycles);
    }
  }
  return response;
}

CVec apply_channel_ofdm(std::span<const cplx> tx, const OfdmNumerology& numerology,
                        const PathStateInfo& psi, Position r, double tx_power,
                        std::span<const cplx> sys_response) {
  const std::size_t n_sc = numerology.num_subcarriers;
  const std::size_t cp = numerology.cp_samples();
  const std::size_t sps = n_sc + cp;
  if (tx.size() % sps != 0) {
    throw ValidationError("OFDM buffer length is not a whole number of symbols");
  }
  if (!sys_response.empty() && sys_response.size() != n_sc) {
    throw ValidationError("system response length must equal the number of subcarriers");
  }
  const double cp_s = static_cast<double>(cp) * numerology.sample_interval_s();
  for (const auto& p : psi.paths) {
    if (p.delay_s > cp_s) {
      throw ValidationError("path delay exceeds the cyclic prefix; per-symbol delay would wrap");
    }
  }

  CVec response = channel_frequency_response(psi, r, numerology);
  const double amp = std::sqrt(tx_power);
  for (std::size_t i = 0; i < n_sc; ++i) {
    response[i] *= amp;
    if (!sys_response.empty()) response[i] *= sys_response[i];
  }

  FftPlan forward(n_sc, FftPlan::Direction::kForward);
  FftPlan inverse(n_sc, FftPlan::Direction::kInverse);
  CVec out(tx.size());
  CVec work(n_sc);
  for (std::size_t s = 0; s < tx.size() / sps; ++s) {
    forward.execute(tx.subspan(s * sps + cp, n_sc), work);
    for (std::size_t i = 0; i < n_sc; ++i) work[i] *= response[i];
    inverse.execute(work, work);
    auto* dst = out.data() + s * sps;
    std::copy(work.end() - static_cast<std::ptrdiff_t>(cp), work.end(), dst);
    std::copy(work.begin(), work.end(), dst + cp);
  }
  return out;
}

CVec add_noise(std::span<const cplx> x, const NoiseSpec& spec, std::uint64_t seed) {
  if (!(spec.power >= 0.0)) throw ValidationError("noise power must be >= 0");
  CVec out(x.begin(), x.end());
  if (spec.power == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(spec.power / 2.0));
  for (auto& v : out) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v += cplx{re, im};
  }
  return out;
}

}  // namespace masim
