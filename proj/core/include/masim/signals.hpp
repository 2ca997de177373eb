#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "masim/channel.hpp"
#include "masim/types.hpp"

namespace masim {

// OFDM numerology of the sounding waveform. Subcarrier i (0 <= i < I) sits at
// baseband frequency i * delta_f and the waveform is sampled at I * delta_f,
// so one symbol body is exactly I samples.
struct OfdmNumerology {
  double subcarrier_spacing_hz = 120e3;
  std::size_t num_subcarriers = 3168;
  std::size_t num_symbols = 100;
  double cp_duration_s = 1.0 / (8.0 * 120e3);

  // Throws unless the numerology is consistent and I * delta_f <= bandwidth.
  void validate(double bandwidth_hz) const;

  double symbol_duration_s() const { return 1.0 / subcarrier_spacing_hz + cp_duration_s; }
  double sample_interval_s() const;
  // Delay resolution tau_d = 1 / (I * delta_f).
  double delay_step_s() const { return sample_interval_s(); }
  std::size_t cp_samples() const;
  std::size_t samples_per_symbol() const { return num_subcarriers + cp_samples(); }
  std::size_t frame_samples() const { return num_symbols * samples_per_symbol(); }
};

// Modulation symbols b_{i,m}, index m * I + i.
struct SymbolGrid {
  std::size_t num_subcarriers = 0;
  std::size_t num_symbols = 0;
  CVec values;

  cplx at(std::size_t i, std::size_t m) const { return values[m * num_subcarriers + i]; }
};

struct OfdmFrame {
  CVec samples;
  SymbolGrid symbols;
};

// One capture at one MA position.
struct IQRecord {
  Position position;
  CVec samples;
  double sample_interval_s = 0.0;
  std::uint64_t seed = 0;
};

struct NoiseSpec {
  double power = 0.0;  // sigma^2 per complex sample
  double bandwidth_hz = 400e6;
};

// splitmix64 mix of (master seed, index): per-position RNG streams that do
// not depend on the order in which positions are generated.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

// exp(j 2 pi f0 n T), n = 0..N-1. Requires |f0| < 1 / (2T).
CVec gen_tone(double f0_hz, std::size_t num_samples, double sample_interval_s);

// QPSK with E|b|^2 = 1/I, deterministic in `seed`.
SymbolGrid qpsk_symbols(std::size_t num_subcarriers, std::size_t num_symbols, std::uint64_t seed);

// Time-domain CP-OFDM frame for the given symbols; unit average power when
// sum_i |b_{i,m}|^2 = 1.
OfdmFrame gen_ofdm(const OfdmNumerology& numerology, SymbolGrid symbols);
OfdmFrame gen_ofdm(const OfdmNumerology& numerology, std::uint64_t symbol_seed);

// Narrowband (flat) channel of the tone pipeline: y = h(r) sqrt(p_t) x. Path
// delays enter only through the carrier phase inside h(r).
CVec apply_channel_narrowband(std::span<const cplx> tx, const PathStateInfo& psi, Position r,
                              double tx_power = 1.0);

// Wideband channel on an arbitrary buffer: sum_l h_l(r) sqrt(p_t) x(t - tau_l),
// with each delay applied as a linear phase over the whole buffer's DFT
// (circular; exact for integer-sample delays). Throws if a delay is not
// shorter than the buffer.
CVec apply_channel(std::span<const cplx> tx, const PathStateInfo& psi, Position r,
                   double sample_interval_s, double tx_power = 1.0);

// Per-symbol frequency-domain channel for a CP-OFDM frame: subcarrier i of
// every symbol is multiplied by sqrt(p_t) H_sys[i] sum_l h_l(r) exp(-j 2 pi i df tau_l),
// then the CP is rebuilt. `sys_response` may be empty (all ones).
CVec apply_channel_ofdm(std::span<const cplx> tx, const OfdmNumerology& numerology,
                        const PathStateInfo& psi, Position r, double tx_power = 1.0,
                        std::span<const cplx> sys_response = {});

// Frequency response of the planted channel at r on the OFDM subcarriers,
// sum_l h_l(r) exp(-j 2 pi i df tau_l).
CVec channel_frequency_response(const PathStateInfo& psi, Position r,
                                const OfdmNumerology& numerology);

// Adds i.i.d. circularly-symmetric complex Gaussian noise of variance sigma^2.
CVec add_noise(std::span<const cplx> x, const NoiseSpec& spec, std::uint64_t seed);

}  // namespace masim
