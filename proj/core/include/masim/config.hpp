#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "masim/channel.hpp"
#include "masim/signals.hpp"

namespace masim {

struct RefineSettings {
  double step_m = 1e-3;
  double min_step_m = 0.05e-3;
  std::size_t budget = 50;
  std::size_t averaging = 1;
};

struct ScenarioConfig {
  double carrier_hz = 27.5e9;
  double bandwidth_hz = 400e6;
  double tx_power_rel = 1.0;
  std::array<double, 3> tx_position_m{0.0, 1.3, 6.8};  // metadata only
  MovementRegion power_region;
  MovementRegion sounding_region;
  OfdmNumerology numerology;
  std::size_t sounding_symbols = 1;  // OFDM symbols synthesized per sounding position
  double noise_power_rel = 0.0;      // sigma^2 per complex sample
  double tone_f0_hz = 12.5e6;
  std::size_t samples_per_measurement = 4096;
  std::size_t fft_size = 0;  // 0: next power of two >= 8N
  std::uint64_t master_seed = 1;
  double angle_step_deg = 0.5;
  std::size_t max_paths = 8;
  double prominence_db = 20.0;
  RefineSettings refine;

  void validate() const;

  double tone_sample_interval_s() const { return 1.0 / bandwidth_hz; }
  std::size_t effective_fft_size() const;
  // Numerology actually synthesized: num_symbols = sounding_symbols.
  OfdmNumerology sounding_numerology() const;

  // 27.5 GHz: 50 x 50 mm at 0.5 mm (power), 1 mm (sounding).
  // 3.5 GHz: 500 mm line at 1 mm (power), 500 x 500 mm at 5 mm (sounding).
  // Regions start at x = 0; the 3.5 GHz sounding square shares the line's center.
  static ScenarioConfig preset_27_5ghz();
  static ScenarioConfig preset_3_5ghz();
  // "27.5ghz" or "3.5ghz".
  static ScenarioConfig preset(std::string_view name);
};

// JSON with unit-suffixed field names. An optional "preset" key selects the
// base values; every other key overrides it. Unknown keys are rejected.
ScenarioConfig config_from_json(std::string_view text);
std::string config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
// FNV-1a of the canonical config serialization.
std::string scenario_hash(const ScenarioConfig& cfg);

// Planted reference channels used by the presets' examples.
PathStateInfo reference_psi_27_5ghz();
PathStateInfo reference_psi_3_5ghz();

}  // namespace masim
