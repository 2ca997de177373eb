#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "masim/config.hpp"
#include "masim/estimator.hpp"
#include "masim/powermeter.hpp"
#include "masim/signals.hpp"

namespace masim {

enum class CampaignMode { kTone, kOfdm };

const char* to_string(CampaignMode mode);
CampaignMode campaign_mode_from_string(const std::string& s);

struct ManifestRecord {
  std::size_t index = 0;
  std::string file;
  Position position;
  std::uint64_t seed = 0;
};

struct CampaignManifest {
  static constexpr const char* kFormat = "masim-campaign";
  static constexpr int kVersion = 1;

  CampaignMode mode = CampaignMode::kTone;
  std::string scenario_hash;
  std::string created;  // ISO 8601 UTC
  double sample_interval_s = 0.0;
  std::size_t num_samples = 0;
  double carrier_hz = 0.0;
  double tx_power_rel = 1.0;
  double tone_f0_hz = 0.0;           // tone mode
  OfdmNumerology numerology;         // ofdm mode; num_symbols as synthesized
  std::string tx_symbols_file;       // ofdm mode
  std::string sys_response_file;     // ofdm mode
  ScenarioConfig config;
  std::vector<ManifestRecord> records;  // measurement order
};

// Records of the tone pipeline over cfg.power_region, in grid order.
std::vector<IQRecord> synthesize_tone_records(const ScenarioConfig& cfg, const PathStateInfo& psi);

// Same records as synthesize_tone_records, each measured as soon as it is
// generated instead of being kept.
PowerMap measure_tone_sweep(const ScenarioConfig& cfg, const PathStateInfo& psi);

// OFDM sounding over cfg.sounding_region, held in memory. `sys_response`
// empty means an ideal (all-ones) system response.
SoundingCampaign synthesize_sounding(const ScenarioConfig& cfg, const PathStateInfo& psi,
                                     const CVec& sys_response = {});

// Writes one MAIQ file per position plus manifest.json into `dir`.
CampaignManifest synthesize_campaign(const ScenarioConfig& cfg, const PathStateInfo& psi,
                                     CampaignMode mode, const std::filesystem::path& dir,
                                     const CVec& sys_response = {});

struct LoadedCampaign {
  CampaignManifest manifest;
  std::vector<IQRecord> records;
  SymbolGrid tx_symbols;  // ofdm only
  CVec sys_response;      // ofdm only

  SoundingCampaign to_sounding() &&;
};

// Validates the manifest against the embedded config and every record header
// against its manifest entry.
LoadedCampaign load_campaign(const std::filesystem::path& dir);

std::string manifest_to_json(const CampaignManifest& m);
CampaignManifest manifest_from_json(const std::string& text);

// Creation stamp: SOURCE_DATE_EPOCH when set, else the Unix epoch.
std::string creation_timestamp();

}  // namespace masim
