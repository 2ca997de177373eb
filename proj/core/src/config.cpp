#include "masim/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "masim/iq_io.hpp"
#include "masim/powermeter.hpp"
#include "json.hpp"

namespace masim {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ValidationError("unknown field '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

json region_to_json(const MovementRegion& r) {
  return json{{"center_x_m", r.center_x_m}, {"center_y_m", r.center_y_m},
              {"x_extent_m", r.x_extent_m}, {"y_extent_m", r.y_extent_m},
              {"x_step_m", r.x_step_m},     {"y_step_m", r.y_step_m}};
}

void region_from_json(const json& j, MovementRegion& r, const std::string& where) {
  reject_unknown(j, {"center_x_m", "center_y_m", "x_extent_m", "y_extent_m", "x_step_m", "y_step_m"},
                 where);
  read(j, "center_x_m", r.center_x_m, where);
  read(j, "center_y_m", r.center_y_m, where);
  read(j, "x_extent_m", r.x_extent_m, where);
  read(j, "y_extent_m", r.y_extent_m, where);
  read(j, "x_step_m", r.x_step_m, where);
  read(j, "y_step_m", r.y_step_m, where);
}

}  // namespace

std::size_t ScenarioConfig::effective_fft_size() const {
  return fft_size ? fft_size : default_fft_size(samples_per_measurement);
}

OfdmNumerology ScenarioConfig::sounding_numerology() const {
  OfdmNumerology n = numerology;
  n.num_symbols = sounding_symbols;
  return n;
}

void ScenarioConfig::validate() const {
  if (!(carrier_hz > 0.0)) throw ValidationError("carrier_hz must be > 0");
  if (!(bandwidth_hz > 0.0)) throw ValidationError("bandwidth_hz must be > 0");
  if (!(tx_power_rel > 0.0)) throw ValidationError("tx_power_rel must be > 0");
  if (!(noise_power_rel >= 0.0)) throw ValidationError("noise_power_rel must be >= 0");
  power_region.validate();
  sounding_region.validate();
  numerology.validate(bandwidth_hz);
  if (sounding_symbols < 1 || sounding_symbols > numerology.num_symbols) {
    throw ValidationError("sounding_symbols must lie in [1, numerology.num_symbols]");
  }
  if (!(std::abs(tone_f0_hz) < bandwidth_hz / 2.0)) {
    throw ValidationError("tone_f0_hz must satisfy |f0| < bandwidth_hz / 2");
  }
  if (samples_per_measurement < 1) throw ValidationError("samples_per_measurement must be >= 1");
  if (fft_size != 0 && fft_size < samples_per_measurement) {
    throw ValidationError("fft_size must be 0 or >= samples_per_measurement");
  }
  if (!(angle_step_deg > 0.0)) throw ValidationError("angle_step_deg must be > 0");
  const double n = 180.0 / angle_step_deg;
  if (std::abs(n - std::round(n)) > 1e-9 * n) {
    throw ValidationError("angle_step_deg must divide 180");
  }
  if (max_paths < 1) throw ValidationError("max_paths must be >= 1");
  if (!(prominence_db > 0.0)) throw ValidationError("prominence_db must be > 0");
  if (!(refine.step_m > 0.0) || !(refine.min_step_m > 0.0)) {
    throw ValidationError("refine steps must be > 0");
  }
  if (refine.budget < 1) throw ValidationError("refine.budget must be >= 1");
  if (refine.averaging < 1) throw ValidationError("refine.averaging must be >= 1");
}

ScenarioConfig ScenarioConfig::preset_27_5ghz() {
  ScenarioConfig c;
  c.carrier_hz = 27.5e9;
  c.power_region = {25e-3, 25e-3, 0.5e-3, 0.5e-3, 25e-3, 25e-3};
  c.sounding_region = {25e-3, 25e-3, 1e-3, 1e-3, 25e-3, 25e-3};
  return c;
}

ScenarioConfig ScenarioConfig::preset_3_5ghz() {
  ScenarioConfig c;
  c.carrier_hz = 3.5e9;
  c.power_region = {250e-3, 0.0, 1e-3, 1e-3, 250e-3, 0.0};
  c.sounding_region = {250e-3, 250e-3, 5e-3, 5e-3, 250e-3, 0.0};
  c.refine.step_m = 8e-3;
  return c;
}

ScenarioConfig ScenarioConfig::preset(std::string_view name) {
  if (name == "27.5ghz") return preset_27_5ghz();
  if (name == "3.5ghz") return preset_3_5ghz();
  throw ValidationError("unknown preset '" + std::string(name) + "' (expected 27.5ghz or 3.5ghz)");
}

ScenarioConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string where = "config";
  reject_unknown(j,
                 {"preset", "carrier_hz", "bandwidth_hz", "tx_power_rel", "tx_position_m",
                  "power_region", "sounding_region", "numerology", "sounding_symbols",
                  "noise_power_rel", "tone_f0_hz", "samples_per_measurement", "fft_size",
                  "master_seed", "angle_step_deg", "max_paths", "prominence_db", "refine"},
                 where);
  ScenarioConfig c;
  if (j.contains("preset")) c = ScenarioConfig::preset(j.at("preset").get<std::string>());
  read(j, "carrier_hz", c.carrier_hz, where);
  read(j, "bandwidth_hz", c.bandwidth_hz, where);
  read(j, "tx_power_rel", c.tx_power_rel, where);
  read(j, "tx_position_m", c.tx_position_m, where);
  if (j.contains("power_region")) region_from_json(j["power_region"], c.power_region, "power_region");
  if (j.contains("sounding_region")) {
    region_from_json(j["sounding_region"], c.sounding_region, "sounding_region");
  }
  if (j.contains("numerology")) {
    const auto& n = j["numerology"];
    reject_unknown(n, {"subcarrier_spacing_hz", "num_subcarriers", "num_symbols", "cp_duration_s"},
                   "numerology");
    read(n, "subcarrier_spacing_hz", c.numerology.subcarrier_spacing_hz, "numerology");
    read(n, "num_subcarriers", c.numerology.num_subcarriers, "numerology");
    read(n, "num_symbols", c.numerology.num_symbols, "numerology");
    read(n, "cp_duration_s", c.numerology.cp_duration_s, "numerology");
  }
  read(j, "sounding_symbols", c.sounding_symbols, where);
  read(j, "noise_power_rel", c.noise_power_rel, where);
  read(j, "tone_f0_hz", c.tone_f0_hz, where);
  read(j, "samples_per_measurement", c.samples_per_measurement, where);
  read(j, "fft_size", c.fft_size, where);
  read(j, "master_seed", c.master_seed, where);
  read(j, "angle_step_deg", c.angle_step_deg, where);
  read(j, "max_paths", c.max_paths, where);
  read(j, "prominence_db", c.prominence_db, where);
  if (j.contains("refine")) {
    const auto& r = j["refine"];
    reject_unknown(r, {"step_m", "min_step_m", "budget", "averaging"}, "refine");
    read(r, "step_m", c.refine.step_m, "refine");
    read(r, "min_step_m", c.refine.min_step_m, "refine");
    read(r, "budget", c.refine.budget, "refine");
    read(r, "averaging", c.refine.averaging, "refine");
  }
  c.validate();
  return c;
}

std::string config_to_json(const ScenarioConfig& c) {
  json j;
  j["carrier_hz"] = c.carrier_hz;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["tx_power_rel"] = c.tx_power_rel;
  j["tx_position_m"] = c.tx_position_m;
  j["power_region"] = region_to_json(c.power_region);
  j["sounding_region"] = region_to_json(c.sounding_region);
  j["numerology"] = {{"subcarrier_spacing_hz", c.numerology.subcarrier_spacing_hz},
                     {"num_subcarriers", c.numerology.num_subcarriers},
                     {"num_symbols", c.numerology.num_symbols},
                     {"cp_duration_s", c.numerology.cp_duration_s}};
  j["sounding_symbols"] = c.sounding_symbols;
  j["noise_power_rel"] = c.noise_power_rel;
  j["tone_f0_hz"] = c.tone_f0_hz;
  j["samples_per_measurement"] = c.samples_per_measurement;
  j["fft_size"] = c.fft_size;
  j["master_seed"] = c.master_seed;
  j["angle_step_deg"] = c.angle_step_deg;
  j["max_paths"] = c.max_paths;
  j["prominence_db"] = c.prominence_db;
  j["refine"] = {{"step_m", c.refine.step_m},
                 {"min_step_m", c.refine.min_step_m},
                 {"budget", c.refine.budget},
                 {"averaging", c.refine.averaging}};
  return j.dump(2) + "\n";
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string scenario_hash(const ScenarioConfig& cfg) { return hex64(fnv1a64(config_to_json(cfg))); }

PathStateInfo reference_psi_27_5ghz() {
  PathStateInfo psi;
  psi.carrier_hz = 27.5e9;
  psi.paths = {{3.0, 2.0, 0.8886, 22.7e-9},
               {2.5, -48.5, 0.3423, 35.3e-9},
               {2.5, 49.5, 0.3053, 34.8e-9}};
  return psi;
}

PathStateInfo reference_psi_3_5ghz() {
  PathStateInfo psi;
  psi.carrier_hz = 3.5e9;
  psi.paths = {{-0.5, 49.5, 0.6284, 34.8e-9},
               {2.0, 2.0, 0.6075, 22.6e-9},
               {1.0, -47.0, 0.4128, 34.8e-9},
               {15.5, 51.5, 0.1798, 36.7e-9},
               {14.0, -52.0, 0.1673, 40.5e-9}};
  return psi;
}

}  // namespace masim
