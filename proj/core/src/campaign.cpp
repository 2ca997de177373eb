#include "masim/campaign.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <system_error>

#include "json.hpp"
#include "masim/iq_io.hpp"

namespace masim {

using nlohmann::json;

namespace {

// Stream index reserved for the OFDM symbol draw; record q uses index q.
constexpr std::uint64_t kSymbolStream = ~std::uint64_t{0};

std::string record_name(std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rec_%06zu.maiq", q);
  return buf;
}

IQRecord tone_record(const ScenarioConfig& cfg, const PathStateInfo& psi, const CVec& tone,
                     Position r, std::size_t q) {
  IQRecord rec;
  rec.position = r;
  rec.sample_interval_s = cfg.tone_sample_interval_s();
  rec.seed = derive_seed(cfg.master_seed, q);
  rec.samples = add_noise(apply_channel_narrowband(tone, psi, r, cfg.tx_power_rel),
                          {cfg.noise_power_rel, cfg.bandwidth_hz}, rec.seed);
  return rec;
}

IQRecord ofdm_record(const ScenarioConfig& cfg, const PathStateInfo& psi, const OfdmFrame& frame,
                     const OfdmNumerology& num, const CVec& sys, Position r, std::size_t q) {
  IQRecord rec;
  rec.position = r;
  rec.sample_interval_s = num.sample_interval_s();
  rec.seed = derive_seed(cfg.master_seed, q);
  rec.samples = add_noise(apply_channel_ofdm(frame.samples, num, psi, r, cfg.tx_power_rel, sys),
                          {cfg.noise_power_rel, cfg.bandwidth_hz}, rec.seed);
  return rec;
}

json numerology_json(const OfdmNumerology& n) {
  return {{"subcarrier_spacing_hz", n.subcarrier_spacing_hz},
          {"num_subcarriers", n.num_subcarriers},
          {"num_symbols", n.num_symbols},
          {"cp_duration_s", n.cp_duration_s}};
}

}  // namespace

const char* to_string(CampaignMode mode) { return mode == CampaignMode::kTone ? "tone" : "ofdm"; }

CampaignMode campaign_mode_from_string(const std::string& s) {
  if (s == "tone") return CampaignMode::kTone;
  if (s == "ofdm") return CampaignMode::kOfdm;
  throw ValidationError("campaign mode must be 'tone' or 'ofdm', got '" + s + "'");
}

std::string creation_timestamp() {
  std::time_t t = 0;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end != sde && *end == '\0' && v >= 0) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<IQRecord> synthesize_tone_records(const ScenarioConfig& cfg, const PathStateInfo& psi) {
  cfg.validate();
  psi.validate();
  const CVec tone = gen_tone(cfg.tone_f0_hz, cfg.samples_per_measurement, cfg.tone_sample_interval_s());
  const auto grid = cfg.power_region.grid();
  std::vector<IQRecord> out;
  out.reserve(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) out.push_back(tone_record(cfg, psi, tone, grid[q], q));
  return out;
}

PowerMap measure_tone_sweep(const ScenarioConfig& cfg, const PathStateInfo& psi) {
  cfg.validate();
  psi.validate();
  const CVec tone = gen_tone(cfg.tone_f0_hz, cfg.samples_per_measurement, cfg.tone_sample_interval_s());
  const auto grid = cfg.power_region.grid();
  PowerMeter meter(cfg.effective_fft_size());
  PowerMap map;
  map.points.reserve(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    map.points.push_back(meter.measure(tone_record(cfg, psi, tone, grid[q], q), cfg.tone_f0_hz));
  }
  return map;
}

SoundingCampaign synthesize_sounding(const ScenarioConfig& cfg, const PathStateInfo& psi,
                                     const CVec& sys_response) {
  cfg.validate();
  psi.validate();
  SoundingCampaign c;
  c.numerology = cfg.sounding_numerology();
  c.carrier_hz = psi.carrier_hz;
  c.tx_power = cfg.tx_power_rel;
  c.sys_response = sys_response;
  OfdmFrame frame = gen_ofdm(c.numerology, derive_seed(cfg.master_seed, kSymbolStream));
  const auto grid = cfg.sounding_region.grid();
  c.records.reserve(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    c.records.push_back(ofdm_record(cfg, psi, frame, c.numerology, sys_response, grid[q], q));
  }
  c.tx_symbols = std::move(frame.symbols);
  return c;
}

CampaignManifest synthesize_campaign(const ScenarioConfig& cfg, const PathStateInfo& psi,
                                     CampaignMode mode, const std::filesystem::path& dir,
                                     const CVec& sys_response) {
  cfg.validate();
  psi.validate();
  if (std::abs(psi.carrier_hz - cfg.carrier_hz) > 1e-6 * cfg.carrier_hz) {
    throw ValidationError("PSI carrier does not match the scenario carrier");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  CampaignManifest m;
  m.mode = mode;
  m.config = cfg;
  m.scenario_hash = scenario_hash(cfg);
  m.created = creation_timestamp();
  m.carrier_hz = cfg.carrier_hz;
  m.tx_power_rel = cfg.tx_power_rel;

  if (mode == CampaignMode::kTone) {
    const CVec tone =
        gen_tone(cfg.tone_f0_hz, cfg.samples_per_measurement, cfg.tone_sample_interval_s());
    const auto grid = cfg.power_region.grid();
    m.sample_interval_s = cfg.tone_sample_interval_s();
    m.num_samples = cfg.samples_per_measurement;
    m.tone_f0_hz = cfg.tone_f0_hz;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const IQRecord rec = tone_record(cfg, psi, tone, grid[q], q);
      m.records.push_back({q, record_name(q), rec.position, rec.seed});
      write_iq_file(rec, dir / m.records.back().file);
    }
  } else {
    const OfdmNumerology num = cfg.sounding_numerology();
    if (!sys_response.empty() && sys_response.size() != num.num_subcarriers) {
      throw ValidationError("system response length must equal the number of subcarriers");
    }
    const std::uint64_t symbol_seed = derive_seed(cfg.master_seed, kSymbolStream);
    const OfdmFrame frame = gen_ofdm(num, symbol_seed);
    const auto grid = cfg.sounding_region.grid();
    m.sample_interval_s = num.sample_interval_s();
    m.num_samples = num.frame_samples();
    m.numerology = num;
    m.tx_symbols_file = "tx_symbols.maiq";
    m.sys_response_file = "sys_response.maiq";
    write_iq_file({{0.0, 0.0}, frame.symbols.values, m.sample_interval_s, symbol_seed},
                  dir / m.tx_symbols_file);
    const CVec sys = sys_response.empty() ? CVec(num.num_subcarriers, cplx{1.0, 0.0}) : sys_response;
    write_iq_file({{0.0, 0.0}, sys, m.sample_interval_s, 0}, dir / m.sys_response_file);
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const IQRecord rec = ofdm_record(cfg, psi, frame, num, sys_response, grid[q], q);
      m.records.push_back({q, record_name(q), rec.position, rec.seed});
      write_iq_file(rec, dir / m.records.back().file);
    }
  }
  write_file_atomic(dir / "manifest.json", manifest_to_json(m));
  return m;
}

std::string manifest_to_json(const CampaignManifest& m) {
  json j;
  j["format"] = CampaignManifest::kFormat;
  j["version"] = CampaignManifest::kVersion;
  j["mode"] = to_string(m.mode);
  j["scenario_hash"] = m.scenario_hash;
  j["created"] = m.created;
  j["sample_interval_s"] = m.sample_interval_s;
  j["num_samples"] = m.num_samples;
  j["carrier_hz"] = m.carrier_hz;
  j["tx_power_rel"] = m.tx_power_rel;
  if (m.mode == CampaignMode::kTone) {
    j["tone_f0_hz"] = m.tone_f0_hz;
  } else {
    j["numerology"] = numerology_json(m.numerology);
    j["tx_symbols_file"] = m.tx_symbols_file;
    j["sys_response_file"] = m.sys_response_file;
  }
  j["config"] = json::parse(config_to_json(m.config));
  json recs = json::array();
  for (const auto& r : m.records) {
    recs.push_back({{"index", r.index}, {"file", r.file}, {"x_m", r.position.x_m},
                    {"y_m", r.position.y_m}, {"seed", r.seed}});
  }
  j["records"] = std::move(recs);
  return j.dump(2) + "\n";
}

CampaignManifest manifest_from_json(const std::string& text) {
  CampaignManifest m;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != CampaignManifest::kFormat) {
      throw ValidationError("manifest format is not " + std::string(CampaignManifest::kFormat));
    }
    if (j.at("version").get<int>() != CampaignManifest::kVersion) {
      throw ValidationError("unsupported manifest version");
    }
    m.mode = campaign_mode_from_string(j.at("mode").get<std::string>());
    m.scenario_hash = j.at("scenario_hash").get<std::string>();
    m.created = j.at("created").get<std::string>();
    m.sample_interval_s = j.at("sample_interval_s").get<double>();
    m.num_samples = j.at("num_samples").get<std::size_t>();
    m.carrier_hz = j.at("carrier_hz").get<double>();
    m.tx_power_rel = j.at("tx_power_rel").get<double>();
    if (m.mode == CampaignMode::kTone) {
      m.tone_f0_hz = j.at("tone_f0_hz").get<double>();
    } else {
      const auto& n = j.at("numerology");
      m.numerology.subcarrier_spacing_hz = n.at("subcarrier_spacing_hz").get<double>();
      m.numerology.num_subcarriers = n.at("num_subcarriers").get<std::size_t>();
      m.numerology.num_symbols = n.at("num_symbols").get<std::size_t>();
      m.numerology.cp_duration_s = n.at("cp_duration_s").get<double>();
      m.tx_symbols_file = j.at("tx_symbols_file").get<std::string>();
      m.sys_response_file = j.at("sys_response_file").get<std::string>();
    }
    m.config = config_from_json(j.at("config").dump());
    for (const auto& r : j.at("records")) {
      m.records.push_back({r.at("index").get<std::size_t>(), r.at("file").get<std::string>(),
                           {r.at("x_m").get<double>(), r.at("y_m").get<double>()},
                           r.at("seed").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

SoundingCampaign LoadedCampaign::to_sounding() && {
  if (manifest.mode != CampaignMode::kOfdm) {
    throw ValidationError("campaign is not an OFDM sounding campaign");
  }
  SoundingCampaign c;
  c.records = std::move(records);
  c.numerology = manifest.numerology;
  c.tx_symbols = std::move(tx_symbols);
  c.sys_response = std::move(sys_response);
  c.tx_power = manifest.tx_power_rel;
  c.carrier_hz = manifest.carrier_hz;
  return c;
}

LoadedCampaign load_campaign(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  LoadedCampaign lc;
  try {
    lc.manifest = manifest_from_json(read_file(manifest_path));
  } catch (const ValidationError& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
  const auto& m = lc.manifest;
  if (scenario_hash(m.config) != m.scenario_hash) {
    throw ValidationError(manifest_path.string() + ": scenario hash does not match the embedded config");
  }
  const auto& region = m.mode == CampaignMode::kTone ? m.config.power_region : m.config.sounding_region;
  const auto grid = region.grid();
  if (m.records.size() != grid.size()) {
    throw ValidationError(manifest_path.string() + ": manifest lists " +
                          std::to_string(m.records.size()) + " records, region has " +
                          std::to_string(grid.size()) + " positions");
  }
  lc.records.reserve(m.records.size());
  for (std::size_t q = 0; q < m.records.size(); ++q) {
    const auto& e = m.records[q];
    const auto path = dir / e.file;
    IQRecord rec = read_iq_file(path);
    if (e.index != q) throw ValidationError(manifest_path.string() + ": record indices out of order");
    if (!(rec.position == e.position) || !(e.position == grid[q])) {
      throw ValidationError(path.string() + ": position differs from the manifest / region grid");
    }
    if (rec.seed != e.seed) throw ValidationError(path.string() + ": seed differs from the manifest");
    if (rec.samples.size() != m.num_samples || rec.sample_interval_s != m.sample_interval_s) {
      throw ValidationError(path.string() + ": sample count or interval differs from the manifest");
    }
    lc.records.push_back(std::move(rec));
  }
  if (m.mode == CampaignMode::kOfdm) {
    const auto& n = m.numerology;
    const IQRecord sym = read_iq_file(dir / m.tx_symbols_file);
    if (sym.samples.size() != n.num_subcarriers * n.num_symbols) {
      throw ValidationError((dir / m.tx_symbols_file).string() + ": symbol count mismatch");
    }
    lc.tx_symbols = {n.num_subcarriers, n.num_symbols, sym.samples};
    const IQRecord sys = read_iq_file(dir / m.sys_response_file);
    if (sys.samples.size() != n.num_subcarriers) {
      throw ValidationError((dir / m.sys_response_file).string() + ": subcarrier count mismatch");
    }
    lc.sys_response = sys.samples;
  }
  return lc;
}

}  // namespace masim
