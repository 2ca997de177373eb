#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "masim/campaign.hpp"
#include "masim/compare.hpp"
#include "masim/config.hpp"
#include "masim/export.hpp"
#include "masim/iq_io.hpp"
#include "masim/pipeline.hpp"

using namespace masim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ScenarioConfig small_27() {
  auto c = ScenarioConfig::preset_27_5ghz();
  c.power_region = {2e-3, 2e-3, 0.5e-3, 0.5e-3, 25e-3, 25e-3};
  c.sounding_region = {24e-3, 24e-3, 2e-3, 2e-3, 25e-3, 25e-3};
  c.samples_per_measurement = 256;
  c.noise_power_rel = 0.01;
  return c;
}

std::vector<std::pair<std::string, std::string>> tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).string(), read_file(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("config JSON round trip and strictness") {
  for (const auto* name : {"27.5ghz", "3.5ghz"}) {
    const auto c = ScenarioConfig::preset(name);
    const auto text = config_to_json(c);
    CHECK(config_to_json(config_from_json(text)) == text);
    CHECK(scenario_hash(config_from_json(text)) == scenario_hash(c));
  }
  CHECK_THROWS_AS(config_from_json(R"({"carrier_ghz": 3.5})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"refine": {"step_mm": 1}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"power_region": {"x_extent": 1}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json("{not json"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"preset": "60ghz"})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"bandwidth_hz": 100e6})"), ValidationError);

  const auto c = config_from_json(R"({"preset": "3.5ghz", "master_seed": 9})");
  CHECK(c.carrier_hz == 3.5e9);
  CHECK(c.master_seed == 9);
  CHECK(scenario_hash(c) != scenario_hash(ScenarioConfig::preset_3_5ghz()));
}

TEST_CASE("preset fidelity") {
  const auto j27 = nlohmann::json::parse(config_to_json(ScenarioConfig::preset_27_5ghz()));
  const auto j35 = nlohmann::json::parse(config_to_json(ScenarioConfig::preset_3_5ghz()));
  for (const auto& j : {j27, j35}) {
    CHECK(j["numerology"]["subcarrier_spacing_hz"] == 120e3);
    CHECK(j["numerology"]["num_subcarriers"] == 3168);
    CHECK(j["numerology"]["num_symbols"] == 100);
    CHECK(j["refine"]["min_step_m"] == 0.05e-3);
    CHECK(j["tx_position_m"][1] == 1.3);
  }
  CHECK(j27["carrier_hz"] == 27.5e9);
  CHECK(2.0 * j27["power_region"]["x_extent_m"].get<double>() == 50e-3);
  CHECK(2.0 * j27["power_region"]["y_extent_m"].get<double>() == 50e-3);
  CHECK(j27["power_region"]["x_step_m"] == 0.5e-3);
  CHECK(2.0 * j27["sounding_region"]["x_extent_m"].get<double>() == 50e-3);
  CHECK(j27["sounding_region"]["x_step_m"] == 1e-3);

  CHECK(j35["carrier_hz"] == 3.5e9);
  CHECK(2.0 * j35["power_region"]["x_extent_m"].get<double>() == 500e-3);
  CHECK(j35["power_region"]["y_extent_m"] == 0.0);
  CHECK(j35["power_region"]["x_step_m"] == 1e-3);
  CHECK(2.0 * j35["sounding_region"]["y_extent_m"].get<double>() == 500e-3);
  CHECK(j35["sounding_region"]["x_step_m"] == 5e-3);
  CHECK(j35["sounding_region"]["center_x_m"] == j35["power_region"]["center_x_m"]);
  CHECK(j35["sounding_region"]["center_y_m"] == j35["power_region"]["center_y_m"]);
}

TEST_CASE("campaign record counts") {
  TempDir tmp("masim_test_counts");
  auto one = ScenarioConfig::preset_27_5ghz();
  one.power_region = {0.0, 0.0, 1e-3, 1e-3, 0.01, 0.01};
  const auto m1 = synthesize_campaign(one, reference_psi_27_5ghz(), CampaignMode::kTone, tmp.path / "one");
  REQUIRE(m1.records.size() == 1);
  const auto l1 = load_campaign(tmp.path / "one");
  CHECK(l1.records[0].samples.size() == 4096);

  auto line = ScenarioConfig::preset_3_5ghz();
  line.samples_per_measurement = 32;
  const auto ml = synthesize_campaign(line, reference_psi_3_5ghz(), CampaignMode::kTone, tmp.path / "line");
  REQUIRE(ml.records.size() == 501);
  for (std::size_t i = 1; i < ml.records.size(); ++i) {
    CHECK(ml.records[i].position.x_m > ml.records[i - 1].position.x_m);
  }
  CHECK(ml.records.front().position.x_m == 0.0);
  CHECK(ml.records.back().position.x_m == doctest::Approx(0.5).epsilon(1e-12));

  auto grid = ScenarioConfig::preset_27_5ghz();
  grid.samples_per_measurement = 8;
  CHECK(synthesize_tone_records(grid, reference_psi_27_5ghz()).size() == 101 * 101);
  CHECK(grid.sounding_region.size() == 51 * 51);
}

TEST_CASE("manifest integrity") {
  TempDir tmp("masim_test_manifest");
  auto cfg = small_27();
  const auto dir = tmp.path / "c";
  synthesize_campaign(cfg, reference_psi_27_5ghz(), CampaignMode::kTone, dir);
  CHECK_NOTHROW(load_campaign(dir));

  // a record moved to the wrong position
  auto rec = read_iq_file(dir / "rec_000003.maiq");
  auto moved = rec;
  moved.position.x_m += 1e-3;
  write_iq_file(moved, dir / "rec_000003.maiq");
  CHECK_THROWS_AS(load_campaign(dir), ValidationError);
  write_iq_file(rec, dir / "rec_000003.maiq");

  // an edited config no longer matches the hash
  auto text = read_file(dir / "manifest.json");
  auto edited = text;
  const auto at = edited.find("\"master_seed\": 1");
  REQUIRE(at != std::string::npos);
  edited.replace(at, 16, "\"master_seed\": 2");
  write_file_atomic(dir / "manifest.json", edited);
  CHECK_THROWS_AS(load_campaign(dir), ValidationError);
  write_file_atomic(dir / "manifest.json", text);

  fs::remove(dir / "rec_000001.maiq");
  CHECK_THROWS(load_campaign(dir));
  CHECK_THROWS_AS(synthesize_campaign(cfg, reference_psi_3_5ghz(), CampaignMode::kTone, tmp.path / "x"),
                  ValidationError);
}

TEST_CASE("campaign files are a pure function of config and seed") {
  TempDir tmp("masim_test_det");
  auto cfg = small_27();
  cfg.sounding_region = {2e-3, 2e-3, 1e-3, 1e-3, 25e-3, 25e-3};
  for (const char* d : {"a", "b"}) {
    synthesize_campaign(cfg, reference_psi_27_5ghz(), CampaignMode::kOfdm, tmp.path / d);
  }
  CHECK(tree(tmp.path / "a") == tree(tmp.path / "b"));

  // reloading gives the in-memory campaign back
  auto loaded = load_campaign(tmp.path / "a").to_sounding();
  const auto mem = synthesize_sounding(cfg, reference_psi_27_5ghz());
  REQUIRE(loaded.records.size() == mem.records.size());
  for (std::size_t q = 0; q < mem.records.size(); ++q) {
    CHECK(loaded.records[q].samples == mem.records[q].samples);
  }
  CHECK(loaded.tx_symbols.values == mem.tx_symbols.values);
}

TEST_CASE("compare_maps") {
  auto cfg = ScenarioConfig::preset_3_5ghz();
  cfg.samples_per_measurement = 512;
  cfg.tx_power_rel = 2.0;
  auto psi = reference_psi_3_5ghz();
  psi.large_scale_gain = 0.25;
  const auto gm = gain_map(psi, cfg.power_region);

  const auto self = compare_maps(to_samples(gm), to_samples(gm));
  CHECK(self.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.offset_db == 0.0);
  CHECK(self.displacement_x_steps == 0);
  CHECK(self.displacement_y_steps == 0);

  const auto pm = measure_tone_sweep(cfg, psi);
  const auto fac = compare_maps(to_samples(pm), to_samples(gm));
  CHECK(std::abs(fac.correlation - 1.0) < 1e-9);
  CHECK(fac.offset_db == doctest::Approx(10.0 * std::log10(0.25 * 2.0)).epsilon(1e-9));
  CHECK(fac.max_abs_residual_db < 1e-9);

  cfg.tx_power_rel = 1.0;
  psi.large_scale_gain = 1.0;
  cfg.noise_power_rel = 0.01;
  const auto noisy = compare_maps(to_samples(measure_tone_sweep(cfg, psi)), to_samples(gain_map(psi, cfg.power_region)));
  CHECK(noisy.correlation >= 0.95);

  auto shifted = to_samples(gm);
  shifted.positions[3].x_m += 1e-4;
  CHECK_THROWS_AS(compare_maps(shifted, to_samples(gm)), ValidationError);

  TempDir tmp("masim_test_csv");
  {
    std::ofstream os(tmp.path / "g.csv");
    write_gain_csv(gm, os);
  }
  const auto back = read_map_csv(tmp.path / "g.csv");
  const auto rt = compare_maps(back, to_samples(gm));
  CHECK(rt.max_abs_residual_db < 1e-6);
}

TEST_CASE("PSI JSON") {
  const auto psi = reference_psi_3_5ghz();
  const auto back = psi_from_json(psi_to_json(psi));
  REQUIRE(back.paths.size() == 5);
  for (std::size_t l = 0; l < 5; ++l) {
    CHECK(back.paths[l].azimuth_deg == psi.paths[l].azimuth_deg);
    CHECK(back.paths[l].delay_s == doctest::Approx(psi.paths[l].delay_s).epsilon(1e-12));
  }
  CHECK_THROWS_AS(psi_from_json(R"({"carrier_hz": 3.5e9, "paths": [], "extra": 1})"), ValidationError);
  CHECK_THROWS_AS(psi_from_json(R"({"carrier_hz": 3.5e9, "paths": [{"elevation_deg": 100,
      "azimuth_deg": 0, "amplitude": 1, "delay_ns": 1}]})"), ValidationError);

  EstimatedPsi est;
  est.carrier_hz = 27.5e9;
  est.paths = {{3.0, 2.0, 0.9, 22.7e-9, 0.0}};
  est.warnings = {"w"};
  const auto e2 = estimated_psi_from_json(estimated_psi_to_json(est));
  CHECK(e2.paths[0].delay_s == doctest::Approx(22.7e-9).epsilon(1e-12));
  CHECK(e2.warnings == est.warnings);
}

TEST_CASE("pipeline") {
  TempDir tmp("masim_test_pipeline");
  const auto cfg = small_27();
  const auto psi = reference_psi_27_5ghz();

  const std::vector<Stage> me{Stage::kMeasure, Stage::kExport};
  const auto r1 = run_pipeline(cfg, psi, me, tmp.path);
  REQUIRE(r1.stages.size() == 2);
  CHECK(fs::exists(r1.export_dir / "power_map.csv"));
  CHECK(read_file(r1.export_dir / "power_map.csv").rfind("x_m,y_m,power_dbr\n", 0) == 0);
  const auto r2 = run_pipeline(cfg, psi, me, tmp.path);
  for (const auto& s : r2.stages) CHECK(s.cache_hit);

  const auto full = parse_stages("sound,estimate,measure,optimize,export");
  const auto r3 = run_pipeline(cfg, psi, full, tmp.path);
  CHECK(r3.stages.size() == 5);
  const auto est = estimated_psi_from_json(read_file(r3.export_dir / "estimated_psi.json"));
  REQUIRE(est.paths.size() == 3);
  for (const auto& p : psi.paths) {
    bool hit = false;
    for (const auto& e : est.paths) {
      hit |= std::abs(e.elevation_deg - p.elevation_deg) <= 0.5 && std::abs(e.azimuth_deg - p.azimuth_deg) <= 0.5;
    }
    CHECK(hit);
  }
  CHECK(fs::exists(r3.export_dir / "move_result.json"));

  // estimate alone pulls in sound
  const std::vector<Stage> only_est{Stage::kEstimate};
  CHECK(run_pipeline(cfg, psi, only_est, tmp.path).stages.size() == 2);

  CHECK_THROWS_AS(parse_stages("sound,bake"), ValidationError);
  auto wrong = reference_psi_3_5ghz();
  const std::vector<Stage> sound{Stage::kSound};
  try {
    run_pipeline(cfg, wrong, sound, tmp.path / "bad");
    FAIL("expected a stage failure");
  } catch (const StageError& e) {
    CHECK(e.stage() == Stage::kSound);
    CHECK(std::string(e.what()).find("sound") != std::string::npos);
  }
}
