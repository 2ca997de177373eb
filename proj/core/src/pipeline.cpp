#include "masim/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "masim/campaign.hpp"
#include "masim/compare.hpp"
#include "masim/estimator.hpp"
#include "masim/export.hpp"
#include "masim/iq_io.hpp"
#include "masim/mover.hpp"
#include "masim/powermeter.hpp"

namespace masim {

namespace fs = std::filesystem;

namespace {

constexpr Stage kOrder[] = {Stage::kSound, Stage::kEstimate, Stage::kMeasure, Stage::kOptimize,
                            Stage::kExport};

// Seed stream for refinement measurements, apart from the per-record streams.
constexpr std::uint64_t kMoverStream = std::uint64_t{1} << 40;

std::string stage_key(Stage s, const std::string& inputs) {
  return hex64(fnv1a64(std::string(to_string(s)) + "\n" + inputs));
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return std::move(os).str();
}

EstimatorOptions estimator_options(const ScenarioConfig& cfg) {
  EstimatorOptions o;
  o.grid.elevation_step_deg = cfg.angle_step_deg;
  o.grid.azimuth_step_deg = cfg.angle_step_deg;
  o.max_paths = cfg.max_paths;
  o.prominence_db = cfg.prominence_db;
  return o;
}

}  // namespace

const char* to_string(Stage s) {
  switch (s) {
    case Stage::kSound: return "sound";
    case Stage::kEstimate: return "estimate";
    case Stage::kMeasure: return "measure";
    case Stage::kOptimize: return "optimize";
    case Stage::kExport: return "export";
  }
  return "?";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : kOrder) {
    if (s == to_string(st)) return st;
  }
  throw ValidationError("unknown stage '" + s + "' (expected sound, estimate, measure, optimize, export)");
}

std::vector<Stage> parse_stages(const std::string& list) {
  std::vector<Stage> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(stage_from_string(item));
  }
  if (out.empty()) throw ValidationError("no pipeline stages given");
  return out;
}

PipelineResult run_pipeline(const ScenarioConfig& cfg, const PathStateInfo& psi,
                            std::span<const Stage> stages, const fs::path& out_dir) {
  cfg.validate();
  psi.validate();
  std::set<Stage> want(stages.begin(), stages.end());
  if (want.count(Stage::kEstimate)) want.insert(Stage::kSound);

  const std::string cfg_json = config_to_json(cfg);
  const std::string psi_json = psi_to_json(psi);
  const std::string base = cfg_json + psi_json;

  PipelineResult result;
  std::string sound_key, estimate_key, measure_key, optimize_key;
  fs::path sound_dir, estimate_dir, measure_dir, optimize_dir;

  for (Stage st : kOrder) {
    if (!want.count(st)) continue;
    std::string key;
    switch (st) {
      case Stage::kSound: key = sound_key = stage_key(st, base); break;
      case Stage::kEstimate: key = estimate_key = stage_key(st, base + sound_key); break;
      case Stage::kMeasure: key = measure_key = stage_key(st, base); break;
      case Stage::kOptimize: key = optimize_key = stage_key(st, base + estimate_key); break;
      case Stage::kExport:
        key = stage_key(st, base + sound_key + estimate_key + measure_key + optimize_key);
        break;
    }
    const fs::path dir = out_dir / (std::string(to_string(st)) + "-" + key);
    StageOutcome outcome{st, dir, false};
    try {
      if (fs::exists(dir / "complete")) {
        outcome.cache_hit = true;
      } else {
        std::error_code ec;
        fs::remove_all(dir, ec);
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

        switch (st) {
          case Stage::kSound:
            synthesize_campaign(cfg, psi, CampaignMode::kOfdm, dir / "campaign");
            break;
          case Stage::kEstimate: {
            SoundingCampaign camp = load_campaign(sound_dir / "campaign").to_sounding();
            const auto est = estimate_psi(camp, estimator_options(cfg));
            write_text(dir / "estimated_psi.json", estimated_psi_to_json(est.psi));
            write_text(dir / "pas.csv", render([&](std::ostream& os) { write_pas_csv(est.pas, os); }));
            const PdsMatrix pds = compute_pds(camp);
            const std::size_t bins = camp.numerology.cp_samples() + 1;
            write_text(dir / "pds.csv",
                       render([&](std::ostream& os) { write_pds_csv(pds, os, bins); }));
            break;
          }
          case Stage::kMeasure: {
            const PowerMap pm = measure_tone_sweep(cfg, psi);
            const GainMap gm = gain_map(psi, cfg.power_region);
            write_text(dir / "power_map.csv", render([&](std::ostream& os) { write_power_csv(pm, os); }));
            write_text(dir / "gain_map.csv", render([&](std::ostream& os) { write_gain_csv(gm, os); }));
            write_text(dir / "compare.json",
                       compare_report_to_json(compare_maps(to_samples(pm), to_samples(gm))));
            break;
          }
          case Stage::kOptimize: {
            PathStateInfo start_psi = psi;
            if (!estimate_dir.empty()) {
              start_psi = estimated_psi_from_json(read_file(estimate_dir / "estimated_psi.json"))
                              .to_psi(psi.large_scale_gain);
              if (start_psi.paths.empty()) throw ValidationError("estimated PSI has no paths");
            }
            ToneMeasurementConfig tm;
            tm.f0_hz = cfg.tone_f0_hz;
            tm.num_samples = cfg.samples_per_measurement;
            tm.sample_interval_s = cfg.tone_sample_interval_s();
            tm.fft_size = cfg.effective_fft_size();
            tm.noise_power = cfg.noise_power_rel;
            tm.tx_power = cfg.tx_power_rel;
            tm.averaging = cfg.refine.averaging;
            SimulatedMeasurementChannel channel(psi, cfg.power_region, tm,
                                                derive_seed(cfg.master_seed, kMoverStream));
            MovePlan plan;
            plan.refine_step_m = cfg.refine.step_m;
            plan.min_step_m = cfg.refine.min_step_m;
            plan.budget = cfg.refine.budget;
            const MoveResult res = two_stage_optimize(start_psi, cfg.power_region, channel, plan);
            const BruteForceBest oracle = brute_force_best(psi, cfg.power_region);
            write_text(dir / "move_result.json",
                       move_result_to_json(res, coarse_position(start_psi, cfg.power_region), &oracle));
            break;
          }
          case Stage::kExport: {
            const GainMap gm = gain_map(psi, cfg.power_region);
            write_text(dir / "gain_map.csv", render([&](std::ostream& os) { write_gain_csv(gm, os); }));
            auto copy = [&](const fs::path& from, const char* name) {
              if (!from.empty() && fs::exists(from / name)) write_text(dir / name, read_file(from / name));
            };
            copy(estimate_dir, "estimated_psi.json");
            copy(estimate_dir, "pas.csv");
            copy(estimate_dir, "pds.csv");
            copy(measure_dir, "power_map.csv");
            copy(measure_dir, "compare.json");
            copy(optimize_dir, "move_result.json");
            write_text(dir / "config.json", cfg_json);
            write_text(dir / "psi.json", psi_json);
            result.export_dir = dir;
            break;
          }
        }
        write_text(dir / "complete", key + "\n");
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(st, e.what());
    }
    if (st == Stage::kExport) result.export_dir = dir;
    switch (st) {
      case Stage::kSound: sound_dir = dir; break;
      case Stage::kEstimate: estimate_dir = dir; break;
      case Stage::kMeasure: measure_dir = dir; break;
      case Stage::kOptimize: optimize_dir = dir; break;
      case Stage::kExport: break;
    }
    result.stages.push_back(outcome);
  }
  return result;
}

}  // namespace masim
