// masim: command line front end for synthesis, measurement, estimation and
// antenna position optimization.
//
// Exit codes: 0 success, 2 invalid input, 3 stage / runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "masim/campaign.hpp"
#include "masim/compare.hpp"
#include "masim/config.hpp"
#include "masim/estimator.hpp"
#include "masim/export.hpp"
#include "masim/iq_io.hpp"
#include "masim/mover.hpp"
#include "masim/pipeline.hpp"
#include "masim/powermeter.hpp"

namespace fs = std::filesystem;
using namespace masim;

namespace {

struct Globals {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

ScenarioConfig resolve_config(const Globals& g) {
  ScenarioConfig cfg = g.config.empty()
                           ? (g.preset.empty() ? ScenarioConfig::preset_27_5ghz()
                                               : ScenarioConfig::preset(g.preset))
                           : load_config(g.config);
  if (!g.config.empty() && !g.preset.empty()) {
    throw ValidationError("--config and --preset are mutually exclusive");
  }
  if (g.seed) cfg.master_seed = *g.seed;
  cfg.validate();
  return cfg;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return p;
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / p;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_file_atomic(path, std::move(os).str());
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

int main(int argc, char** argv) {
  CLI::App app{"Movable-antenna channel simulator and measurement toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Scenario config JSON");
  app.add_option("--preset", g.preset, "Built-in scenario: 27.5ghz or 3.5ghz");
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Synthesize a campaign and the simulated gain map");
  std::string sim_psi, sim_mode = "tone";
  sim->add_option("--psi", sim_psi, "Planted PSI JSON")->required();
  sim->add_option("--mode", sim_mode, "tone or ofdm")->capture_default_str();

  // sound
  auto* snd = app.add_subcommand("sound", "Synthesize an OFDM sounding campaign");
  std::string snd_psi;
  snd->add_option("--psi", snd_psi, "Planted PSI JSON")->required();

  // measure
  auto* mea = app.add_subcommand("measure", "Measure tone power over a campaign");
  std::string mea_campaign, mea_out = "power_map.csv";
  std::optional<double> mea_f0;
  std::size_t mea_fft = 0;
  mea->add_option("--campaign", mea_campaign, "Tone campaign directory")->required();
  mea->add_option("--f0", mea_f0, "Tone frequency in Hz (default: from manifest)");
  mea->add_option("--fft-size", mea_fft, "FFT size N_s (0: next power of two >= 8N)");
  mea->add_option("--out", mea_out, "PowerMap CSV")->capture_default_str();

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate PSI from an OFDM sounding campaign");
  std::string est_campaign, est_out = "estimated_psi.json";
  est->add_option("--campaign", est_campaign, "Sounding campaign directory")->required();
  est->add_option("--out", est_out, "EstimatedPsi JSON")->capture_default_str();

  // optimize
  auto* opt = app.add_subcommand("optimize", "Coarse positioning from a PSI, then refinement");
  std::string opt_psi, opt_region, opt_truth, opt_out = "move_result.json";
  std::optional<std::size_t> opt_budget;
  opt->add_option("--psi", opt_psi, "(Estimated) PSI JSON driving the coarse stage")->required();
  opt->add_option("--region", opt_region, "Config JSON whose power_region is searched");
  opt->add_option("--truth", opt_truth, "PSI of the simulated measured channel (default: --psi)");
  opt->add_option("--budget", opt_budget, "Refinement measurement budget");
  opt->add_option("--out", opt_out, "MoveResult JSON")->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Write PAS and PDS CSVs of a sounding campaign");
  std::string exp_campaign, exp_pas = "pas.csv", exp_pds = "pds.csv";
  std::size_t exp_bins = 0;
  exp->add_option("--campaign", exp_campaign, "Sounding campaign directory")->required();
  exp->add_option("--pas", exp_pas, "PAS CSV")->capture_default_str();
  exp->add_option("--pds", exp_pds, "PDS CSV")->capture_default_str();
  exp->add_option("--pds-bins", exp_bins, "Delay bins per position (0: CP length + 1)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare two gain / power map CSVs");
  std::string cmp_a, cmp_b, cmp_out;
  cmp->add_option("--a", cmp_a, "First map CSV")->required();
  cmp->add_option("--b", cmp_b, "Second map CSV")->required();
  cmp->add_option("--out", cmp_out, "Report JSON (default: stdout)");

  // pipeline
  auto* pip = app.add_subcommand("pipeline", "Run pipeline stages with cached intermediates");
  std::string pip_psi, pip_stages = "sound,estimate,measure,optimize,export";
  pip->add_option("--psi", pip_psi, "Planted PSI JSON")->required();
  pip->add_option("--stages", pip_stages, "Comma-separated stages")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      const ScenarioConfig cfg = resolve_config(g);
      const PathStateInfo psi = load_psi(sim_psi);
      const CampaignMode mode = campaign_mode_from_string(sim_mode);
      const auto m = synthesize_campaign(cfg, psi, mode, out_path(g, "campaign"));
      const auto& region = mode == CampaignMode::kTone ? cfg.power_region : cfg.sounding_region;
      const GainMap gm = gain_map(psi, region);
      write_with(out_path(g, "gain_map.csv"), [&](std::ostream& os) { write_gain_csv(gm, os); });
      std::printf("%zu records, gain max %.3f dB min %.3f dB\n", m.records.size(), gm.max_db(),
                  gm.min_db());
    } else if (snd->parsed()) {
      const ScenarioConfig cfg = resolve_config(g);
      const auto m = synthesize_campaign(cfg, load_psi(snd_psi), CampaignMode::kOfdm,
                                         out_path(g, "campaign"));
      std::printf("%zu sounding records\n", m.records.size());
    } else if (mea->parsed()) {
      const LoadedCampaign lc = load_campaign(mea_campaign);
      if (lc.manifest.mode != CampaignMode::kTone) {
        throw ValidationError("measure needs a tone campaign");
      }
      const PowerMap pm = sweep_measure(lc.records, mea_f0.value_or(lc.manifest.tone_f0_hz), mea_fft);
      write_with(out_path(g, mea_out), [&](std::ostream& os) { write_power_csv(pm, os); });
      std::printf("%zu measurements\n", pm.points.size());
    } else if (est->parsed()) {
      LoadedCampaign lc = load_campaign(est_campaign);
      const ScenarioConfig cfg = lc.manifest.config;
      const SoundingCampaign camp = std::move(lc).to_sounding();
      const auto res = estimate_psi(camp, estimator_options(cfg));
      write_file_atomic(out_path(g, est_out), estimated_psi_to_json(res.psi));
      for (const auto& p : res.psi.paths) {
        std::printf("theta %6.2f deg  phi %7.2f deg  alpha %.4f  tau %.3f ns\n", p.elevation_deg,
                    p.azimuth_deg, p.amplitude, p.delay_s * 1e9);
      }
      for (const auto& w : res.psi.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (opt->parsed()) {
      ScenarioConfig cfg = opt_region.empty() ? resolve_config(g) : load_config(opt_region);
      if (g.seed) cfg.master_seed = *g.seed;
      if (opt_budget) cfg.refine.budget = *opt_budget;
      cfg.validate();
      const PathStateInfo start = load_psi(opt_psi);
      const PathStateInfo truth = opt_truth.empty() ? start : load_psi(opt_truth);
      ToneMeasurementConfig tm;
      tm.f0_hz = cfg.tone_f0_hz;
      tm.num_samples = cfg.samples_per_measurement;
      tm.sample_interval_s = cfg.tone_sample_interval_s();
      tm.fft_size = cfg.effective_fft_size();
      tm.noise_power = cfg.noise_power_rel;
      tm.tx_power = cfg.tx_power_rel;
      tm.averaging = cfg.refine.averaging;
      SimulatedMeasurementChannel channel(truth, cfg.power_region, tm, cfg.master_seed);
      MovePlan plan;
      plan.refine_step_m = cfg.refine.step_m;
      plan.min_step_m = cfg.refine.min_step_m;
      plan.budget = cfg.refine.budget;
      const MoveResult res = two_stage_optimize(start, cfg.power_region, channel, plan);
      const BruteForceBest oracle = brute_force_best(truth, cfg.power_region);
      write_file_atomic(out_path(g, opt_out),
                        move_result_to_json(res, coarse_position(start, cfg.power_region), &oracle));
      std::printf("final (%.5f, %.5f) m, %.3f dBr after %zu measurements%s\n", res.final_position.x_m,
                  res.final_position.y_m, res.final_power_dbr, res.measurements_used,
                  res.aborted ? " (aborted)" : "");
      if (res.aborted) {
        std::fprintf(stderr, "error: %s\n", res.error.c_str());
        return 3;
      }
    } else if (exp->parsed()) {
      SoundingCampaign camp = load_campaign(exp_campaign).to_sounding();
      const PasMatrix pas = compute_pas(camp, estimator_options(resolve_config(g)).grid);
      const PdsMatrix pds = compute_pds(camp);
      const std::size_t bins = exp_bins ? exp_bins : camp.numerology.cp_samples() + 1;
      write_with(out_path(g, exp_pas), [&](std::ostream& os) { write_pas_csv(pas, os); });
      write_with(out_path(g, exp_pds), [&](std::ostream& os) { write_pds_csv(pds, os, bins); });
    } else if (cmp->parsed()) {
      const auto rep = compare_maps(read_map_csv(cmp_a), read_map_csv(cmp_b));
      const std::string js = compare_report_to_json(rep);
      if (cmp_out.empty()) {
        std::printf("correlation %.9f  offset %.6f dB  displacement (%ld, %ld) steps\n",
                    rep.correlation, rep.offset_db, rep.displacement_x_steps,
                    rep.displacement_y_steps);
      } else {
        write_file_atomic(out_path(g, cmp_out), js);
      }
    } else if (pip->parsed()) {
      const ScenarioConfig cfg = resolve_config(g);
      const PathStateInfo psi = load_psi(pip_psi);
      const auto stages = parse_stages(pip_stages);
      const auto res = run_pipeline(cfg, psi, stages, g.out_dir);
      for (const auto& s : res.stages) {
        std::printf("%-9s %s %s\n", to_string(s.stage), s.cache_hit ? "cached" : "ran   ",
                    s.dir.string().c_str());
      }
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
