#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "masim/channel.hpp"
#include "masim/config.hpp"

namespace masim {

enum class Stage { kSound, kEstimate, kMeasure, kOptimize, kExport };

const char* to_string(Stage s);
Stage stage_from_string(const std::string& s);
// Comma-separated list, e.g. "sound,estimate".
std::vector<Stage> parse_stages(const std::string& list);

class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what)
      : std::runtime_error(std::string("stage '") + to_string(stage) + "' failed: " + what),
        stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct StageOutcome {
  Stage stage;
  std::filesystem::path dir;
  bool cache_hit = false;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;  // execution order
  std::filesystem::path export_dir;  // empty unless export ran
};

// Runs the requested stages in the fixed order sound, estimate, measure,
// optimize, export. estimate pulls in sound. optimize starts from the
// estimated PSI when estimate is part of the run, else from `psi` itself.
//
// Each stage writes into out_dir/<stage>-<key>, where key hashes the config,
// the PSI and the keys of the stages it reads. A directory carrying a
// `complete` stamp is reused as-is.
PipelineResult run_pipeline(const ScenarioConfig& cfg, const PathStateInfo& psi,
                            std::span<const Stage> stages, const std::filesystem::path& out_dir);

}  // namespace masim
