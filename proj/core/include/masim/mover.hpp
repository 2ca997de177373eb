#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masim/channel.hpp"
#include "masim/estimator.hpp"
#include "masim/powermeter.hpp"

namespace masim {

struct MovePlan {
  Position coarse_position;
  double refine_step_m = 1e-3;
  double min_step_m = 0.05e-3;  // slide-track positioning accuracy
  // Offsets in units of the current step; compass pattern by default.
  std::vector<Position> refine_pattern = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  std::size_t budget = 50;

  void validate() const;
};

struct TraceEntry {
  Position position;
  double power_dbr = 0.0;
};

struct ProtocolEvent {
  enum class Kind { kMove, kAck, kMeasure };
  Kind kind = Kind::kMove;
  Position position;
  double power_dbr = 0.0;  // kMeasure only
};

const char* to_string(ProtocolEvent::Kind kind);

struct MoveResult {
  Position final_position;
  double final_power_dbr = 0.0;
  std::size_t measurements_used = 0;
  std::vector<TraceEntry> trace;
  std::vector<ProtocolEvent> protocol;
  bool aborted = false;
  std::string error;
};

// Sequential slide-track + receiver abstraction. move() returns the position
// the track reports back, or nothing when no acknowledgment arrives. measure()
// is only legal after an acknowledged move and returns linear power.
class MeasurementChannel {
 public:
  virtual ~MeasurementChannel() = default;
  virtual std::optional<Position> move(Position target) = 0;
  virtual double measure() = 0;
};

struct ToneMeasurementConfig {
  double f0_hz = 12.5e6;
  std::size_t num_samples = 4096;
  double sample_interval_s = 1.0 / 400e6;
  std::size_t fft_size = 0;  // 0: default_fft_size(num_samples)
  double noise_power = 0.0;
  double tx_power = 1.0;
  std::size_t averaging = 1;
};

// Tone-pipeline measurements of a planted channel. Each measurement draws its
// noise from derive_seed(master_seed, measurement index).
class SimulatedMeasurementChannel final : public MeasurementChannel {
 public:
  SimulatedMeasurementChannel(PathStateInfo truth, MovementRegion region,
                              ToneMeasurementConfig config, std::uint64_t master_seed);

  std::optional<Position> move(Position target) override;
  double measure() override;

  std::size_t measurements() const { return count_; }

 private:
  PathStateInfo truth_;
  MovementRegion region_;
  ToneMeasurementConfig config_;
  std::uint64_t seed_;
  CVec tone_;
  PowerMeter meter_;
  Position position_;
  bool acked_ = false;
  std::size_t count_ = 0;
};

// argmax of g over the region grid from an (estimated) PSI; ties go to the
// smallest (y, x).
Position coarse_position(const PathStateInfo& est, const MovementRegion& region);
Position coarse_position(const EstimatedPsi& est, const MovementRegion& region);

// Compass pattern search from `start`: probe the pattern around the incumbent,
// move to the best probe, halve the step when nothing improves. Stops when the
// budget is spent or the step drops below plan.min_step_m, then parks at the
// best position.
MoveResult refine(MeasurementChannel& channel, Position start, const MovePlan& plan,
                  const MovementRegion& region);

struct BruteForceBest {
  Position position;
  double gain = 0.0;  // linear
};

BruteForceBest brute_force_best(const PathStateInfo& psi, const MovementRegion& region);

// coarse_position followed by refine.
MoveResult two_stage_optimize(const PathStateInfo& est, const MovementRegion& region,
                              MeasurementChannel& channel, MovePlan plan);

}  // namespace masim
