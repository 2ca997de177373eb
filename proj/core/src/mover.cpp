#include "masim/mover.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace masim {

void MovePlan::validate() const {
  if (budget < 1) throw ValidationError("measurement budget must be >= 1");
  if (!(refine_step_m > 0.0)) throw ValidationError("refine step must be > 0");
  if (!(min_step_m > 0.0)) throw ValidationError("minimum step must be > 0");
  if (refine_pattern.empty()) throw ValidationError("refine pattern must not be empty");
}

const char* to_string(ProtocolEvent::Kind kind) {
  switch (kind) {
    case ProtocolEvent::Kind::kMove: return "move";
    case ProtocolEvent::Kind::kAck: return "ack";
    case ProtocolEvent::Kind::kMeasure: return "measure";
  }
  return "?";
}

SimulatedMeasurementChannel::SimulatedMeasurementChannel(PathStateInfo truth,
                                                         MovementRegion region,
                                                         ToneMeasurementConfig config,
                                                         std::uint64_t master_seed)
    : truth_(std::move(truth)),
      region_(region),
      config_(config),
      seed_(master_seed),
      tone_(gen_tone(config.f0_hz, config.num_samples, config.sample_interval_s)),
      meter_(config.fft_size ? config.fft_size : default_fft_size(config.num_samples)) {
  truth_.validate();
  region_.validate();
  if (config_.averaging < 1) throw ValidationError("averaging factor must be >= 1");
  if (!(config_.noise_power >= 0.0)) throw ValidationError("noise power must be >= 0");
}

std::optional<Position> SimulatedMeasurementChannel::move(Position target) {
  acked_ = false;
  if (!region_.contains(target, 1e-9)) return std::nullopt;
  position_ = target;
  acked_ = true;
  return position_;
}

double SimulatedMeasurementChannel::measure() {
  if (!acked_) throw ValidationError("measure() requires an acknowledged move first");
  acked_ = false;
  const CVec rx = apply_channel_narrowband(tone_, truth_, position_, config_.tx_power);
  double sum = 0.0;
  for (std::size_t k = 0; k < config_.averaging; ++k) {
    IQRecord rec;
    rec.position = position_;
    rec.sample_interval_s = config_.sample_interval_s;
    rec.seed = derive_seed(seed_, count_ * config_.averaging + k);
    rec.samples = add_noise(rx, {config_.noise_power, 1.0 / config_.sample_interval_s}, rec.seed);
    sum += meter_.measure(rec, config_.f0_hz).power_linear;
  }
  ++count_;
  return sum / static_cast<double>(config_.averaging);
}

namespace {

// First grid index within round-off of the maximum, so a flat map resolves to
// the smallest (y, x) rather than to wherever the last ulp happens to land.
std::size_t tie_broken_argmax(const GainMap& map) {
  const double top = map.gain[map.argmax()];
  const double tol = 1e-12 * std::max(top, 1e-300);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.gain[i] >= top - tol) return i;
  }
  return map.argmax();
}

}  // namespace

Position coarse_position(const PathStateInfo& est, const MovementRegion& region) {
  const GainMap map = gain_map(est, region);
  return map.position(tie_broken_argmax(map));
}

Position coarse_position(const EstimatedPsi& est, const MovementRegion& region) {
  if (est.paths.empty()) throw ValidationError("estimated PSI has no paths");
  return coarse_position(est.to_psi(), region);
}

BruteForceBest brute_force_best(const PathStateInfo& psi, const MovementRegion& region) {
  const GainMap map = gain_map(psi, region);
  const std::size_t k = tie_broken_argmax(map);
  return {map.position(k), map.gain[k]};
}

MoveResult refine(MeasurementChannel& channel, Position start, const MovePlan& plan,
                  const MovementRegion& region) {
  plan.validate();
  region.validate();
  MoveResult res;
  if (!region.contains(start, 1e-9)) throw ValidationError("refine start lies outside the region");

  struct Visit {
    Position commanded;
    Position actual;
    double power;
  };
  std::vector<Visit> visited;
  Position last_actual = start;
  bool have_last = false;

  auto fail = [&](Position p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "no acknowledgment for move to (%.6g, %.6g) m", p.x_m, p.y_m);
    res.aborted = true;
    res.error = buf;
  };

  // One move -> ack -> measure exchange; nullopt when the channel fails.
  auto probe = [&](Position p) -> std::optional<Visit> {
    for (const auto& v : visited) {
      if (v.commanded == p) return v;
    }
    res.protocol.push_back({ProtocolEvent::Kind::kMove, p, 0.0});
    const auto ack = channel.move(p);
    if (!ack) {
      fail(p);
      return std::nullopt;
    }
    res.protocol.push_back({ProtocolEvent::Kind::kAck, *ack, 0.0});
    const double power = channel.measure();
    ++res.measurements_used;
    const double db = to_db(power);
    res.protocol.push_back({ProtocolEvent::Kind::kMeasure, *ack, db});
    res.trace.push_back({*ack, db});
    last_actual = *ack;
    have_last = true;
    visited.push_back({p, *ack, power});
    return visited.back();
  };

  start = region.clamp(start);
  auto first = probe(start);
  if (!first) return res;
  Visit best = *first;

  double step = plan.refine_step_m;
  while (res.measurements_used < plan.budget && step >= plan.min_step_m && !res.aborted) {
    const Visit centre = best;
    for (const auto& off : plan.refine_pattern) {
      const Position cand = region.clamp({centre.commanded.x_m + off.x_m * step,
                                          centre.commanded.y_m + off.y_m * step});
      if (cand == centre.commanded) continue;
      const bool cached = std::any_of(visited.begin(), visited.end(),
                                      [&](const Visit& v) { return v.commanded == cand; });
      if (!cached && res.measurements_used >= plan.budget) break;
      const auto v = probe(cand);
      if (!v) break;
      if (v->power > best.power) best = *v;
    }
    if (res.aborted) break;
    if (best.commanded == centre.commanded) step *= 0.5;
  }

  res.final_position = best.actual;
  res.final_power_dbr = to_db(best.power);

  // Park on the incumbent.
  if (!res.aborted && have_last && !(last_actual == best.actual)) {
    res.protocol.push_back({ProtocolEvent::Kind::kMove, best.commanded, 0.0});
    const auto ack = channel.move(best.commanded);
    if (!ack) {
      fail(best.commanded);
    } else {
      res.protocol.push_back({ProtocolEvent::Kind::kAck, *ack, 0.0});
    }
  }
  return res;
}

MoveResult two_stage_optimize(const PathStateInfo& est, const MovementRegion& region,
                              MeasurementChannel& channel, MovePlan plan) {
  plan.coarse_position = coarse_position(est, region);
  return refine(channel, plan.coarse_position, plan, region);
}

}  // namespace masim
