#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "masim/estimator.hpp"
#include "masim/mover.hpp"

namespace masim {

// `elevation_deg,azimuth_deg,pas_db`, normalized so the maximum is 0 dB.
void write_pas_csv(const PasMatrix& pas, std::ostream& out);

// `position_index,delay_ns,pds_db`; bins >= max_bins are skipped (0 = all).
void write_pds_csv(const PdsMatrix& pds, std::ostream& out, std::size_t max_bins = 0);

// {paths: [{elevation_deg, azimuth_deg, amplitude, delay_ns, prominence_db}],
//  carrier_hz, grid_step_deg[, warnings]}
std::string estimated_psi_to_json(const EstimatedPsi& est);
EstimatedPsi estimated_psi_from_json(std::string_view text);

// Same schema; prominence_db and grid_step_deg are optional, and an optional
// large_scale_gain sets beta.
PathStateInfo psi_from_json(std::string_view text);
std::string psi_to_json(const PathStateInfo& psi);
PathStateInfo load_psi(const std::filesystem::path& path);

std::string move_result_to_json(const MoveResult& result, const Position& coarse,
                                const BruteForceBest* oracle = nullptr);

}  // namespace masim
