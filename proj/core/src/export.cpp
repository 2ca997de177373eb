#include "masim/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"
#include "masim/iq_io.hpp"

namespace masim {

using nlohmann::json;

void write_pas_csv(const PasMatrix& pas, std::ostream& out) {
  out << "elevation_deg,azimuth_deg,pas_db\n";
  const double vmax = pas.values.empty() ? 0.0 : pas.max_value();
  char line[128];
  for (std::size_t e = 0; e < pas.num_elevations(); ++e) {
    for (std::size_t a = 0; a < pas.num_azimuths(); ++a) {
      const double rel = vmax > 0.0 ? pas.at(e, a) / vmax : 0.0;
      std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", pas.elevations_deg[e],
                    pas.azimuths_deg[a], to_db(rel));
      out << line;
    }
  }
}

void write_pds_csv(const PdsMatrix& pds, std::ostream& out, std::size_t max_bins) {
  out << "position_index,delay_ns,pds_db\n";
  const std::size_t bins = max_bins ? std::min(max_bins, pds.num_bins) : pds.num_bins;
  char line[128];
  for (std::size_t q = 0; q < pds.num_positions; ++q) {
    for (std::size_t n = 0; n < bins; ++n) {
      std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", q,
                    static_cast<double>(n) * pds.delay_step_s * 1e9, to_db(pds.at(q, n)));
      out << line;
    }
  }
}

std::string estimated_psi_to_json(const EstimatedPsi& est) {
  json j;
  json paths = json::array();
  for (const auto& p : est.paths) {
    paths.push_back({{"elevation_deg", p.elevation_deg},
                     {"azimuth_deg", p.azimuth_deg},
                     {"amplitude", p.amplitude},
                     {"delay_ns", p.delay_s * 1e9},
                     {"prominence_db", p.prominence_db}});
  }
  j["paths"] = std::move(paths);
  j["carrier_hz"] = est.carrier_hz;
  j["grid_step_deg"] = est.grid_step_deg;
  if (!est.warnings.empty()) j["warnings"] = est.warnings;
  return j.dump(2) + "\n";
}

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) ==
        allowed.end()) {
      throw ValidationError("unknown field '" + k + "' in " + where);
    }
  }
}

}  // namespace

EstimatedPsi estimated_psi_from_json(std::string_view text) {
  const json j = parse_json(text, "PSI");
  EstimatedPsi est;
  try {
    check_keys(j, {"paths", "carrier_hz", "grid_step_deg", "warnings", "large_scale_gain"}, "PSI");
    est.carrier_hz = j.at("carrier_hz").get<double>();
    est.grid_step_deg = j.value("grid_step_deg", 0.5);
    if (j.contains("warnings")) est.warnings = j["warnings"].get<std::vector<std::string>>();
    for (const auto& p : j.at("paths")) {
      check_keys(p, {"elevation_deg", "azimuth_deg", "amplitude", "delay_ns", "prominence_db"},
                 "PSI path");
      EstimatedPath e;
      e.elevation_deg = p.at("elevation_deg").get<double>();
      e.azimuth_deg = p.at("azimuth_deg").get<double>();
      e.amplitude = p.at("amplitude").get<double>();
      e.delay_s = p.at("delay_ns").get<double>() * 1e-9;
      e.prominence_db = p.value("prominence_db", 0.0);
      est.paths.push_back(e);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed PSI: ") + e.what());
  }
  return est;
}

PathStateInfo psi_from_json(std::string_view text) {
  const EstimatedPsi est = estimated_psi_from_json(text);
  const json j = parse_json(text, "PSI");
  double beta = 1.0;
  try {
    beta = j.value("large_scale_gain", 1.0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed PSI: ") + e.what());
  }
  PathStateInfo psi = est.to_psi(beta);
  psi.validate();
  return psi;
}

std::string psi_to_json(const PathStateInfo& psi) {
  json j;
  json paths = json::array();
  for (const auto& p : psi.paths) {
    paths.push_back({{"elevation_deg", p.elevation_deg},
                     {"azimuth_deg", p.azimuth_deg},
                     {"amplitude", p.amplitude},
                     {"delay_ns", p.delay_s * 1e9}});
  }
  j["paths"] = std::move(paths);
  j["carrier_hz"] = psi.carrier_hz;
  j["large_scale_gain"] = psi.large_scale_gain;
  return j.dump(2) + "\n";
}

PathStateInfo load_psi(const std::filesystem::path& path) {
  try {
    return psi_from_json(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string move_result_to_json(const MoveResult& r, const Position& coarse,
                                const BruteForceBest* oracle) {
  json j;
  j["coarse_position"] = {{"x_m", coarse.x_m}, {"y_m", coarse.y_m}};
  j["final_position"] = {{"x_m", r.final_position.x_m}, {"y_m", r.final_position.y_m}};
  j["final_power_dbr"] = r.final_power_dbr;
  j["measurements_used"] = r.measurements_used;
  j["aborted"] = r.aborted;
  if (r.aborted) j["error"] = r.error;
  json trace = json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"x_m", t.position.x_m}, {"y_m", t.position.y_m}, {"power_dbr", t.power_dbr}});
  }
  j["trace"] = std::move(trace);
  json proto = json::array();
  for (const auto& e : r.protocol) {
    json ev = {{"event", to_string(e.kind)}, {"x_m", e.position.x_m}, {"y_m", e.position.y_m}};
    if (e.kind == ProtocolEvent::Kind::kMeasure) ev["power_dbr"] = e.power_dbr;
    proto.push_back(std::move(ev));
  }
  j["protocol"] = std::move(proto);
  if (oracle) {
    j["brute_force"] = {{"x_m", oracle->position.x_m},
                        {"y_m", oracle->position.y_m},
                        {"gain_db", to_db(oracle->gain)}};
  }
  return j.dump(2) + "\n";
}

}  // namespace masim
