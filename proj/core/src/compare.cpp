#include "masim/compare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace masim {

namespace {

constexpr double kMatchTol = 1e-9;

std::vector<std::size_t> yx_order(const MapSamples& m) {
  std::vector<std::size_t> idx(m.positions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    const auto& p = m.positions[i];
    const auto& q = m.positions[j];
    return p.y_m < q.y_m || (p.y_m == q.y_m && p.x_m < q.x_m);
  });
  return idx;
}

// Smallest spacing between distinct coordinates, 0 if there is only one.
double grid_step(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double step = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (d > kMatchTol && (step == 0.0 || d < step)) step = d;
  }
  return step;
}

}  // namespace

MapSamples to_samples(const GainMap& map) {
  MapSamples s;
  for (std::size_t i = 0; i < map.size(); ++i) {
    s.positions.push_back(map.position(i));
    s.values_db.push_back(to_db(map.gain[i]));
  }
  return s;
}

MapSamples to_samples(const PowerMap& map) {
  MapSamples s;
  for (const auto& p : map.points) {
    s.positions.push_back(p.position);
    s.values_db.push_back(p.power_db);
  }
  return s;
}

MapSamples read_map_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("x_m,y_m,", 0) != 0) {
    throw ValidationError(path.string() + ": expected header 'x_m,y_m,<value>'");
  }
  MapSamples s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double x = 0, y = 0, v = 0;
    char c1 = 0, c2 = 0;
    if (!(ls >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',') {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    s.positions.push_back({x, y});
    s.values_db.push_back(v);
  }
  return s;
}

CompareReport compare_maps(const MapSamples& a, const MapSamples& b) {
  if (a.positions.size() != a.values_db.size() || b.positions.size() != b.values_db.size()) {
    throw ValidationError("map samples have mismatched position / value counts");
  }
  if (a.positions.size() != b.positions.size()) {
    throw ValidationError("grid mismatch: " + std::to_string(a.positions.size()) + " vs " +
                          std::to_string(b.positions.size()) + " points");
  }
  if (a.positions.empty()) throw ValidationError("cannot compare empty maps");
  const auto ia = yx_order(a);
  const auto ib = yx_order(b);
  const std::size_t n = ia.size();
  std::vector<double> va(n), vb(n);
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pa = a.positions[ia[k]];
    const auto& pb = b.positions[ib[k]];
    if (std::abs(pa.x_m - pb.x_m) > kMatchTol || std::abs(pa.y_m - pb.y_m) > kMatchTol) {
      throw ValidationError("grid mismatch at point " + std::to_string(k));
    }
    va[k] = a.values_db[ia[k]];
    vb[k] = b.values_db[ib[k]];
    xs.push_back(pa.x_m);
    ys.push_back(pa.y_m);
  }

  CompareReport r;
  r.num_points = n;
  const double nd = static_cast<double>(n);
  const double ma = std::accumulate(va.begin(), va.end(), 0.0) / nd;
  const double mb = std::accumulate(vb.begin(), vb.end(), 0.0) / nd;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (va[k] - ma) * (vb[k] - mb);
    saa += (va[k] - ma) * (va[k] - ma);
    sbb += (vb[k] - mb) * (vb[k] - mb);
  }
  if (saa > 0.0 && sbb > 0.0) {
    r.correlation = sab / std::sqrt(saa * sbb);
  } else {
    r.correlation = (saa == 0.0 && sbb == 0.0) ? 1.0 : 0.0;
  }
  r.offset_db = ma - mb;
  r.residuals_db.resize(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r.residuals_db[k] = va[k] - vb[k] - r.offset_db;
    ss += r.residuals_db[k] * r.residuals_db[k];
    r.max_abs_residual_db = std::max(r.max_abs_residual_db, std::abs(r.residuals_db[k]));
  }
  r.rms_residual_db = std::sqrt(ss / nd);

  const auto ka = static_cast<std::size_t>(std::max_element(va.begin(), va.end()) - va.begin());
  const auto kb = static_cast<std::size_t>(std::max_element(vb.begin(), vb.end()) - vb.begin());
  r.argmax_a = {xs[ka], ys[ka]};
  r.argmax_b = {xs[kb], ys[kb]};
  const double sx = grid_step(xs);
  const double sy = grid_step(ys);
  r.displacement_x_steps = sx > 0.0 ? std::lround((r.argmax_b.x_m - r.argmax_a.x_m) / sx) : 0;
  r.displacement_y_steps = sy > 0.0 ? std::lround((r.argmax_b.y_m - r.argmax_a.y_m) / sy) : 0;
  return r;
}

std::string compare_report_to_json(const CompareReport& r) {
  nlohmann::json j;
  j["num_points"] = r.num_points;
  j["correlation"] = r.correlation;
  j["offset_db"] = r.offset_db;
  j["rms_residual_db"] = r.rms_residual_db;
  j["max_abs_residual_db"] = r.max_abs_residual_db;
  j["argmax_a"] = {{"x_m", r.argmax_a.x_m}, {"y_m", r.argmax_a.y_m}};
  j["argmax_b"] = {{"x_m", r.argmax_b.x_m}, {"y_m", r.argmax_b.y_m}};
  j["argmax_displacement_steps"] = {{"x", r.displacement_x_steps}, {"y", r.displacement_y_steps}};
  j["residuals_db"] = r.residuals_db;
  return j.dump(2) + "\n";
}

}  // namespace masim
