#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "masim/campaign.hpp"
#include "masim/config.hpp"
#include "masim/estimator.hpp"

using namespace masim;

namespace {

ScenarioConfig sounding_cfg(const PathStateInfo& psi, double half_extent, double step, double noise) {
  auto cfg = psi.carrier_hz > 10e9 ? ScenarioConfig::preset_27_5ghz() : ScenarioConfig::preset_3_5ghz();
  cfg.sounding_region = {half_extent, half_extent, step, step, half_extent, half_extent};
  cfg.noise_power_rel = noise;
  return cfg;
}

PathStateInfo one_path(double theta, double phi, double tau) {
  PathStateInfo psi;
  psi.carrier_hz = 27.5e9;
  psi.paths = {{theta, phi, 1.0, tau}};
  return psi;
}

// match each planted path to the nearest estimated direction
const EstimatedPath* nearest(const EstimatedPsi& est, const PathComponent& p) {
  const EstimatedPath* best = nullptr;
  double d = 1e9;
  for (const auto& e : est.paths) {
    const double dd = std::hypot(e.elevation_deg - p.elevation_deg, e.azimuth_deg - p.azimuth_deg);
    if (dd < d) {
      d = dd;
      best = &e;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("array_response") {
  const std::vector<Position> pos{{0.0, 0.0}, {0.013, -0.02}, {0.5, 0.5}};
  for (auto v : array_response(0.0, 0.0, pos, 0.01)) CHECK(std::abs(v - cplx{1.0, 0.0}) < 1e-15);

  const double lambda = 0.1;
  const std::vector<Position> pair{{0.0, 0.0}, {lambda / 2.0, 0.0}};
  const auto a = array_response(0.0, 90.0, pair, lambda);
  CHECK(std::abs(a[1] / a[0] - cplx{-1.0, 0.0}) < 1e-12);

  const std::vector<Position> at{{0.02, 0.03}};
  const auto r = array_response(3.0, 2.0, at, wavelength_m(27.5e9));
  CHECK(std::abs(r[0] - cplx{0.26106911673239097, -0.96532011078634906}) < 1e-12);
}

TEST_CASE("PAS of a single planted path peaks on it") {
  const auto psi = one_path(3.0, 2.0, 20e-9);
  const auto camp = synthesize_sounding(sounding_cfg(psi, 10e-3, 2e-3, 0.0), psi);
  const auto pas = compute_pas(camp, AngleGrid{});
  CHECK(pas.num_elevations() == 361);
  const auto it = std::max_element(pas.values.begin(), pas.values.end());
  const auto idx = static_cast<std::size_t>(it - pas.values.begin());
  CHECK(pas.elevations_deg[idx / pas.num_azimuths()] == 3.0);
  CHECK(pas.azimuths_deg[idx % pas.num_azimuths()] == 2.0);
  for (double v : pas.values) CHECK(v >= 0.0);
}

TEST_CASE("PAS of isotropic noise is flat") {
  std::vector<IQRecord> recs;
  for (int ix = 0; ix < 10; ++ix) {
    for (int iy = 0; iy < 10; ++iy) {
      IQRecord r;
      r.position = {ix * 2e-3, iy * 2e-3};
      r.sample_interval_s = 1e-9;
      r.samples = add_noise(CVec(8192), NoiseSpec{1.0}, derive_seed(99, recs.size()));
      recs.push_back(std::move(r));
    }
  }
  const auto cov = SpatialCovariance::from_records(recs, wavelength_m(27.5e9));
  CHECK(cov.size() == 100);
  const auto pas = cov.pas(AngleGrid{1.0, 1.0});
  const auto [mn, mx] = std::minmax_element(pas.values.begin(), pas.values.end());
  CHECK(*mx / *mn < 2.0);

  // Hermitian PSD via random quadratic forms
  const auto& R = cov.matrix();
  CHECK((R - R.adjoint()).norm() <= 1e-12 * R.norm());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int k = 0; k < 100; ++k) {
    const auto f = cov.steering({u(rng), u(rng)});
    const Eigen::Map<const Eigen::VectorXcd> v(f.data(), static_cast<Eigen::Index>(f.size()));
    const cplx qf = v.dot(R * v);
    CHECK(qf.real() >= 0.0);
    CHECK(std::abs(qf.imag()) <= 1e-9 * qf.real());
  }

  for (auto& r : recs) std::fill(r.samples.begin(), r.samples.end(), cplx{});
  const auto zero = SpatialCovariance::from_records(recs, wavelength_m(27.5e9)).pas(AngleGrid{5.0, 5.0});
  for (double v : zero.values) CHECK(v == 0.0);
}

TEST_CASE("find_peaks") {
  PasMatrix pas;
  pas.grid = AngleGrid{1.0, 1.0, -2.0, 2.0, -2.0, 2.0};
  pas.elevations_deg = pas.grid.elevations();
  pas.azimuths_deg = pas.grid.azimuths();
  pas.values.assign(25, 0.01);
  pas.values[1 * 5 + 3] = 50.0;
  auto peaks = find_peaks(pas, 8, 20.0);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].direction.elevation_deg == -1.0);
  CHECK(peaks[0].direction.azimuth_deg == 1.0);
  CHECK(peaks[0].prominence_db == 0.0);

  // a second local max 10 dB down is kept, one 30 dB down is not
  pas.values[4 * 5 + 0] = 5.0;
  CHECK(find_peaks(pas, 8, 20.0).size() == 2);
  CHECK(find_peaks(pas, 1, 20.0).size() == 1);
  CHECK(find_peaks(pas, 8, 5.0).size() == 1);
}

TEST_CASE("zf_weights") {
  const double lambda = wavelength_m(27.5e9);
  const auto grid = MovementRegion{25e-3, 25e-3, 1e-3, 1e-3, 25e-3, 25e-3}.grid();
  const std::vector<Direction> one{{3.0, 2.0}};
  const auto w1 = zf_weights(one, 0, grid, lambda);
  const auto f1 = array_response(3.0, 2.0, grid, lambda);
  for (std::size_t q = 0; q < grid.size(); q += 37) {
    CHECK(std::abs(w1[q] - f1[q] / std::sqrt(static_cast<double>(grid.size()))) < 1e-15);
  }

  // (0,0) and (0,90) on two half-wavelength x pairs: [1,1,1,1] vs [1,-1,1,-1]
  const std::vector<Position> pair{{0.0, 0.0}, {0.05, 0.0}, {0.0, 0.07}, {0.05, 0.07}};
  const double lam = 0.1;
  const std::vector<Direction> orth{{0.0, 0.0}, {0.0, 90.0}};
  const auto f0 = array_response(0.0, 0.0, pair, lam);
  const auto fo = array_response(0.0, 90.0, pair, lam);
  cplx ip{};
  for (int q = 0; q < 4; ++q) ip += std::conj(fo[q]) * f0[q];
  REQUIRE(std::abs(ip) < 1e-12);
  const auto w = zf_weights(orth, 0, pair, lam);
  for (int q = 0; q < 4; ++q) CHECK(std::abs(w[q] - f0[q] / 2.0) < 1e-14);

  std::vector<Direction> t3;
  for (const auto& p : reference_psi_27_5ghz().paths) t3.push_back({p.elevation_deg, p.azimuth_deg});
  for (std::size_t l = 0; l < 3; ++l) {
    const auto wl = zf_weights(t3, l, grid, lambda);
    for (std::size_t i = 0; i < 3; ++i) {
      if (i == l) continue;
      const auto fi = array_response(t3[i].elevation_deg, t3[i].azimuth_deg, grid, lambda);
      cplx r{};
      for (std::size_t q = 0; q < grid.size(); ++q) r += std::conj(wl[q]) * fi[q];
      CHECK(std::abs(r) < 1e-10);
    }
  }

  const std::vector<Direction> dup{{3.0, 2.0}, {3.0, 2.0}, {10.0, 0.0}};
  CHECK_THROWS_AS(zf_weights(dup, 2, grid, lambda), DegenerateGeometryError);
  CHECK_THROWS_AS(zf_weights(t3, 0, std::span(grid.data(), 3), lambda), DegenerateGeometryError);
}

TEST_CASE("calibrate") {
  const CVec raw{{1.0, 2.0}, {-0.5, 0.25}, {3.0, 0.0}};
  CHECK(calibrate(raw, CVec(3, 1.0)).values == raw);
  const cplx hs = std::polar(2.0, kPi / 4.0);
  const auto c = calibrate(raw, CVec(3, hs));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c.values[i] - raw[i] * std::polar(0.5, -kPi / 4.0)) < 1e-15);
  const auto f = calibrate(raw, CVec{1.0, 1e-9, 1.0}, 1e-6);
  CHECK(f.usable == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(f.values[1] == cplx{});
}

TEST_CASE("equalization removes a rippled system response") {
  const auto psi = reference_psi_27_5ghz();
  auto cfg = sounding_cfg(psi, 2e-3, 1e-3, 0.0);
  cfg.sounding_symbols = 2;
  cfg.tx_power_rel = 3.0;
  const auto num = cfg.sounding_numerology();
  CVec sys(num.num_subcarriers);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    sys[i] = std::polar(1.0 + 0.3 * std::sin(0.01 * i), 0.2 * std::cos(0.003 * i));
  }
  const auto camp = synthesize_sounding(cfg, psi, sys);
  const auto h = equalize(camp);
  for (std::size_t q = 0; q < camp.records.size(); ++q) {
    const auto ref = channel_frequency_response(psi, camp.records[q].position, num);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      err = std::max(err, std::abs(h.h(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i)) - ref[i]));
    }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("on-grid delay and PDS") {
  OfdmNumerology num;
  const double tau = 10.0 * num.delay_step_s();
  const auto psi = one_path(3.0, 2.0, tau);
  const auto camp = synthesize_sounding(sounding_cfg(psi, 4e-3, 1e-3, 0.0), psi);

  const auto pds = compute_pds(camp);
  CHECK(pds.delay_step_s * 1e9 == doctest::Approx(2.630).epsilon(2e-4));
  for (std::size_t q = 0; q < pds.num_positions; ++q) {
    CHECK(pds.at(q, 10) == 1.0);
    for (std::size_t n = 0; n < pds.num_bins; ++n) {
      if (n + 3 <= 10 || n >= 13) CHECK(pds.at(q, n) < 0.01);
    }
  }

  const auto res = estimate_psi(camp);
  REQUIRE(res.psi.paths.size() == 1);
  const auto& p = res.psi.paths[0];
  CHECK(p.elevation_deg == 3.0);
  CHECK(p.azimuth_deg == 2.0);
  CHECK(std::abs(p.delay_s - tau) < 1e-13);
  CHECK(p.amplitude == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("27.5 GHz three-path round trip on a reduced aperture") {
  const auto psi = reference_psi_27_5ghz();
  const auto camp = synthesize_sounding(sounding_cfg(psi, 24e-3, 2e-3, 0.01), psi);
  const auto res = estimate_psi(camp);
  REQUIRE(res.peaks.size() == 3);
  REQUIRE(res.psi.paths.size() == 3);
  double power = 0.0;
  for (const auto& p : psi.paths) {
    const auto* e = nearest(res.psi, p);
    CHECK(std::abs(e->elevation_deg - p.elevation_deg) <= 0.5);
    CHECK(std::abs(e->azimuth_deg - p.azimuth_deg) <= 0.5);
    CHECK(std::abs(e->delay_s - p.delay_s) < 1e-9);
    CHECK(std::abs(e->amplitude - p.amplitude) < 0.05);
    power += e->amplitude * e->amplitude;
  }
  CHECK(power >= 0.99);
  for (std::size_t l = 1; l < res.psi.paths.size(); ++l) {
    CHECK(res.psi.paths[l].amplitude <= res.psi.paths[l - 1].amplitude);
  }

  // record order does not matter
  auto shuffled = camp;
  std::mt19937_64 rng(17);
  std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
  const auto res2 = estimate_psi(shuffled);
  REQUIRE(res2.psi.paths.size() == res.psi.paths.size());
  for (std::size_t l = 0; l < res.psi.paths.size(); ++l) {
    CHECK(res2.psi.paths[l].elevation_deg == res.psi.paths[l].elevation_deg);
    CHECK(res2.psi.paths[l].azimuth_deg == res.psi.paths[l].azimuth_deg);
    CHECK(res2.psi.paths[l].delay_s == doctest::Approx(res.psi.paths[l].delay_s).epsilon(1e-9));
    CHECK(res2.psi.paths[l].amplitude == doctest::Approx(res.psi.paths[l].amplitude).epsilon(1e-9));
  }
}

TEST_CASE("3.5 GHz five-path detection") {
  const auto psi = reference_psi_3_5ghz();
  const auto camp = synthesize_sounding(sounding_cfg(psi, 250e-3, 25e-3, 0.01), psi);
  const auto res = estimate_psi(camp);
  CHECK(res.peaks.size() == 5);
  REQUIRE(res.psi.paths.size() >= 3);
  for (int l = 0; l < 3; ++l) {
    CHECK(std::abs(res.psi.paths[l].elevation_deg - psi.paths[l].elevation_deg) <= 0.5);
    CHECK(std::abs(res.psi.paths[l].azimuth_deg - psi.paths[l].azimuth_deg) <= 0.5);
  }
  double power = 0.0;
  for (const auto& p : res.psi.paths) power += p.amplitude * p.amplitude;
  CHECK(power >= 0.99);
}

TEST_CASE("a beam without a dominant delay peak is dropped") {
  const auto psi = one_path(3.0, 2.0, 20e-9);
  const auto camp = synthesize_sounding(sounding_cfg(psi, 8e-3, 1e-3, 0.01), psi);
  const auto responses = equalize(camp);
  const auto positions = camp.positions();
  const std::vector<PathPeak> peaks{{{3.0, 2.0}, 1.0, 0.0}, {{-40.0, 60.0}, 0.01, -20.0}};
  const std::vector<Direction> dirs{peaks[0].direction, peaks[1].direction};
  const double lambda = wavelength_m(camp.carrier_hz);
  const std::vector<CVec> w{zf_weights(dirs, 0, positions, lambda), zf_weights(dirs, 1, positions, lambda)};
  const auto est = estimate_delay_amplitude(responses, camp, w, peaks);
  REQUIRE(est.paths.size() == 1);
  CHECK(est.paths[0].elevation_deg == 3.0);
  CHECK_FALSE(est.warnings.empty());
}
