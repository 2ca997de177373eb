#include "masim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "masim/fft.hpp"

namespace masim {

namespace {

// exp(j 2 pi cycles) with the integer part of `cycles` removed first.
cplx unit_phasor(double cycles) {
  cycles -= std::floor(cycles);
  return std::polar(1.0, 2.0 * kPi * cycles);
}

std::string fmt(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

void SoundingCampaign::validate() const {
  if (records.size() < 2) throw ValidationError("a sounding campaign needs at least 2 positions");
  numerology.validate(std::numeric_limits<double>::infinity());
  if (tx_symbols.num_subcarriers != numerology.num_subcarriers ||
      tx_symbols.num_symbols != numerology.num_symbols ||
      tx_symbols.values.size() != numerology.num_subcarriers * numerology.num_symbols) {
    throw ValidationError("transmit symbol grid does not match the numerology");
  }
  if (!sys_response.empty() && sys_response.size() != numerology.num_subcarriers) {
    throw ValidationError("system response length must equal the number of subcarriers");
  }
  if (!(carrier_hz > 0.0)) throw ValidationError("campaign carrier frequency must be positive");
  if (!(tx_power > 0.0)) throw ValidationError("campaign transmit power must be positive");
  const std::size_t n = numerology.frame_samples();
  for (std::size_t q = 0; q < records.size(); ++q) {
    if (records[q].samples.size() != n) {
      throw ValidationError("record " + std::to_string(q) + " has " +
                            std::to_string(records[q].samples.size()) + " samples, expected " +
                            std::to_string(n));
    }
  }
  for (const auto& b : tx_symbols.values) {
    if (b == cplx{0.0, 0.0}) throw ValidationError("transmit symbols must be nonzero");
  }
}

std::vector<Position> SoundingCampaign::positions() const {
  std::vector<Position> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.position);
  return out;
}

PathStateInfo EstimatedPsi::to_psi(double large_scale_gain) const {
  PathStateInfo psi;
  psi.carrier_hz = carrier_hz;
  psi.large_scale_gain = large_scale_gain;
  for (const auto& p : paths) {
    psi.paths.push_back({p.elevation_deg, p.azimuth_deg, p.amplitude, p.delay_s});
  }
  return psi;
}

Calibration calibrate(std::span<const cplx> raw, std::span<const cplx> sys_response, double floor) {
  Calibration out;
  out.values.assign(raw.size(), cplx{0.0, 0.0});
  out.usable.assign(raw.size(), 1);
  if (sys_response.empty()) {
    std::copy(raw.begin(), raw.end(), out.values.begin());
    return out;
  }
  if (sys_response.size() != raw.size()) {
    throw ValidationError("system response length does not match the subcarrier count");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (std::abs(sys_response[i]) <= floor) {
      out.usable[i] = 0;
    } else {
      out.values[i] = raw[i] / sys_response[i];
    }
  }
  return out;
}

ChannelResponses equalize(const SoundingCampaign& campaign, double sys_floor) {
  campaign.validate();
  const auto& num = campaign.numerology;
  const std::size_t n_sc = num.num_subcarriers;
  const std::size_t n_sym = num.num_symbols;
  const std::size_t cp = num.cp_samples();
  const std::size_t sps = num.samples_per_symbol();
  const double scale = static_cast<double>(n_sc) * std::sqrt(campaign.tx_power);

  ChannelResponses out;
  out.h.resize(static_cast<Eigen::Index>(campaign.records.size()), static_cast<Eigen::Index>(n_sc));
  out.usable.assign(n_sc, 1);

  FftPlan forward(n_sc, FftPlan::Direction::kForward);
  CVec body(n_sc);
  CVec acc(n_sc);
  for (std::size_t q = 0; q < campaign.records.size(); ++q) {
    const auto& s = campaign.records[q].samples;
    std::fill(acc.begin(), acc.end(), cplx{0.0, 0.0});
    for (std::size_t m = 0; m < n_sym; ++m) {
      forward.execute(std::span<const cplx>(s.data() + m * sps + cp, n_sc), body);
      for (std::size_t i = 0; i < n_sc; ++i) acc[i] += body[i] / (scale * campaign.tx_symbols.at(i, m));
    }
    for (auto& v : acc) v /= static_cast<double>(n_sym);
    const Calibration cal = calibrate(acc, campaign.sys_response, sys_floor);
    for (std::size_t i = 0; i < n_sc; ++i) {
      out.h(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i)) = cal.values[i];
      out.usable[i] &= cal.usable[i];
    }
  }
  return out;
}

PasMatrix compute_pas(const SoundingCampaign& campaign, const AngleGrid& grid) {
  campaign.validate();
  const auto cov =
      SpatialCovariance::from_records(campaign.records, wavelength_m(campaign.carrier_hz));
  return cov.pas(grid);
}

std::vector<PathPeak> find_peaks(const PasMatrix& pas, std::size_t max_paths, double prominence_db) {
  if (pas.values.empty()) throw ValidationError("empty PAS");
  if (max_paths == 0) throw ValidationError("max_paths must be >= 1");
  const double vmax = pas.max_value();
  if (!(vmax > 0.0)) return {};
  const double floor = vmax * std::pow(10.0, -prominence_db / 10.0);
  const auto ne = static_cast<long>(pas.num_elevations());
  const auto na = static_cast<long>(pas.num_azimuths());

  std::vector<std::pair<double, long>> cand;
  for (long e = 0; e < ne; ++e) {
    for (long a = 0; a < na; ++a) {
      const double v = pas.at(static_cast<std::size_t>(e), static_cast<std::size_t>(a));
      if (v < floor || !(v > 0.0)) continue;
      bool is_max = true;
      for (long de = -1; de <= 1 && is_max; ++de) {
        for (long da = -1; da <= 1; ++da) {
          if (de == 0 && da == 0) continue;
          const long e2 = e + de;
          const long a2 = a + da;
          if (e2 < 0 || e2 >= ne || a2 < 0 || a2 >= na) continue;
          const double nb = pas.at(static_cast<std::size_t>(e2), static_cast<std::size_t>(a2));
          // Plateaus keep only their first cell in raster order.
          const bool earlier = de < 0 || (de == 0 && da < 0);
          if (earlier ? !(v > nb) : !(v >= nb)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) cand.emplace_back(v, e * na + a);
    }
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  if (cand.size() > max_paths) cand.resize(max_paths);

  std::vector<PathPeak> out;
  for (const auto& [v, idx] : cand) {
    PathPeak p;
    p.direction = {pas.elevations_deg[static_cast<std::size_t>(idx / na)],
                   pas.azimuths_deg[static_cast<std::size_t>(idx % na)]};
    p.value = v;
    p.prominence_db = 10.0 * std::log10(v / vmax);
    out.push_back(p);
  }
  return out;
}

std::vector<PathPeak> find_paths(const SpatialCovariance& cov, const EstimatorOptions& options,
                                 PasMatrix* first_pas) {
  if (options.max_paths == 0) throw ValidationError("max_paths must be >= 1");
  const AngleGrid& grid = options.grid;
  grid.validate();

  PasMatrix pas0 = cov.pas(grid);
  const double vmax = pas0.max_value();
  const std::size_t na = pas0.num_azimuths();
  const std::size_t ne = pas0.num_elevations();
  const auto elevations = pas0.elevations_deg;
  const auto azimuths = pas0.azimuths_deg;
  if (first_pas) *first_pas = pas0;

  std::vector<PathPeak> found;
  std::vector<Direction> dirs;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  if (!(vmax > 0.0)) return found;

  while (found.size() < options.max_paths) {
    const PasMatrix pas = dirs.empty() ? std::move(pas0) : cov.deflated(dirs).pas(grid);
    const auto it = std::max_element(pas.values.begin(), pas.values.end());
    const double v = *it;
    if (!(v > 0.0)) break;
    const double rel = 10.0 * std::log10(v / vmax);
    if (rel < -options.prominence_db) break;
    const auto idx = static_cast<std::size_t>(it - pas.values.begin());
    cells.emplace_back(idx / na, idx % na);
    dirs.push_back({elevations[idx / na], azimuths[idx % na]});
    found.push_back({dirs.back(), v, rel});
  }

  // Alternating-projection refinement in a local window.
  const long w = options.refine_window_steps;
  if (found.size() < 2 || w <= 0) return found;
  for (int sweep = 0; sweep < options.refine_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t l = 0; l < found.size(); ++l) {
      std::vector<Direction> others;
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        if (j != l) others.push_back(dirs[j]);
      }
      std::vector<Direction> cand;
      std::vector<std::pair<std::size_t, std::size_t>> cand_cells;
      std::size_t current = 0;
      for (long de = -w; de <= w; ++de) {
        for (long da = -w; da <= w; ++da) {
          const long e = static_cast<long>(cells[l].first) + de;
          const long a = static_cast<long>(cells[l].second) + da;
          if (e < 0 || a < 0 || e >= static_cast<long>(ne) || a >= static_cast<long>(na)) continue;
          if (de == 0 && da == 0) current = cand.size();
          cand.push_back({elevations[static_cast<std::size_t>(e)], azimuths[static_cast<std::size_t>(a)]});
          cand_cells.emplace_back(static_cast<std::size_t>(e), static_cast<std::size_t>(a));
        }
      }
      const auto power = cov.projected_power(cand, others);
      std::size_t best = current;
      for (std::size_t k = 0; k < power.size(); ++k) {
        if (power[k] > power[best]) best = k;
      }
      if (best != current) {
        changed = true;
        dirs[l] = cand[best];
        cells[l] = cand_cells[best];
      }
      found[l].direction = dirs[l];
      found[l].value = power[best];
      found[l].prominence_db = 10.0 * std::log10(power[best] / vmax);
    }
    if (!changed) break;
  }
  return found;
}

CVec zf_weights(std::span<const Direction> paths, std::size_t target,
                std::span<const Position> positions, double wavelength) {
  const std::size_t l_hat = paths.size();
  const std::size_t q = positions.size();
  if (target >= l_hat) throw ValidationError("ZF target index out of range");
  if (q <= l_hat) {
    throw DegenerateGeometryError("ZF needs more positions (" + std::to_string(q) +
                                  ") than paths (" + std::to_string(l_hat) + ")");
  }
  const CVec f = array_response(paths[target].elevation_deg, paths[target].azimuth_deg, positions,
                                wavelength);
  const double inv_sqrt_q = 1.0 / std::sqrt(static_cast<double>(q));
  const auto qi = static_cast<Eigen::Index>(q);
  Eigen::VectorXcd fv = Eigen::Map<const Eigen::VectorXcd>(f.data(), qi);
  if (l_hat == 1) {
    fv *= inv_sqrt_q;
    return CVec(fv.data(), fv.data() + q);
  }

  const auto k = static_cast<Eigen::Index>(l_hat - 1);
  Eigen::MatrixXcd fo(qi, k);
  Eigen::Index col = 0;
  for (std::size_t j = 0; j < l_hat; ++j) {
    if (j == target) continue;
    const CVec g = array_response(paths[j].elevation_deg, paths[j].azimuth_deg, positions, wavelength);
    fo.col(col++) = Eigen::Map<const Eigen::VectorXcd>(g.data(), qi);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(fo);
  qr.setThreshold(1e-8);
  if (qr.rank() < k) {
    throw DegenerateGeometryError("steering vectors of the other paths are linearly dependent");
  }
  const Eigen::MatrixXcd basis = qr.householderQ() * Eigen::MatrixXcd::Identity(qi, k);
  Eigen::VectorXcd p = fv - basis * (basis.adjoint() * fv);
  p -= basis * (basis.adjoint() * p);  // second pass tightens the nulls
  if (p.squaredNorm() < 1e-8 * static_cast<double>(q)) {
    throw DegenerateGeometryError("path " + std::to_string(target) +
                                  " is not separable from the others with this aperture");
  }
  p *= inv_sqrt_q;
  return CVec(p.data(), p.data() + q);
}

EstimatedPsi estimate_delay_amplitude(const ChannelResponses& responses,
                                      const SoundingCampaign& campaign,
                                      std::span<const CVec> weights,
                                      std::span<const PathPeak> paths,
                                      const EstimatorOptions& options) {
  if (weights.size() != paths.size()) throw ValidationError("one weight vector per path required");
  const auto& num = campaign.numerology;
  const std::size_t n_sc = num.num_subcarriers;
  const std::size_t q = campaign.records.size();
  if (static_cast<std::size_t>(responses.h.rows()) != q ||
      static_cast<std::size_t>(responses.h.cols()) != n_sc) {
    throw ValidationError("channel responses do not match the campaign");
  }
  const double fc = campaign.carrier_hz;
  const double tau_d = num.delay_step_s();
  const double df = num.subcarrier_spacing_hz;
  const auto positions = campaign.positions();
  const double lambda = wavelength_m(fc);

  EstimatedPsi est;
  est.carrier_hz = fc;
  est.grid_step_deg = options.grid.elevation_step_deg;

  // Total received channel power: delay-domain energy around the CP span,
  // less the per-tap noise floor measured outside it.
  const std::size_t cp = num.cp_samples();
  const std::size_t guard = options.guard_taps;
  const bool has_noise_taps = cp + 1 + 2 * guard < n_sc;
  std::vector<std::uint8_t> in_window(n_sc, 1);
  if (has_noise_taps) {
    for (std::size_t n = 0; n < n_sc; ++n) in_window[n] = (n <= cp + guard || n >= n_sc - guard);
  }
  const auto window_taps =
      static_cast<double>(std::count(in_window.begin(), in_window.end(), std::uint8_t{1}));
  double window_energy = 0.0;
  double noise_energy = 0.0;
  {
    FftPlan inverse(n_sc, FftPlan::Direction::kInverse);
    CVec row(n_sc);
    for (std::size_t r = 0; r < q; ++r) {
      for (std::size_t i = 0; i < n_sc; ++i) {
        row[i] = responses.h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
      }
      inverse.execute(row, row);
      for (std::size_t n = 0; n < n_sc; ++n) (in_window[n] ? window_energy : noise_energy) += std::norm(row[n]);
    }
  }
  const double qd = static_cast<double>(q);
  const double noise_tap_var =
      has_noise_taps ? noise_energy / (qd * (static_cast<double>(n_sc) - window_taps)) : 0.0;
  const double p_total = window_energy / qd - window_taps * noise_tap_var;

  const std::size_t up = std::max<std::size_t>(1, options.delay_oversample);
  const std::size_t n_up = n_sc * up;
  FftPlan inverse_up(n_up, FftPlan::Direction::kInverse);
  CVec padded(n_up);
  std::vector<double> p2(n_up);
  std::vector<double> scratch;

  std::vector<std::size_t> usable_idx;
  for (std::size_t i = 0; i < n_sc; ++i) {
    if (responses.usable[i]) usable_idx.push_back(i);
  }
  if (usable_idx.empty()) throw ValidationError("no usable subcarriers after calibration");

  struct Raw {
    EstimatedPath path;
    double amp;
  };
  std::vector<Raw> kept;
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const auto& dir = paths[l].direction;
    const CVec& w = weights[l];
    if (w.size() != q) throw ValidationError("weight vector length differs from position count");
    const CVec f = array_response(dir.elevation_deg, dir.azimuth_deg, positions, lambda);
    cplx gain{0.0, 0.0};
    for (std::size_t r = 0; r < q; ++r) gain += std::conj(w[r]) * f[r];
    const Eigen::Map<const Eigen::VectorXcd> wv(w.data(), static_cast<Eigen::Index>(q));
    const Eigen::RowVectorXcd hl = (wv.adjoint() * responses.h) / gain.real();

    std::fill(padded.begin(), padded.end(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_sc; ++i) padded[i] = hl(static_cast<Eigen::Index>(i));
    inverse_up.execute(padded, padded);
    for (std::size_t n = 0; n < n_up; ++n) p2[n] = std::norm(padded[n]);
    const auto k = static_cast<std::size_t>(std::max_element(p2.begin(), p2.end()) - p2.begin());
    const double pk = p2[k];
    scratch = p2;
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n_up / 2), scratch.end());
    const double median = scratch[n_up / 2];
    const double ratio_db = median > 0.0 ? 10.0 * std::log10(pk / median)
                                         : std::numeric_limits<double>::infinity();
    if (ratio_db < options.min_peak_to_median_db) {
      est.warnings.push_back(fmt("path at (%.2f deg, ", dir.elevation_deg, dir.azimuth_deg) +
                             fmt("%.2f deg) dropped: peak-to-median %.1f dB", dir.azimuth_deg, ratio_db));
      continue;
    }

    // Parabolic interpolation of |h|^2 around the peak.
    const double a = p2[(k + n_up - 1) % n_up];
    const double c = p2[(k + 1) % n_up];
    const double denom = a - 2.0 * pk + c;
    const double off = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
    double pos = static_cast<double>(k) + off;
    if (pos > static_cast<double>(n_up) / 2.0) pos -= static_cast<double>(n_up);
    double tau = pos * tau_d / static_cast<double>(up);

    auto dtft = [&](double t) {
      cplx s{0.0, 0.0};
      for (std::size_t i : usable_idx) {
        s += hl(static_cast<Eigen::Index>(i)) * unit_phasor(static_cast<double>(i) * df * t);
      }
      return s / static_cast<double>(usable_idx.size());
    };
    // Snap to the carrier cycle whose phase -2 pi f_c tau matches the path phase.
    for (int it = 0; it < 2; ++it) {
      const double base = -std::arg(dtft(tau)) / (2.0 * kPi);
      double cycles = std::round(tau * fc - base);
      if (base + cycles < 0.0) cycles = std::ceil(-base);
      tau = (base + cycles) / fc;
    }
    Raw raw;
    raw.amp = std::abs(dtft(tau));
    raw.path = {dir.elevation_deg, dir.azimuth_deg, 0.0, std::max(0.0, tau), paths[l].prominence_db};
    kept.push_back(raw);
  }

  double sum_sq = 0.0;
  for (const auto& r : kept) sum_sq += r.amp * r.amp;
  const double norm = p_total > 0.0 ? p_total : sum_sq;
  double total = 0.0;
  for (auto& r : kept) {
    r.path.amplitude = norm > 0.0 ? r.amp / std::sqrt(norm) : 0.0;
    total += r.path.amplitude * r.path.amplitude;
  }
  if (total > 1.0) {
    const double s = 1.0 / std::sqrt(total);
    for (auto& r : kept) r.path.amplitude *= s;
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Raw& x, const Raw& y) { return x.path.amplitude > y.path.amplitude; });
  for (const auto& r : kept) est.paths.push_back(r.path);
  return est;
}

PdsMatrix compute_pds(const ChannelResponses& responses, const OfdmNumerology& numerology) {
  const auto q = static_cast<std::size_t>(responses.h.rows());
  const auto n_sc = static_cast<std::size_t>(responses.h.cols());
  if (n_sc != numerology.num_subcarriers) {
    throw ValidationError("channel responses do not match the numerology");
  }
  PdsMatrix pds;
  pds.num_positions = q;
  pds.num_bins = n_sc;
  pds.delay_step_s = numerology.delay_step_s();
  pds.values.resize(q * n_sc);
  FftPlan inverse(n_sc, FftPlan::Direction::kInverse);
  CVec row(n_sc);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t i = 0; i < n_sc; ++i) {
      row[i] = responses.h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i));
    }
    inverse.execute(row, row);
    double* out = pds.values.data() + r * n_sc;
    double peak = 0.0;
    for (std::size_t n = 0; n < n_sc; ++n) {
      out[n] = std::norm(row[n]);
      peak = std::max(peak, out[n]);
    }
    if (!(peak > 0.0)) {
      throw ValidationError("all-zero channel response at position " + std::to_string(r));
    }
    for (std::size_t n = 0; n < n_sc; ++n) out[n] /= peak;
  }
  return pds;
}

PdsMatrix compute_pds(const SoundingCampaign& campaign) {
  return compute_pds(equalize(campaign), campaign.numerology);
}

EstimationResult estimate_psi(const SoundingCampaign& campaign, const EstimatorOptions& options) {
  campaign.validate();
  const double lambda = wavelength_m(campaign.carrier_hz);
  EstimationResult result;
  {
    const auto cov = SpatialCovariance::from_records(campaign.records, lambda);
    result.peaks = find_paths(cov, options, &result.pas);
  }
  result.psi.carrier_hz = campaign.carrier_hz;
  result.psi.grid_step_deg = options.grid.elevation_step_deg;
  if (result.peaks.empty()) {
    result.psi.warnings.push_back("no path found in the angular spectrum");
    return result;
  }
  const auto responses = equalize(campaign, options.sys_response_floor);
  const auto positions = campaign.positions();
  std::vector<Direction> dirs;
  for (const auto& p : result.peaks) dirs.push_back(p.direction);
  std::vector<CVec> weights;
  for (std::size_t l = 0; l < dirs.size(); ++l) {
    weights.push_back(zf_weights(dirs, l, positions, lambda));
  }
  result.psi = estimate_delay_amplitude(responses, campaign, weights, result.peaks, options);
  return result;
}

}  // namespace masim
