#include <benchmark/benchmark.h>

#include "masim/config.hpp"
#include "masim/covariance.hpp"
#include "masim/estimator.hpp"
#include "masim/powermeter.hpp"
#include "masim/signals.hpp"

using namespace masim;

static void BM_GainMap(benchmark::State& state) {
  const auto psi = reference_psi_27_5ghz();
  const auto region = ScenarioConfig::preset_27_5ghz().power_region;
  for (auto _ : state) benchmark::DoNotOptimize(gain_map(psi, region));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(region.size()));
}
BENCHMARK(BM_GainMap)->Unit(benchmark::kMillisecond);

static void BM_MeasurePower(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  IQRecord rec{{0, 0}, gen_tone(12.5e6, n, 1.0 / 400e6), 1.0 / 400e6, 0};
  PowerMeter meter(default_fft_size(n));
  for (auto _ : state) benchmark::DoNotOptimize(meter.measure(rec, 12.5e6));
}
BENCHMARK(BM_MeasurePower)->Arg(1024)->Arg(4096)->Arg(16384);

// Spectrum over the full half-degree grid from a synthetic n x n lattice.
static void BM_Pas(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto psi = reference_psi_27_5ghz();
  std::vector<Position> pos;
  for (std::size_t ix = 0; ix < n; ++ix) {
    for (std::size_t iy = 0; iy < n; ++iy) pos.push_back({ix * 1e-3, iy * 1e-3});
  }
  const double lambda = psi.wavelength_m();
  Eigen::MatrixXcd f(pos.size(), psi.paths.size());
  for (std::size_t l = 0; l < psi.paths.size(); ++l) {
    const CVec v = array_response(psi.paths[l].elevation_deg, psi.paths[l].azimuth_deg, pos, lambda);
    for (std::size_t q = 0; q < pos.size(); ++q) f(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) = v[q];
  }
  const SpatialCovariance cov(pos, f * f.adjoint(), lambda);
  const AngleGrid grid;
  for (auto _ : state) benchmark::DoNotOptimize(cov.pas(grid));
}
BENCHMARK(BM_Pas)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);

static void BM_GenOfdm(benchmark::State& state) {
  OfdmNumerology num;
  num.num_symbols = 1;
  for (auto _ : state) benchmark::DoNotOptimize(gen_ofdm(num, 7));
}
BENCHMARK(BM_GenOfdm)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
