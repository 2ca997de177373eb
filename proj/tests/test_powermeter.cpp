#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "masim/campaign.hpp"
#include "masim/config.hpp"
#include "masim/powermeter.hpp"

using namespace masim;

namespace {

constexpr double kT = 1.0 / 400e6;

IQRecord tone_record(double f0, std::size_t n, cplx h, double pt = 1.0, double noise = 0.0,
                     std::uint64_t seed = 0) {
  auto x = gen_tone(f0, n, kT);
  for (auto& v : x) v *= h * std::sqrt(pt);
  return {{0.0, 0.0}, add_noise(x, NoiseSpec{noise}, seed), kT, seed};
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

}  // namespace

TEST_CASE("zero_pad") {
  const CVec x{1.0, 2.0};
  CHECK(zero_pad(x, 2) == x);
  CHECK(zero_pad(x, 4) == CVec{1.0, 2.0, 0.0, 0.0});
  CHECK_THROWS_AS(zero_pad(x, 1), ValidationError);
  CHECK(default_fft_size(4096) == 32768);
  CHECK(default_fft_size(1000) == 8192);
}

TEST_CASE("on-bin tone") {
  const double f0 = 1024.0 / (32768 * kT);
  const auto m = measure_power(tone_record(f0, 4096, 1.0), f0);
  CHECK(m.fft_size == 32768);
  CHECK(m.peak_bin == 1024);
  CHECK(m.power_linear == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(m.power_db) < 1e-8);

  const cplx h = std::polar(std::sqrt(0.5), 1.1);
  CHECK(measure_power(tone_record(f0, 4096, h, 2.0), f0).power_linear ==
        doctest::Approx(1.0).epsilon(1e-9));

  // negative tone lands in the upper half of the spectrum
  const auto neg = measure_power(tone_record(-f0, 4096, 1.0), -f0);
  CHECK(neg.peak_bin == 32768 - 1024);
  CHECK(neg.power_linear == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("off-bin scalloping") {
  const std::size_t N = 4096, Ns = 8 * N;
  const double f0 = 1024.5 / (Ns * kT);
  const auto m = measure_power(tone_record(f0, N, 1.0), f0, Ns);
  const double kh = static_cast<double>(m.peak_bin);
  const double s = sinc(static_cast<double>(N) / Ns * kh - N * kT * f0);
  CHECK(std::abs(m.power_linear - s * s) < 1e-6);
  CHECK(m.power_linear < 0.99);

  // same bin from a direct single-bin DFT in extended precision
  std::complex<long double> acc = 0.0L;
  const auto x = gen_tone(f0, N, kT);
  for (std::size_t n = 0; n < N; ++n) {
    const long double ph = -2.0L * 3.141592653589793238462643383279L *
                           static_cast<long double>((m.peak_bin * n) % Ns) / Ns;
    acc += std::complex<long double>(x[n].real(), x[n].imag()) *
           std::complex<long double>(cosl(ph), sinl(ph));
  }
  const double direct = static_cast<double>(std::norm(acc) / (N * static_cast<long double>(N)));
  CHECK(m.power_linear == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("scale equivariance and window length") {
  const double f0 = 1000.0 / (32768 * kT);
  auto rec = tone_record(f0, 4096, {0.3, -0.2}, 1.0, 0.01, 4);
  const double p = measure_power(rec, f0).power_linear;
  for (auto& v : rec.samples) v *= 3.0;
  CHECK(measure_power(rec, f0).power_linear == doctest::Approx(9.0 * p).epsilon(1e-12));

  const double a = measure_power(tone_record(f0, 4096, 0.7), f0).power_linear;
  const double b = measure_power(tone_record(f0, 8192, 0.7), f0).power_linear;
  CHECK(a == doctest::Approx(0.49).epsilon(1e-9));
  CHECK(b == doctest::Approx(a).epsilon(1e-9));
}

TEST_CASE("estimator variance shrinks with N") {
  const std::size_t ladder[4] = {256, 1024, 4096, 16384};
  const double f0 = 12.5e6;
  double prev = 1e300;
  for (std::size_t n : ladder) {
    PowerMeter meter(default_fft_size(n));
    double s = 0.0, s2 = 0.0;
    const int trials = 200;
    for (int k = 0; k < trials; ++k) {
      const double p = meter.measure(tone_record(f0, n, 1.0, 1.0, 1.0, 1000 + k), f0).power_linear;
      s += p;
      s2 += p * p;
    }
    const double var = s2 / trials - (s / trials) * (s / trials);
    CHECK(var < prev);
    prev = var;
  }
}

TEST_CASE("tone_bin and meter errors") {
  CHECK(tone_bin(12.5e6, kT, 32768) == 1024);
  CHECK_THROWS_AS(tone_bin(250e6, kT, 32768), ValidationError);
  CHECK_THROWS_AS(measure_power(tone_record(1e6, 4096, 1.0), 1e6, 1024), ValidationError);
}

TEST_CASE("sweep_measure") {
  const double f0 = 12.5e6;
  std::vector<IQRecord> one{tone_record(f0, 1024, 1.0)};
  const auto map = sweep_measure(one, f0);
  REQUIRE(map.points.size() == 1);
  CHECK(map.points[0].power_linear == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<IQRecord> mixed{tone_record(f0, 1024, 1.0), tone_record(f0, 2048, 1.0)};
  CHECK_THROWS_AS(sweep_measure(mixed, f0), ValidationError);

  std::ostringstream os;
  write_power_csv(map, os);
  CHECK(os.str().rfind("x_m,y_m,power_dbr\n", 0) == 0);
}

TEST_CASE("3.5 GHz line campaign against the gain map") {
  auto cfg = ScenarioConfig::preset_3_5ghz();
  cfg.samples_per_measurement = 1024;
  cfg.tx_power_rel = 4.0;
  auto psi = reference_psi_3_5ghz();
  psi.large_scale_gain = 0.5;
  const auto gain = gain_map(psi, cfg.power_region);
  const double offset = 10.0 * std::log10(0.5 * 4.0);

  const auto clean = measure_tone_sweep(cfg, psi);
  REQUIRE(clean.points.size() == gain.size());
  for (std::size_t i = 0; i < gain.size(); ++i) {
    CHECK(clean.points[i].position == gain.position(i));
    CHECK(std::abs(clean.points[i].power_db - to_db(gain.gain[i]) - offset) < 1e-9);
  }

  cfg.tx_power_rel = 1.0;
  psi.large_scale_gain = 1.0;
  cfg.noise_power_rel = 0.01;  // 20 dB below the unit mean received power
  const auto noisy = measure_tone_sweep(cfg, psi);
  std::size_t within = 0;
  for (std::size_t i = 0; i < gain.size(); ++i) {
    if (std::abs(noisy.points[i].power_db - to_db(gain.gain[i])) < 0.5) ++within;
  }
  CHECK(static_cast<double>(within) >= 0.99 * gain.size());
}
