#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "ccpa/model.hpp"

using namespace ccpa;

namespace {

SystemConfig base_config() {
  SystemConfig cfg;
  cfg.users = 2;
  cfg.rx_antennas = 2;
  cfg.bins = 8;
  cfg.taps = 5;
  cfg.noise_var = 1.0;
  return cfg;
}

// Direct O(N_F * N_L) evaluation of the transform convention.
cplx naive_freq(const ChannelRealization& chan, int u, int r, int m) {
  cplx acc(0.0, 0.0);
  for (int l = 0; l < chan.taps; ++l) {
    double ang = -2.0 * std::numbers::pi * m * l / chan.bins;
    acc += chan.tap(u, r, l) * cplx(std::cos(ang), std::sin(ang));
  }
  return acc;
}

}  // namespace

TEST_CASE("config validation rejects bad dimensions") {
  SystemConfig cfg = base_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.bins = 6;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.bits_per_symbol = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.taps = 9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = base_config();
  cfg.noise_var = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("single tap gives a flat frequency response") {
  SystemConfig cfg = base_config();
  cfg.taps = 1;
  ChannelRealization chan = gen_static_channel(cfg, 42);
  for (int u = 0; u < cfg.users; ++u) {
    double ref = std::abs(chan.gamma(u, 0)[0]);
    for (int m = 0; m < cfg.bins; ++m)
      for (int r = 0; r < cfg.rx_antennas; ++r)
        CHECK(std::abs(chan.gamma(u, m)[r]) == doctest::Approx(std::abs(chan.gamma(u, 0)[r])).epsilon(1e-12));
    CHECK(ref > 0.0);
  }
}

TEST_CASE("same seed reproduces the realization bitwise") {
  SystemConfig cfg = base_config();
  ChannelRealization a = gen_static_channel(cfg, 7);
  ChannelRealization b = gen_static_channel(cfg, 7);
  REQUIRE(a.tap_gains.size() == b.tap_gains.size());
  for (std::size_t i = 0; i < a.tap_gains.size(); ++i) CHECK(a.tap_gains[i] == b.tap_gains[i]);
  ChannelRealization c = gen_rayleigh_channel(cfg, 7);
  for (std::size_t i = 0; i < a.tap_gains.size(); ++i) CHECK(a.tap_gains[i] == c.tap_gains[i]);
}

TEST_CASE("tap statistics match the unit-energy profile over many draws") {
  SystemConfig cfg = base_config();
  double energy = 0.0, var = 0.0;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    ChannelRealization chan = gen_rayleigh_channel(cfg, 1000 + s);
    double e = 0.0;
    for (int l = 0; l < cfg.taps; ++l) e += std::norm(chan.tap(0, 0, l));
    energy += e;
    var += std::norm(chan.tap(0, 0, 0));
  }
  CHECK(energy / draws == doctest::Approx(1.0).epsilon(0.02));
  CHECK(var / draws == doctest::Approx(1.0 / cfg.taps).epsilon(0.02));
}

TEST_CASE("tap magnitudes are Rayleigh distributed") {
  // Kolmogorov-Smirnov against Rayleigh(sigma^2 = 1/(2 N_L)) on 10^4 draws.
  SystemConfig cfg = base_config();
  const int draws = 10000;
  std::vector<double> mags;
  mags.reserve(draws);
  for (int s = 0; s < draws; ++s)
    mags.push_back(std::abs(gen_rayleigh_channel(cfg, 50000 + s).tap(1, 0, 2)));
  std::sort(mags.begin(), mags.end());
  const double two_sigma2 = 1.0 / cfg.taps;
  double ks = 0.0;
  for (int i = 0; i < draws; ++i) {
    double cdf = 1.0 - std::exp(-mags[i] * mags[i] / two_sigma2);
    ks = std::max(ks, std::max(std::abs(cdf - (i + 1.0) / draws), std::abs(cdf - i * 1.0 / draws)));
  }
  // KS critical value at p = 0.01 for n = 10^4.
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("frequency response matches the direct transform sum") {
  SystemConfig cfg = base_config();
  ChannelRealization chan = gen_static_channel(cfg, 99);
  for (int u = 0; u < cfg.users; ++u)
    for (int r = 0; r < cfg.rx_antennas; ++r)
      for (int m = 0; m < cfg.bins; ++m)
        CHECK(std::abs(chan.gamma(u, m)[r] - naive_freq(chan, u, r, m)) < 1e-12);
}

TEST_CASE("delay tap gives unit magnitude and a phase ramp") {
  SystemConfig cfg = base_config();
  cfg.taps = 2;
  ChannelRealization chan = gen_static_channel(cfg, 1);
  chan.tap(0, 0, 0) = 0.0;
  chan.tap(0, 0, 1) = 1.0;
  fill_freq_response(chan);
  for (int m = 0; m < cfg.bins; ++m) {
    CHECK(std::abs(chan.gamma(0, m)[0]) == doctest::Approx(1.0).epsilon(1e-12));
    double expect = -2.0 * std::numbers::pi * m / cfg.bins;
    double got = std::arg(chan.gamma(0, m)[0]);
    CHECK(std::abs(std::remainder(got - expect, 2.0 * std::numbers::pi)) < 1e-12);
  }
}

TEST_CASE("Parseval relation between taps and frequency response") {
  SystemConfig cfg = base_config();
  ChannelRealization chan = gen_static_channel(cfg, 5);
  for (int u = 0; u < cfg.users; ++u) {
    double freq_energy = 0.0, tap_energy = 0.0;
    for (int m = 0; m < cfg.bins; ++m) freq_energy += chan.gamma(u, m).squaredNorm();
    for (int r = 0; r < cfg.rx_antennas; ++r)
      for (int l = 0; l < cfg.taps; ++l) tap_energy += std::norm(chan.tap(u, r, l));
    CHECK(freq_energy == doctest::Approx(cfg.bins * tap_energy).epsilon(1e-12));
  }
}

TEST_CASE("snr_db definition and monotonicity") {
  SystemConfig cfg = base_config();
  PowerAllocation p = PowerAllocation::Zero(cfg.users, cfg.bins);
  CHECK(snr_db(p, cfg) == -std::numeric_limits<double>::infinity());

  p.setConstant(1.0);  // total 16 = N_R * N_F * noise_var
  CHECK(snr_db(p, cfg) == doctest::Approx(0.0).epsilon(1e-12));

  cfg.noise_var = 0.1;
  CHECK(snr_db(p, cfg) == doctest::Approx(10.0).epsilon(1e-12));

  double prev = snr_db(p, cfg);
  for (int i = 0; i < 5; ++i) {
    p *= 1.7;
    double cur = snr_db(p, cfg);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("dft round trip and unitary scaling") {
  std::vector<cplx> x = {{1, 0}, {2, -1}, {0, 3}, {-1, 1}, {0.5, 0}, {0, 0}, {2, 2}, {-3, 0.25}};
  std::vector<cplx> orig = x;
  dft(x, false, true);
  double e0 = 0.0, e1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    e0 += std::norm(orig[i]);
    e1 += std::norm(x[i]);
  }
  CHECK(e0 == doctest::Approx(e1).epsilon(1e-12));
  dft(x, true, true);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - orig[i]) < 1e-12);
}

TEST_CASE("channel csv round trip") {
  SystemConfig cfg = base_config();
  ChannelRealization chan = gen_static_channel(cfg, 1234);
  auto path = std::filesystem::temp_directory_path() / "ccpa_chan_test.csv";
  save_channel_csv(chan, path.string());
  ChannelRealization back = load_channel_csv(path.string());
  REQUIRE(back.users == chan.users);
  REQUIRE(back.taps == chan.taps);
  for (int u = 0; u < cfg.users; ++u)
    for (int r = 0; r < cfg.rx_antennas; ++r)
      for (int l = 0; l < cfg.taps; ++l)
        CHECK(std::abs(back.tap(u, r, l) - chan.tap(u, r, l)) < 1e-10);
  std::filesystem::remove(path);
}
