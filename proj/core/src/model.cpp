#include "ccpa/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ccpa/csv.hpp"

namespace ccpa {

static bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void SystemConfig::validate() const {
  if (users < 1) throw std::invalid_argument("users must be >= 1");
  if (rx_antennas < 1) throw std::invalid_argument("rx_antennas must be >= 1");
  if (!is_pow2(bins) || bins < 2) throw std::invalid_argument("bins must be a power of two >= 2");
  if (bits_per_symbol != 2 && bits_per_symbol != 4)
    throw std::invalid_argument("bits_per_symbol must be 2 (QPSK) or 4 (16QAM)");
  if (taps < 1 || taps > bins) throw std::invalid_argument("taps must satisfy 1 <= N_L <= N_F");
  if (!(code_rate > 0.0 && code_rate <= 1.0)) throw std::invalid_argument("code_rate must be in (0,1]");
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be > 0");
}

static ChannelRealization draw_channel(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ChannelRealization chan;
  chan.users = cfg.users;
  chan.rx_antennas = cfg.rx_antennas;
  chan.bins = cfg.bins;
  chan.taps = cfg.taps;
  chan.tap_gains.resize(static_cast<std::size_t>(cfg.users) * cfg.rx_antennas * cfg.taps);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 / cfg.taps));
  for (int u = 0; u < cfg.users; ++u)
    for (int r = 0; r < cfg.rx_antennas; ++r)
      for (int l = 0; l < cfg.taps; ++l) {
        double re = gauss(rng);
        double im = gauss(rng);
        chan.tap(u, r, l) = cplx(re, im);
      }
  fill_freq_response(chan);
  return chan;
}

ChannelRealization gen_static_channel(const SystemConfig& cfg, std::uint64_t seed) {
  return draw_channel(cfg, seed);
}

ChannelRealization gen_rayleigh_channel(const SystemConfig& cfg, std::uint64_t seed) {
  return draw_channel(cfg, seed);
}

void dft(std::vector<cplx>& x, bool inverse, bool unitary) {
  const std::size_t n = x.size();
  if (!is_pow2(static_cast<int>(n))) throw std::invalid_argument("dft length must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        cplx a = x[i + j];
        cplx b = x[i + j + len / 2] * w;
        x[i + j] = a + b;
        x[i + j + len / 2] = a - b;
        w *= wlen;
      }
    }
  }
  if (unitary) {
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : x) v *= s;
  } else if (inverse) {
    const double s = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= s;
  }
}

void dft(Eigen::VectorXcd& x, bool inverse, bool unitary) {
  std::vector<cplx> tmp(x.data(), x.data() + x.size());
  dft(tmp, inverse, unitary);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = tmp[static_cast<std::size_t>(i)];
}

void fill_freq_response(ChannelRealization& chan) {
  if (chan.taps > chan.bins) throw std::invalid_argument("taps exceed bins");
  chan.freq.assign(static_cast<std::size_t>(chan.users) * chan.bins,
                   Eigen::VectorXcd::Zero(chan.rx_antennas));
  std::vector<cplx> buf(static_cast<std::size_t>(chan.bins));
  for (int u = 0; u < chan.users; ++u)
    for (int r = 0; r < chan.rx_antennas; ++r) {
      std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
      for (int l = 0; l < chan.taps; ++l) buf[static_cast<std::size_t>(l)] = chan.tap(u, r, l);
      dft(buf, /*inverse=*/false, /*unitary=*/false);
      for (int m = 0; m < chan.bins; ++m)
        chan.freq[static_cast<std::size_t>(u) * chan.bins + m][r] = buf[static_cast<std::size_t>(m)];
    }
}

double snr_db(const PowerAllocation& p, const SystemConfig& cfg) {
  if (!(cfg.noise_var > 0.0)) throw std::invalid_argument("noise_var must be > 0");
  const double total = p.sum();
  if (total <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(total / (cfg.rx_antennas * static_cast<double>(cfg.bins) * cfg.noise_var));
}

void save_channel_csv(const ChannelRealization& chan, const std::string& path) {
  csvio::Table t;
  t.comments = {"channel realization",
                "users=" + std::to_string(chan.users),
                "antennas=" + std::to_string(chan.rx_antennas),
                "bins=" + std::to_string(chan.bins),
                "taps=" + std::to_string(chan.taps)};
  t.header = {"user", "antenna", "tap", "re", "im"};
  for (int u = 0; u < chan.users; ++u)
    for (int r = 0; r < chan.rx_antennas; ++r)
      for (int l = 0; l < chan.taps; ++l) {
        cplx h = chan.tap(u, r, l);
        t.rows.push_back({std::to_string(u), std::to_string(r), std::to_string(l),
                          csvio::fmt(h.real()), csvio::fmt(h.imag())});
      }
  csvio::write(path, t);
}

ChannelRealization load_channel_csv(const std::string& path) {
  csvio::Table t = csvio::read(path);
  ChannelRealization chan;
  int bins = 0;
  for (const auto& c : t.comments) {
    auto grab = [&](const char* key) -> int {
      std::string k(key);
      if (c.rfind(k, 0) == 0) return std::stoi(c.substr(k.size()));
      return -1;
    };
    if (int v = grab("users="); v >= 0) chan.users = v;
    if (int v = grab("antennas="); v >= 0) chan.rx_antennas = v;
    if (int v = grab("bins="); v >= 0) bins = v;
    if (int v = grab("taps="); v >= 0) chan.taps = v;
  }
  if (chan.users <= 0 || chan.rx_antennas <= 0 || bins <= 0 || chan.taps <= 0)
    throw std::runtime_error("channel csv missing dimension metadata: " + path);
  chan.bins = bins;
  chan.tap_gains.assign(static_cast<std::size_t>(chan.users) * chan.rx_antennas * chan.taps,
                        cplx(0.0, 0.0));
  for (const auto& row : t.rows) {
    if (row.size() != 5) throw std::runtime_error("bad channel csv row in " + path);
    chan.tap(std::stoi(row[0]), std::stoi(row[1]), std::stoi(row[2])) =
        cplx(std::stod(row[3]), std::stod(row[4]));
  }
  fill_freq_response(chan);
  return chan;
}

}  // namespace ccpa
