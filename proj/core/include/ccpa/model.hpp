// System dimensions, channel generation and frequency-domain channel
// representation for the DFT-precoded multiuser uplink.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccpa {

using cplx = std::complex<double>;

// Per-user per-bin transmit powers, users on rows, bins on columns.
using PowerAllocation = Eigen::MatrixXd;

struct SystemConfig {
  int users = 2;
  int rx_antennas = 2;
  int bins = 8;             // N_F, power of two
  int bits_per_symbol = 2;  // 2 = QPSK, 4 = 16QAM
  int taps = 5;             // N_L
  double code_rate = 1.0 / 3.0;
  double noise_var = 1.0;   // sigma^2, linear
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Time-domain taps and the per-bin frequency response vectors gamma_{u,m}.
//
// Convention: gamma_{u,m}[r] = sum_l h_{u,l}^r exp(-i 2 pi (m-1)(l-1) / N_F),
// i.e. the unnormalized forward DFT of the zero-padded tap sequence. Symbol
// spreading elsewhere uses the unitary DFT, so Parseval reads
// sum_m ||gamma_{u,m}||^2 = N_F * sum_{r,l} |h_{u,l}^r|^2.
struct ChannelRealization {
  int users = 0;
  int rx_antennas = 0;
  int bins = 0;
  int taps = 0;
  std::vector<cplx> tap_gains;            // [u][r][l], row-major
  std::vector<Eigen::VectorXcd> freq;     // [u][m], each of length rx_antennas

  cplx tap(int u, int r, int l) const {
    return tap_gains[(static_cast<std::size_t>(u) * rx_antennas + r) * taps + l];
  }
  cplx& tap(int u, int r, int l) {
    return tap_gains[(static_cast<std::size_t>(u) * rx_antennas + r) * taps + l];
  }
  const Eigen::VectorXcd& gamma(int u, int m) const {
    return freq[static_cast<std::size_t>(u) * bins + m];
  }
};

// Both generators draw taps i.i.d. CN(0, 1/N_L) (unit average channel energy).
// The static ensemble reuses one fixed seed; the Rayleigh ensemble draws a
// fresh realization per block by advancing the seed.
ChannelRealization gen_static_channel(const SystemConfig& cfg, std::uint64_t seed);
ChannelRealization gen_rayleigh_channel(const SystemConfig& cfg, std::uint64_t seed);

// Recomputes `freq` from `tap_gains` per the convention above.
void fill_freq_response(ChannelRealization& chan);

// SNR per receive antenna averaged over bins: tr{P} / (N_R N_F sigma^2) in dB.
// All-zero power returns -infinity.
double snr_db(const PowerAllocation& p, const SystemConfig& cfg);

// In-place radix-2 FFT. `unitary` applies 1/sqrt(N); otherwise the forward
// transform is unnormalized and the inverse carries 1/N.
void dft(std::vector<cplx>& x, bool inverse, bool unitary);
void dft(Eigen::VectorXcd& x, bool inverse, bool unitary);

// CSV schema: header `user,antenna,tap,re,im`, one row per tap gain.
void save_channel_csv(const ChannelRealization& chan, const std::string& path);
ChannelRealization load_channel_csv(const std::string& path);

}  // namespace ccpa
