// Frequency-domain soft-cancellation MMSE receiver: per-bin interference
// covariance, MMSE receive filters, effective SINR and the full turbo
// equalization chain.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ccpa/codec.hpp"
#include "ccpa/model.hpp"

namespace ccpa {

// Covariance of the soft-cancelled signal at bin m:
//   Sigma = sum_l P(l,m) gamma_{l,m} gamma_{l,m}^H delta[l] + noise_var I.
Eigen::MatrixXcd interference_covariance(const PowerAllocation& p, const ChannelRealization& chan,
                                         int m, const Eigen::VectorXd& delta, double noise_var);

// Residual-interference levels used when forming the covariance for user u at
// MI index k: entry (k, l) of per-user matrix [u].
using DeltaTensor = std::vector<Eigen::MatrixXd>;

struct ReceiveFilters {
  int users = 0, bins = 0, num_indices = 0;
  std::vector<Eigen::VectorXcd> w;  // [(u * K + k) * N_F + m]
  Eigen::MatrixXd eta;              // (users x K) demapper scaling 1/(avg{b..}zeta + 1)
  Eigen::MatrixXd zeta;             // (users x K) effective SINR at construction

  const Eigen::VectorXcd& omega(int u, int k, int m) const {
    return w[(static_cast<std::size_t>(u) * num_indices + k) * bins + m];
  }
};

// omega_{u,m}^k = eta * Sigma^{-1} gamma sqrt(P); SINR is scale invariant so it
// is computed with eta = 1 first and eta applied afterwards.
ReceiveFilters mmse_filters(const PowerAllocation& p, const ChannelRealization& chan,
                            const DeltaTensor& delta, double noise_var);

// Effective SINR zeta_u from explicit filters, Eq.-(10)-style ratio averaged
// over bins.
double effective_sinr(const PowerAllocation& p, const ReceiveFilters& filters,
                      const ChannelRealization& chan, const Eigen::VectorXd& delta,
                      double noise_var, int u, int k);

// Closed covariance form: (1/N_F) sum_m P(u,m) gamma^H Sigma^{-1} gamma.
// Equals effective_sinr for MMSE-constructed filters.
double mmse_sinr(const PowerAllocation& p, const ChannelRealization& chan,
                 const Eigen::VectorXd& delta, double noise_var, int u);

// Per-bin zero-forcing beamformers (N_R >= U): column u of the returned matrix
// satisfies w_u^H gamma_{l,m} = delta_{ul}. Throws on rank deficiency.
Eigen::MatrixXcd zf_rows(const ChannelRealization& chan, int m);

struct TrajectoryRecord {
  struct Row {
    int iter = 0, user = 0;
    double i_eq = 0.0, i_dec = 0.0, ber = 0.0;
    // Measured residual interference of this user's feedback going into the
    // iteration (1 at the first iteration, 0 at perfect feedback).
    double delta = 0.0;
  };
  std::vector<Row> rows;
};

struct TurboOptions {
  int turbo_iters = 10;
  int decoder_iters = 8;
  bool noiseless = false;
  // If > 0, initial decoder feedback is +-value at the true coded bits.
  double perfect_apriori = 0.0;
  // Called once per (iteration, user) with the equalizer extrinsic LLRs in
  // interleaved (transmission) order.
  std::function<void(int iter, int user, const std::vector<double>& eq_extrinsic)> observer;
};

struct TurboResult {
  std::vector<std::vector<std::uint8_t>> info_bits;  // transmitted, per user
  std::vector<std::vector<std::uint8_t>> info_hat;   // decoded, per user
  TrajectoryRecord trajectory;
};

// Simulates num_blocks SC-FDMA blocks through the frequency-domain channel and
// runs the soft-cancellation MMSE turbo loop. Per-iteration residual
// interference is measured from the actual soft symbols. The coded frame spans
// the whole simulation (interleaver size N_Q * N_F * num_blocks), so
// num_blocks must make that divisible by 3 for the rate-1/3 code.
TurboResult turbo_equalize(const SystemConfig& cfg, const ChannelRealization& chan,
                           const PowerAllocation& p, Modulation mod, int num_blocks,
                           const TurboOptions& opt, std::uint64_t seed);

void save_trajectory_csv(const TrajectoryRecord& traj, const std::string& path);

}  // namespace ccpa
