// Mutual-information machinery: J-function pair, residual interference,
// decoder transfer curves, convergence constraint sampling, SINR targets and
// the semi-analytic equalizer output prediction.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccpa/codec.hpp"
#include "ccpa/model.hpp"
#include "ccpa/receiver.hpp"

namespace ccpa {

struct InfeasibleTarget : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// I = (1 - 2^{-h1 sigma2^h2})^h3. Defaults are least-squares fits of the
// demapper LLR mutual information under Gaussian a priori-free reception
// (see fit_j_params); regenerable with the fit-j tool.
struct JParams {
  double h1 = 0.0, h2 = 0.0, h3 = 0.0;
};

JParams default_j_params(Modulation mod);

double j_forward(double sigma2, const JParams& p);
// Throws InfeasibleTarget for mi >= 1.
double j_inverse(double mi, const JParams& p);

// Nodes and weights for integrating f against exp(-x^2) on the real line.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Mutual information of the demapper LLR channel when the equalizer output is
// symbol + CN(0, nu) with nu = 4 / sigma2 and no a priori, evaluated by
// Gauss-Hermite quadrature. This is the reference curve the J fit targets.
double ccc_mi(double sigma2, Modulation mod);

struct JFit {
  JParams params;
  double max_residual = 0.0;
};
// Least-squares fit of JParams to a (sigma2, MI) table, Nelder-Mead on the
// log-parameters.
JFit fit_j_to_table(const std::vector<double>& sigma2, const std::vector<double>& mi, JParams init);
// Fit against ccc_mi over a log-spaced sigma2 grid. Throws std::runtime_error
// if the residual exceeds 0.02.
JFit fit_j_params(Modulation mod);

// Average residual interference 1 - E|soft symbol|^2 under Gaussian
// consistent bit LLRs of variance j2_inverse(mi).
double residual_interference(double mi, Modulation mod);

struct DecoderExitCurve {
  std::vector<double> grid;    // a priori MI
  std::vector<double> output;  // extrinsic MI, nondecreasing
  int blocks = 0;
  int block_bits = 0;
};

// Draws consistent Gaussian a priori LLRs of variance sigma2 for the given
// bits: lambda ~ N(+-sigma2/2, sigma2).
std::vector<double> gaussian_apriori_llrs(const std::vector<std::uint8_t>& bits, double sigma2,
                                          std::uint64_t seed);

// Monte Carlo decoder transfer curve: for each grid point, `blocks` codewords
// of `block_bits` coded bits each, a priori per gaussian_apriori_llrs with
// sigma2 = J2^{-1}(I_A), extrinsic MI by the averaging estimator. A final
// isotonic pass enforces monotonicity.
DecoderExitCurve measure_decoder_exit(const std::vector<double>& grid, int blocks, int block_bits,
                                      int decoder_iters, std::uint64_t seed);

// Piecewise-linear inverse of the curve. Throws InfeasibleTarget when the
// requested output exceeds the curve's maximum.
double invert_decoder_curve(const DecoderExitCurve& curve, double target_output);

void save_decoder_curve_csv(const DecoderExitCurve& curve, const std::string& path);
DecoderExitCurve load_decoder_curve_csv(const std::string& path);

enum class SamplingMode { diagonal, worst_case };

struct UserTarget {
  double dec_target = 0.0;  // decoder output MI the trajectory must reach
  double eq_target = 0.0;   // equalizer output MI floor at the last point
  double eps = 0.1;         // tunnel gap below the last point
};

// Per-user sampled convergence constraints.
struct ConvergenceSpec {
  SamplingMode mode = SamplingMode::diagonal;
  Modulation mod = Modulation::qpsk;
  Eigen::MatrixXd mi_grid;    // (users x K) decoder MI points, last = target
  Eigen::MatrixXd eps;        // (users x K), last column zero
  Eigen::MatrixXd delta_bar;  // (users x K) own residual interference
  Eigen::MatrixXd xi;         // (users x K) SINR targets
  Eigen::MatrixXd sigma2;     // (users x K) required LLR variance

  int users() const { return static_cast<int>(xi.rows()); }
  int points() const { return static_cast<int>(xi.cols()); }
  // Residual interference of interferer l in user u's constraint k.
  double delta_for(int u, int k, int l) const {
    if (l == u) return delta_bar(u, k);
    return mode == SamplingMode::worst_case ? 1.0 : delta_bar(l, k);
  }
  // Full delta tensor in the receiver module's layout.
  DeltaTensor delta_tensor() const;
};

// K points uniform in MI from 0 to the decoder target inclusive (K = 1 keeps
// only the zero-feedback point). sigma2(u,k) = Jinv(max(finv(I_k) + eps_k,
// k==K-1 ? eq_target : 0)), eps zero at the last point; xi = s2/(4 + s2*delta).
ConvergenceSpec build_convergence_spec(const std::vector<UserTarget>& targets, int k_points,
                                       const std::vector<DecoderExitCurve>& curves, Modulation mod,
                                       SamplingMode mode);

void save_spec_csv(const ConvergenceSpec& spec, const std::string& path);

// P_b ~ 0.5 erfc(sqrt(J2inv(i_apriori) + J2inv(i_extrinsic)) / (2 sqrt(2))).
double bep_from_mi(double i_apriori, double i_extrinsic);

// Predicted equalizer output MI for user u at constraint point k: MMSE SINR,
// sigma_hat^2 = 4 zeta / (1 - zeta delta), then the modulation's J.
double semi_analytic_exit(const PowerAllocation& p, const ChannelRealization& chan,
                          const ConvergenceSpec& spec, double noise_var, int u, int k);

}  // namespace ccpa
