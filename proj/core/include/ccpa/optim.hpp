// Minimum-power allocation under sampled convergence constraints: log-barrier
// convex solver, the two successive-approximation subproblem builders and the
// alternating transmitter-receiver loop.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "ccpa/exitlab.hpp"
#include "ccpa/model.hpp"
#include "ccpa/receiver.hpp"

namespace ccpa {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleProblem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluator returns the value and, when the pointers are non-null, adds its
// nonzero gradient entries into *grad (pre-zeroed by the caller) and appends
// Hessian entries as triplets. Sparse Hessians keep the barrier assembly
// proportional to the number of nonzeros.
using HessTriplets = std::vector<Eigen::Triplet<double>>;
using SmoothFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*, HessTriplets*)>;

struct ConvexNLP {
  int n = 0;
  SmoothFn objective;
  std::vector<SmoothFn> constraints;  // g_i(x) <= 0
  // Optional variable support per constraint (same order); the solver uses it
  // to keep gradient outer products proportional to the support size.
  std::vector<std::vector<int>> support;
};

struct BarrierOptions {
  double mu0 = 1.0;
  double mu_factor = 10.0;
  double newton_tol = 1e-9;
  double duality_tol = 1e-8;
  int max_newton = 200;
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int newton_steps = 0;
};

// Interior-point minimization; x0 must satisfy every constraint strictly.
// Throws SolverFailure on stalls and std::invalid_argument on infeasible x0.
BarrierResult barrier_solve(const ConvexNLP& nlp, const Eigen::VectorXd& x0,
                            const BarrierOptions& opt = {});

// Per-(user, point, bin) quantities fixed by a set of receive filters:
// gain[u*K+k](n, l) = |omega_{u,n,k}^H gamma_{l,n}|^2 and
// noise[u*K+k](n) = noise_var * ||omega_{u,n,k}||^2.
struct FilterCoeffs {
  int users = 0, bins = 0, points = 0;
  std::vector<Eigen::MatrixXd> gain;
  std::vector<Eigen::VectorXd> noise;

  const Eigen::MatrixXd& g(int u, int k) const { return gain[static_cast<std::size_t>(u) * points + k]; }
  const Eigen::VectorXd& nv(int u, int k) const { return noise[static_cast<std::size_t>(u) * points + k]; }
};

FilterCoeffs filter_coeffs(const ReceiveFilters& filters, const ChannelRealization& chan,
                           double noise_var);

// Per-bin SINR term of user u at point k: t_n = P(u,n) g(n,u) /
// (sum_l P(l,n) g(n,l) delta(u,k,l) + noise(n)); zeta = avg_n t_n.
Eigen::VectorXd bin_sinr_terms(const PowerAllocation& p, const FilterCoeffs& coeffs,
                               const ConvergenceSpec& spec, int u, int k);
double sinr_given_filters(const PowerAllocation& p, const FilterCoeffs& coeffs,
                          const ConvergenceSpec& spec, int u, int k);

// Smallest slack of the exact constraints zeta_{u,k} / xi_{u,k} - 1 under the
// given filters (fresh MMSE filters when coeffs is null).
double min_constraint_slack(const PowerAllocation& p, const ChannelRealization& chan,
                            const ConvergenceSpec& spec, double noise_var,
                            const FilterCoeffs* coeffs = nullptr);

enum class ScaMethod { scavc, scagp };

// Subproblem builders around the linearization point t_hat (one (bins) vector
// per (u, k), strictly positive where the bin is usable).
// SCAVC: variables [alpha = ln P | t], objective sum exp(alpha), the per-bin
// SINR equation relaxed through Y(t, t_hat) = ln t_hat + (t - t_hat)/t_hat.
// SCAGP: variables [ln P | ln t], the sum over t condensed to a monomial with
// weights t_hat / sum t_hat.
ConvexNLP build_scavc(const FilterCoeffs& coeffs, const ConvergenceSpec& spec,
                      const std::vector<Eigen::VectorXd>& t_hat);
ConvexNLP build_scagp(const FilterCoeffs& coeffs, const ConvergenceSpec& spec,
                      const std::vector<Eigen::VectorXd>& t_hat);

struct ScaDiagnostics {
  int inner_iters = 0;
  int newton_steps = 0;
  std::vector<double> objective_history;  // total power after each iteration
};

// Algorithm: solve the convex surrogate, move t_hat to the exact per-bin SINR
// terms at the new allocation, repeat until the power change is below tol.
// p0 must satisfy the exact constraints strictly.
PowerAllocation sca_solve(ScaMethod method, const FilterCoeffs& coeffs, const ConvergenceSpec& spec,
                          const PowerAllocation& p0, double tol, ScaDiagnostics* diag = nullptr);

struct OptimizeResult {
  PowerAllocation p;
  ReceiveFilters filters;
  int outer_iters = 0;
  std::vector<int> inner_iters;
  std::vector<double> objective_history;
  double snr_db = 0.0;
};

// Zero-forcing initialization: per-user uniform power bisected to meet every
// point with a 10% margin (equal-power multiuser bisection when U > N_R).
// Throws InfeasibleProblem when no finite power works.
PowerAllocation feasible_init(const ChannelRealization& chan, const ConvergenceSpec& spec,
                              double noise_var);

// Alternating receiver/transmitter optimization: MMSE filters for fixed P,
// then sca_solve for fixed filters, until the total power change <= outer_tol.
OptimizeResult alternating_optimize(const SystemConfig& cfg, const ChannelRealization& chan,
                                    const ConvergenceSpec& spec, ScaMethod method,
                                    double outer_tol = 0.05, double inner_tol = 0.01,
                                    int max_outer = 50);

}  // namespace ccpa
