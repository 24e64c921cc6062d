// Reference allocators: exhaustive orthogonal bin search, spatial zero
// forcing with per-user loading, and equal-power bisection.
#pragma once

#include <vector>

#include "ccpa/exitlab.hpp"
#include "ccpa/model.hpp"
#include "ccpa/optim.hpp"

namespace ccpa {

struct OrthogonalAssignment {
  std::vector<std::vector<int>> bins;  // bins[u] = bins owned by user u, disjoint
};

// Minimum total power on a user's private bins: minimize sum P_m subject to
// (1/total_bins) sum_m P_m g_m / (P_m g_m delta_k + noise_var) >= xi_k for all
// k. `gains` holds g_m = ||gamma_m||^2 (or an effective scalar gain) for the
// assigned bins only. Throws InfeasibleProblem when no finite power works.
Eigen::VectorXd single_user_loading(const Eigen::VectorXd& gains, int total_bins,
                                    const Eigen::VectorXd& xi, const Eigen::VectorXd& delta,
                                    double noise_var);

struct OesResult {
  bool feasible = false;
  OrthogonalAssignment assignment;
  PowerAllocation p;
  double total_power = 0.0;
};

// Exhaustive search over bin partitions; assignments failing the bin-count
// bound |bins_u| > xi_{u,k} N_F delta_{u,k} for some k are pruned before
// loading. Guarded to at most 10^6 assignments.
OesResult oes_allocate(const ChannelRealization& chan, const ConvergenceSpec& spec,
                       double noise_var);

// Per-bin receive zero forcing (needs N_R >= U) followed by interference-free
// single-user loading with effective gains 1 / ||w_{u,m}||^2.
PowerAllocation zf_scmmse(const ChannelRealization& chan, const ConvergenceSpec& spec,
                          double noise_var);

// Smallest uniform power meeting every constraint under exact MMSE filtering.
// Throws InfeasibleProblem when the SINR saturates below a target
// (interference-limited scenario).
double ep_bisection(const ChannelRealization& chan, const ConvergenceSpec& spec, double noise_var,
                    double tol = 1e-9);

}  // namespace ccpa
