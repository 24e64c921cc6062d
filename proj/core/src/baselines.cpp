#include "ccpa/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "ccpa/receiver.hpp"

namespace ccpa {

namespace {

// Bin-count feasibility: with unbounded power the k-th constraint saturates at
// |bins| / (N_F delta_k), so |bins| must exceed xi_k N_F delta_k.
bool loading_possible(int num_bins, int total_bins, const Eigen::VectorXd& xi,
                      const Eigen::VectorXd& delta) {
  for (int k = 0; k < xi.size(); ++k)
    if (num_bins <= xi[k] * total_bins * delta[k] * (1.0 + 1e-12)) return false;
  return num_bins > 0;
}

}  // namespace

Eigen::VectorXd single_user_loading(const Eigen::VectorXd& gains, int total_bins,
                                    const Eigen::VectorXd& xi, const Eigen::VectorXd& delta,
                                    double noise_var) {
  const int nb = static_cast<int>(gains.size());
  const int nk = static_cast<int>(xi.size());
  if (nb == 0) throw InfeasibleProblem("single_user_loading: empty bin set");
  if (xi.maxCoeff() <= 0.0) return Eigen::VectorXd::Zero(nb);
  if (!loading_possible(nb, total_bins, xi, delta))
    throw InfeasibleProblem("single_user_loading: bin count below the saturation bound");

  auto sinr = [&](const Eigen::VectorXd& p, int k) {
    double acc = 0.0;
    for (int m = 0; m < nb; ++m)
      acc += p[m] * gains[m] / (p[m] * gains[m] * delta[k] + noise_var);
    return acc / total_bins;
  };
  auto uniform_ok = [&](double pw) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(nb, pw);
    for (int k = 0; k < nk; ++k)
      if (sinr(p, k) < xi[k]) return false;
    return true;
  };
  double hi = 1.0;
  while (!uniform_ok(hi)) {
    hi *= 2.0;
    if (hi > 1e12) throw InfeasibleProblem("single_user_loading: power cap exceeded");
  }
  double lo = 0.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (uniform_ok(mid) ? hi : lo) = mid;
  }
  const double p_uniform = 1.1 * hi;
  const double p_max = 1.5 * nb * p_uniform + 1.0;

  // Linear objective, concave per-bin SINR terms: a small convex program.
  ConvexNLP nlp;
  nlp.n = nb;
  nlp.objective = [nb](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets*) {
    if (grad) grad->array() += 1.0;
    return x.sum();
  };
  for (int k = 0; k < nk; ++k) {
    const double xk = xi[k], dk = delta[k];
    Eigen::VectorXd g = gains;
    nlp.constraints.push_back([xk, dk, nb, total_bins, noise_var, gains = std::move(g)](
                                  const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                                  HessTriplets* hess) {
      double v = xk * total_bins;
      for (int m = 0; m < nb; ++m) {
        double den = x[m] * gains[m] * dk + noise_var;
        v -= x[m] * gains[m] / den;
        if (grad) (*grad)[m] -= gains[m] * noise_var / (den * den);
        if (hess)
          hess->emplace_back(m, m, 2.0 * gains[m] * gains[m] * dk * noise_var / (den * den * den));
      }
      return v;
    });
  }
  for (int m = 0; m < nb; ++m) {
    nlp.constraints.push_back([m](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets*) {
      if (grad) (*grad)[m] -= 1.0;
      return -x[m];
    });
    nlp.constraints.push_back(
        [m, p_max](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets*) {
          if (grad) (*grad)[m] += 1.0;
          return x[m] - p_max;
        });
  }
  BarrierResult sol = barrier_solve(nlp, Eigen::VectorXd::Constant(nb, p_uniform));
  return sol.x;
}

OesResult oes_allocate(const ChannelRealization& chan, const ConvergenceSpec& spec,
                       double noise_var) {
  const int nu = chan.users, nf = chan.bins;
  double combos = std::pow(static_cast<double>(nu), nf);
  if (combos > 1e6) throw std::invalid_argument("oes_allocate: assignment space too large");

  Eigen::MatrixXd gains(nu, nf);
  for (int u = 0; u < nu; ++u)
    for (int m = 0; m < nf; ++m) gains(u, m) = chan.gamma(u, m).squaredNorm();

  OesResult best;
  best.total_power = std::numeric_limits<double>::infinity();
  std::vector<int> owner(static_cast<std::size_t>(nf), 0);
  const long long total = static_cast<long long>(combos);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int m = 0; m < nf; ++m) {
      owner[static_cast<std::size_t>(m)] = static_cast<int>(c % nu);
      c /= nu;
    }
    std::vector<std::vector<int>> assign(static_cast<std::size_t>(nu));
    for (int m = 0; m < nf; ++m) assign[static_cast<std::size_t>(owner[static_cast<std::size_t>(m)])].push_back(m);

    bool pruned = false;
    for (int u = 0; u < nu && !pruned; ++u)
      pruned = !loading_possible(static_cast<int>(assign[static_cast<std::size_t>(u)].size()), nf,
                                 spec.xi.row(u).transpose(), spec.delta_bar.row(u).transpose());
    if (pruned) continue;

    PowerAllocation p = PowerAllocation::Zero(nu, nf);
    double tot = 0.0;
    bool ok = true;
    for (int u = 0; u < nu && ok; ++u) {
      const auto& bins = assign[static_cast<std::size_t>(u)];
      Eigen::VectorXd g(static_cast<Eigen::Index>(bins.size()));
      for (std::size_t i = 0; i < bins.size(); ++i) g[static_cast<Eigen::Index>(i)] = gains(u, bins[i]);
      try {
        Eigen::VectorXd pw = single_user_loading(g, nf, spec.xi.row(u).transpose(),
                                                 spec.delta_bar.row(u).transpose(), noise_var);
        for (std::size_t i = 0; i < bins.size(); ++i) p(u, bins[i]) = pw[static_cast<Eigen::Index>(i)];
        tot += pw.sum();
      } catch (const InfeasibleProblem&) {
        ok = false;
      }
    }
    if (ok && tot < best.total_power) {
      best.feasible = true;
      best.total_power = tot;
      best.assignment.bins = assign;
      best.p = p;
    }
  }
  return best;
}

PowerAllocation zf_scmmse(const ChannelRealization& chan, const ConvergenceSpec& spec,
                          double noise_var) {
  const int nu = chan.users, nf = chan.bins;
  if (chan.rx_antennas < nu) throw std::invalid_argument("zf_scmmse needs rx_antennas >= users");
  Eigen::MatrixXd eff(nu, nf);
  for (int m = 0; m < nf; ++m) {
    Eigen::MatrixXcd w = zf_rows(chan, m);
    for (int u = 0; u < nu; ++u) eff(u, m) = 1.0 / w.col(u).squaredNorm();
  }
  PowerAllocation p = PowerAllocation::Zero(nu, nf);
  for (int u = 0; u < nu; ++u) {
    Eigen::VectorXd pw = single_user_loading(eff.row(u).transpose(), nf, spec.xi.row(u).transpose(),
                                             spec.delta_bar.row(u).transpose(), noise_var);
    p.row(u) = pw.transpose();
  }
  return p;
}

double ep_bisection(const ChannelRealization& chan, const ConvergenceSpec& spec, double noise_var,
                    double tol) {
  const int nu = chan.users, nf = chan.bins;
  auto slack = [&](double pw) {
    PowerAllocation p = PowerAllocation::Constant(nu, nf, pw);
    return min_constraint_slack(p, chan, spec, noise_var);
  };
  double hi = 1.0;
  double s = slack(hi);
  while (s < 0.0) {
    const double next = 2.0 * hi;
    const double sn = slack(next);
    if (sn < 0.0 && (sn - s < 1e-9 || next > 1e12))
      throw InfeasibleProblem("ep_bisection: SINR saturates below target (interference limited)");
    hi = next;
    s = sn;
  }
  double lo = 0.0;
  while (hi - lo > tol * std::max(1.0, hi)) {
    double mid = 0.5 * (lo + hi);
    (slack(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace ccpa
