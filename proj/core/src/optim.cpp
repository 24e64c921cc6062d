#include "ccpa/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ccpa {

namespace {
constexpr double kGainFloor = 1e-14;   // below this a bin is unusable for the user
constexpr double kBoxAlpha = 60.0;     // |ln P| bound
constexpr double kBoxT = 1e4;          // |t| bound (SCAVC)
constexpr double kDegenerateTau = 50.0;
}  // namespace

BarrierResult barrier_solve(const ConvexNLP& nlp, const Eigen::VectorXd& x0,
                            const BarrierOptions& opt) {
  const int n = nlp.n;
  const int m = static_cast<int>(nlp.constraints.size());
  Eigen::VectorXd x = x0;
  for (const auto& g : nlp.constraints)
    if (g(x, nullptr, nullptr) >= 0.0)
      throw std::invalid_argument("barrier_solve: start point not strictly feasible");

  // Minimizes f0 + phi / mu, phi = -sum ln(-g_i), with mu increased by
  // mu_factor until the duality gap bound m / mu is below tolerance. The
  // 1 / mu scaling keeps the Newton decrement in objective units across the
  // whole ladder.
  auto merit = [&](const Eigen::VectorXd& xc, double inv_mu, bool* feasible) {
    double f = nlp.objective(xc, nullptr, nullptr);
    for (const auto& g : nlp.constraints) {
      double v = g(xc, nullptr, nullptr);
      if (v >= 0.0) {
        *feasible = false;
        return 0.0;
      }
      f -= inv_mu * std::log(-v);
    }
    *feasible = true;
    return f;
  };

  const bool sparse = !nlp.support.empty();
  if (sparse && nlp.support.size() != nlp.constraints.size())
    throw std::invalid_argument("barrier_solve: support list size mismatch");

  BarrierResult result;
  Eigen::VectorXd grad(n), cgrad(n), full_grad(n);
  cgrad.setZero();
  HessTriplets trips;
  Eigen::MatrixXd hess(n, n);
  double mu = opt.mu0;
  while (true) {
    const double inv_mu = 1.0 / mu;
    for (int it = 0; it < opt.max_newton; ++it) {
      full_grad.setZero();
      hess.setZero();
      grad.setZero();
      trips.clear();
      nlp.objective(x, &grad, &trips);
      full_grad = grad;
      for (const auto& t : trips) hess(t.row(), t.col()) += t.value();
      for (std::size_t ci = 0; ci < nlp.constraints.size(); ++ci) {
        trips.clear();
        double v = nlp.constraints[ci](x, &cgrad, &trips);
        const double inv = -inv_mu / v;  // v < 0
        if (sparse) {
          const std::vector<int>& sup = nlp.support[ci];
          const double w = inv * inv * mu;  // (1/mu) / v^2
          for (std::size_t a = 0; a < sup.size(); ++a) {
            const double ga = cgrad[sup[a]];
            full_grad[sup[a]] += inv * ga;
            for (std::size_t b = 0; b <= a; ++b) {
              int i = std::max(sup[a], sup[b]), jj = std::min(sup[a], sup[b]);
              hess(i, jj) += w * ga * cgrad[sup[b]];
            }
          }
          for (int idx : sup) cgrad[idx] = 0.0;
        } else {
          full_grad += inv * cgrad;
          hess.selfadjointView<Eigen::Lower>().rankUpdate(cgrad, inv * inv * mu);
          cgrad.setZero();
        }
        for (const auto& t : trips) {
          hess(t.row(), t.col()) += inv * t.value();
          if (t.row() != t.col()) hess(t.col(), t.row()) += inv * t.value();
        }
      }
      hess.triangularView<Eigen::StrictlyUpper>() =
          hess.triangularView<Eigen::StrictlyLower>().transpose();

      Eigen::VectorXd dx;
      double ridge = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(
            ridge > 0.0 ? Eigen::MatrixXd(hess + ridge * Eigen::MatrixXd::Identity(n, n)) : hess);
        dx = ldlt.solve(-full_grad);
        if (ldlt.info() == Eigen::Success && dx.allFinite() && full_grad.dot(dx) <= 0.0) break;
        ridge = ridge == 0.0 ? 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff()) : ridge * 100.0;
      }
      double decrement = -full_grad.dot(dx);
      if (!std::isfinite(decrement) || dx.hasNaN())
        throw SolverFailure("barrier_solve: Newton direction not finite");
      if (decrement / 2.0 <= opt.newton_tol) break;

      bool ok = false;
      double f0 = merit(x, inv_mu, &ok);
      double step = 1.0;
      bool moved = false;
      while (step > 1e-14) {
        bool feas = false;
        double f1 = merit(x + step * dx, inv_mu, &feas);
        if (feas && f1 <= f0 - 0.25 * step * decrement) {
          x += step * dx;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      ++result.newton_steps;
      if (!moved) {
        if (decrement / 2.0 < 1e4 * opt.newton_tol) break;  // at numerical precision
        throw SolverFailure("barrier_solve: line search stalled");
      }
    }
    if (static_cast<double>(m) / mu <= opt.duality_tol) break;
    mu *= opt.mu_factor;
  }
  result.x = x;
  result.objective = nlp.objective(x, nullptr, nullptr);
  return result;
}

FilterCoeffs filter_coeffs(const ReceiveFilters& filters, const ChannelRealization& chan,
                           double noise_var) {
  FilterCoeffs c;
  c.users = filters.users;
  c.bins = filters.bins;
  c.points = filters.num_indices;
  c.gain.resize(static_cast<std::size_t>(c.users) * c.points);
  c.noise.resize(c.gain.size());
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k) {
      Eigen::MatrixXd& g = c.gain[static_cast<std::size_t>(u) * c.points + k];
      Eigen::VectorXd& nv = c.noise[static_cast<std::size_t>(u) * c.points + k];
      g.resize(c.bins, c.users);
      nv.resize(c.bins);
      for (int m = 0; m < c.bins; ++m) {
        const Eigen::VectorXcd& w = filters.omega(u, k, m);
        for (int l = 0; l < c.users; ++l) g(m, l) = std::norm(w.dot(chan.gamma(l, m)));
        nv[m] = noise_var * w.squaredNorm();
      }
    }
  return c;
}

Eigen::VectorXd bin_sinr_terms(const PowerAllocation& p, const FilterCoeffs& coeffs,
                               const ConvergenceSpec& spec, int u, int k) {
  const Eigen::MatrixXd& g = coeffs.g(u, k);
  const Eigen::VectorXd& nv = coeffs.nv(u, k);
  Eigen::VectorXd t(coeffs.bins);
  for (int m = 0; m < coeffs.bins; ++m) {
    double den = nv[m];
    for (int l = 0; l < coeffs.users; ++l) den += p(l, m) * g(m, l) * spec.delta_for(u, k, l);
    t[m] = den > 0.0 ? p(u, m) * g(m, u) / den : 0.0;
  }
  return t;
}

double sinr_given_filters(const PowerAllocation& p, const FilterCoeffs& coeffs,
                          const ConvergenceSpec& spec, int u, int k) {
  return bin_sinr_terms(p, coeffs, spec, u, k).sum() / coeffs.bins;
}

double min_constraint_slack(const PowerAllocation& p, const ChannelRealization& chan,
                            const ConvergenceSpec& spec, double noise_var,
                            const FilterCoeffs* coeffs) {
  double slack = std::numeric_limits<double>::infinity();
  for (int u = 0; u < spec.users(); ++u)
    for (int k = 0; k < spec.points(); ++k) {
      double zeta;
      if (coeffs) {
        zeta = sinr_given_filters(p, *coeffs, spec, u, k);
      } else {
        Eigen::VectorXd delta(spec.users());
        for (int l = 0; l < spec.users(); ++l) delta[l] = spec.delta_for(u, k, l);
        zeta = mmse_sinr(p, chan, delta, noise_var, u);
      }
      slack = std::min(slack, zeta / spec.xi(u, k) - 1.0);
    }
  return slack;
}

namespace {

int n_power(const FilterCoeffs& c) { return c.users * c.bins; }
int n_total(const FilterCoeffs& c) { return c.users * c.bins * (1 + c.points); }
int pidx(const FilterCoeffs& c, int u, int m) { return u * c.bins + m; }
int tidx(const FilterCoeffs& c, int u, int k, int m) {
  return n_power(c) + (u * c.points + k) * c.bins + m;
}

// Objective sum exp(alpha_i) over the power variables.
SmoothFn make_objective(const FilterCoeffs& c) {
  const int np = n_power(c);
  return [np](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets* hess) {
    double v = 0.0;
    for (int i = 0; i < np; ++i) {
      double e = std::exp(x[i]);
      v += e;
      if (grad) (*grad)[i] += e;
      if (hess) hess->emplace_back(i, i, e);
    }
    return v;
  };
}

// Affine constraint stored sparsely as (index, coefficient) pairs.
struct AffineTerm {
  int i;
  double a;
};

SmoothFn affine(std::vector<AffineTerm> terms, double b) {
  return [terms = std::move(terms), b](const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                                       HessTriplets*) {
    double v = b;
    for (const auto& t : terms) {
      v += t.a * x[t.i];
      if (grad) (*grad)[t.i] += t.a;
    }
    return v;
  };
}

std::vector<int> term_support(const std::vector<AffineTerm>& terms) {
  std::vector<int> s;
  s.reserve(terms.size());
  for (const auto& t : terms) s.push_back(t.i);
  return s;
}

SmoothFn box_upper(int i, double bound) {
  return [i, bound](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets*) {
    if (grad) (*grad)[i] += 1.0;
    return x[i] - bound;
  };
}
SmoothFn box_lower(int i, double bound) {
  return [i, bound](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets*) {
    if (grad) (*grad)[i] -= 1.0;
    return -x[i] - bound;
  };
}

// ln(sum_l exp(x_{p(l)}) w_l + w0) evaluated with gradient/Hessian support on
// the participating power variables.
struct LogDen {
  std::vector<int> idx;
  std::vector<double> w;
  double w0 = 0.0;

  mutable std::vector<double> q;  // scratch, sized on first use

  double value(const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets* hess) const {
    const std::size_t r = idx.size();
    double den = w0;
    q.resize(r);
    for (std::size_t j = 0; j < r; ++j) {
      q[j] = w[j] * std::exp(x[idx[j]]);
      den += q[j];
    }
    if (grad)
      for (std::size_t j = 0; j < r; ++j) (*grad)[idx[j]] += q[j] / den;
    if (hess)
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t i = j; i < r; ++i) {
          double v = (i == j ? q[j] / den : 0.0) - q[i] * q[j] / (den * den);
          hess->emplace_back(std::max(idx[i], idx[j]), std::min(idx[i], idx[j]), v);
        }
    return std::log(den);
  }
};

void add_boxes(ConvexNLP& nlp, const FilterCoeffs& c, double t_bound) {
  for (int i = 0; i < nlp.n; ++i) {
    double b = i < n_power(c) ? kBoxAlpha : t_bound;
    nlp.constraints.push_back(box_upper(i, b));
    nlp.support.push_back({i});
    nlp.constraints.push_back(box_lower(i, b));
    nlp.support.push_back({i});
  }
}

// Support of a per-bin constraint: its own (p, t) variables plus whatever the
// denominator touches, deduplicated (the own power index can appear in both).
std::vector<int> bin_support(const LogDen& den, int pi, int ti) {
  std::vector<int> s = den.idx;
  s.push_back(pi);
  s.push_back(ti);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

LogDen make_logden(const FilterCoeffs& c, const ConvergenceSpec& spec, int u, int k, int m) {
  LogDen d;
  d.w0 = c.nv(u, k)[m];
  for (int l = 0; l < c.users; ++l) {
    double w = c.g(u, k)(m, l) * spec.delta_for(u, k, l);
    if (w > 0.0) {
      d.idx.push_back(pidx(c, l, m));
      d.w.push_back(w);
    }
  }
  return d;
}

}  // namespace

ConvexNLP build_scavc(const FilterCoeffs& c, const ConvergenceSpec& spec,
                      const std::vector<Eigen::VectorXd>& t_hat) {
  ConvexNLP nlp;
  nlp.n = n_total(c);
  nlp.objective = make_objective(c);
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k) {
      const Eigen::VectorXd& th = t_hat[static_cast<std::size_t>(u) * c.points + k];
      // (i) N_F xi - sum_m t <= 0
      std::vector<AffineTerm> a;
      for (int m = 0; m < c.bins; ++m) a.push_back({tidx(c, u, k, m), -1.0});
      nlp.support.push_back(term_support(a));
      nlp.constraints.push_back(affine(std::move(a), c.bins * spec.xi(u, k)));
      // (ii) per bin
      for (int m = 0; m < c.bins; ++m) {
        const int ti = tidx(c, u, k, m);
        const double gu = c.g(u, k)(m, u);
        if (gu <= kGainFloor) {
          nlp.constraints.push_back(affine({{ti, 1.0}}, 0.0));
          nlp.support.push_back({ti});
          continue;
        }
        if (!(th[m] > 0.0)) throw std::invalid_argument("build_scavc: t_hat must be positive");
        LogDen den = make_logden(c, spec, u, k, m);
        const int pi = pidx(c, u, m);
        const double th_m = th[m];
        const double lg = std::log(gu);
        nlp.support.push_back(bin_support(den, pi, ti));
        nlp.constraints.push_back(
            [den, pi, ti, th_m, lg](const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                                    HessTriplets* hess) {
              double v = std::log(th_m) + (x[ti] - th_m) / th_m - x[pi] - lg +
                         den.value(x, grad, hess);
              if (grad) {
                (*grad)[ti] += 1.0 / th_m;
                (*grad)[pi] -= 1.0;
              }
              return v;
            });
      }
    }
  add_boxes(nlp, c, kBoxT);
  return nlp;
}

ConvexNLP build_scagp(const FilterCoeffs& c, const ConvergenceSpec& spec,
                      const std::vector<Eigen::VectorXd>& t_hat) {
  ConvexNLP nlp;
  nlp.n = n_total(c);
  nlp.objective = make_objective(c);
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k) {
      const Eigen::VectorXd& th = t_hat[static_cast<std::size_t>(u) * c.points + k];
      double th_sum = 0.0;
      for (int m = 0; m < c.bins; ++m)
        if (c.g(u, k)(m, u) > kGainFloor) th_sum += th[m];
      if (!(th_sum > 0.0)) throw std::invalid_argument("build_scagp: no usable bins");
      // (i) ln(N_F xi) - sum_m phi_m (tau_m - ln phi_m) <= 0
      std::vector<AffineTerm> a;
      double b = std::log(c.bins * spec.xi(u, k));
      for (int m = 0; m < c.bins; ++m) {
        if (c.g(u, k)(m, u) <= kGainFloor) continue;
        double phi = th[m] / th_sum;
        if (phi <= 0.0) continue;
        a.push_back({tidx(c, u, k, m), -phi});
        b += phi * std::log(phi);
      }
      nlp.support.push_back(term_support(a));
      nlp.constraints.push_back(affine(std::move(a), b));
      // (ii) per bin
      for (int m = 0; m < c.bins; ++m) {
        const int ti = tidx(c, u, k, m);
        const double gu = c.g(u, k)(m, u);
        if (gu <= kGainFloor) {
          nlp.constraints.push_back(affine({{ti, 1.0}}, kDegenerateTau));
          nlp.support.push_back({ti});
          continue;
        }
        LogDen den = make_logden(c, spec, u, k, m);
        const int pi = pidx(c, u, m);
        const double lg = std::log(gu);
        nlp.support.push_back(bin_support(den, pi, ti));
        nlp.constraints.push_back(
            [den, pi, ti, lg](const Eigen::VectorXd& x, Eigen::VectorXd* grad, HessTriplets* hess) {
              double v = x[ti] - x[pi] - lg + den.value(x, grad, hess);
              if (grad) {
                (*grad)[ti] += 1.0;
                (*grad)[pi] -= 1.0;
              }
              return v;
            });
      }
    }
  add_boxes(nlp, c, kBoxAlpha);
  return nlp;
}

namespace {

std::vector<Eigen::VectorXd> exact_terms(const PowerAllocation& p, const FilterCoeffs& c,
                                         const ConvergenceSpec& spec) {
  std::vector<Eigen::VectorXd> t(static_cast<std::size_t>(c.users) * c.points);
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k)
      t[static_cast<std::size_t>(u) * c.points + k] = bin_sinr_terms(p, c, spec, u, k);
  return t;
}

// Strictly feasible subproblem start built from a 5% power inflation; every
// exact per-bin SINR term rises under a uniform power scale, which leaves room
// on both the per-bin equations and the sum constraints.
Eigen::VectorXd warm_start(ScaMethod method, const PowerAllocation& p_scaled,
                           const FilterCoeffs& c, const ConvergenceSpec& spec,
                           const std::vector<Eigen::VectorXd>& t_hat) {
  Eigen::VectorXd x(n_total(c));
  for (int u = 0; u < c.users; ++u)
    for (int m = 0; m < c.bins; ++m)
      x[pidx(c, u, m)] = std::log(std::max(p_scaled(u, m), 1e-12));
  std::vector<Eigen::VectorXd> t_new = exact_terms(p_scaled, c, spec);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k)
      for (int m = 0; m < c.bins; ++m) {
        if (c.g(u, k)(m, u) <= kGainFloor) continue;
        const Eigen::VectorXd& th = t_hat[static_cast<std::size_t>(u) * c.points + k];
        min_ratio = std::min(
            min_ratio, std::log(t_new[static_cast<std::size_t>(u) * c.points + k][m] / th[m]));
      }
  const double delta = 0.5 * std::max(0.0, min_ratio);
  for (int u = 0; u < c.users; ++u)
    for (int k = 0; k < c.points; ++k)
      for (int m = 0; m < c.bins; ++m) {
        const int ti = tidx(c, u, k, m);
        if (c.g(u, k)(m, u) <= kGainFloor) {
          x[ti] = method == ScaMethod::scavc ? -1.0 : -kDegenerateTau - 5.0;
          continue;
        }
        const double tn = t_new[static_cast<std::size_t>(u) * c.points + k][m];
        const double th = t_hat[static_cast<std::size_t>(u) * c.points + k][m];
        if (method == ScaMethod::scavc)
          x[ti] = th * (1.0 + std::log(tn / th) - delta);
        else
          x[ti] = std::log(tn) - delta;
      }
  return x;
}

}  // namespace

PowerAllocation sca_solve(ScaMethod method, const FilterCoeffs& coeffs, const ConvergenceSpec& spec,
                          const PowerAllocation& p0, double tol, ScaDiagnostics* diag) {
  PowerAllocation p = p0.cwiseMax(1e-10);
  double slack0 = std::numeric_limits<double>::infinity();
  for (int u = 0; u < coeffs.users; ++u)
    for (int k = 0; k < coeffs.points; ++k)
      slack0 = std::min(slack0, sinr_given_filters(p, coeffs, spec, u, k) / spec.xi(u, k) - 1.0);
  if (slack0 < 0.0) throw std::invalid_argument("sca_solve: start point infeasible");

  double obj = p.sum();
  if (diag) diag->objective_history.push_back(obj);
  const int max_inner = 100;
  for (int it = 0; it < max_inner; ++it) {
    std::vector<Eigen::VectorXd> t_hat = exact_terms(p, coeffs, spec);
    ConvexNLP nlp = method == ScaMethod::scavc ? build_scavc(coeffs, spec, t_hat)
                                               : build_scagp(coeffs, spec, t_hat);
    // Interference-limited bins barely move under a small power inflation, so
    // escalate the inflation until the start point clears every constraint.
    Eigen::VectorXd x0;
    bool feasible_start = false;
    for (double scale : {1.05, 1.25, 2.0, 10.0}) {
      x0 = warm_start(method, scale * p, coeffs, spec, t_hat);
      feasible_start = std::all_of(nlp.constraints.begin(), nlp.constraints.end(),
                                   [&](const SmoothFn& g) { return g(x0, nullptr, nullptr) < 0.0; });
      if (feasible_start) break;
    }
    if (!feasible_start) throw SolverFailure("sca_solve: could not build a strictly feasible start");
    BarrierResult sol = barrier_solve(nlp, x0);
    if (diag) diag->newton_steps += sol.newton_steps;

    PowerAllocation p_new(coeffs.users, coeffs.bins);
    for (int u = 0; u < coeffs.users; ++u)
      for (int m = 0; m < coeffs.bins; ++m) p_new(u, m) = std::exp(sol.x[pidx(coeffs, u, m)]);

    // The surrogates underestimate the exact SINR terms, so the subproblem
    // solution must re-validate against the exact constraints.
    double slack = std::numeric_limits<double>::infinity();
    for (int u = 0; u < coeffs.users; ++u)
      for (int k = 0; k < coeffs.points; ++k)
        slack = std::min(slack,
                         sinr_given_filters(p_new, coeffs, spec, u, k) / spec.xi(u, k) - 1.0);
    if (slack < -1e-9)
      throw SolverFailure("sca_solve: surrogate solution violates exact constraints");

    double obj_new = p_new.sum();
    if (diag) ++diag->inner_iters;
    if (obj_new < obj) {
      p = p_new;
      if (diag) diag->objective_history.push_back(obj_new);
      if (obj - obj_new <= tol) return p;
      obj = obj_new;
    } else {
      return p;  // no further descent available from this linearization
    }
  }
  return p;
}

PowerAllocation feasible_init(const ChannelRealization& chan, const ConvergenceSpec& spec,
                              double noise_var) {
  const int nu = chan.users, nf = chan.bins;
  PowerAllocation p = PowerAllocation::Zero(nu, nf);
  if (chan.rx_antennas >= nu) {
    // Per-bin zero forcing decouples the users; noise amplification enters as
    // noise_var * ||w||^2 per bin.
    Eigen::MatrixXd wnorm(nu, nf);
    for (int m = 0; m < nf; ++m) {
      Eigen::MatrixXcd w = zf_rows(chan, m);
      for (int u = 0; u < nu; ++u) wnorm(u, m) = w.col(u).squaredNorm();
    }
    for (int u = 0; u < nu; ++u) {
      auto feasible = [&](double pw) {
        for (int k = 0; k < spec.points(); ++k) {
          double zeta = 0.0;
          for (int m = 0; m < nf; ++m)
            zeta += pw / (pw * spec.delta_bar(u, k) + noise_var * wnorm(u, m));
          if (zeta / nf < spec.xi(u, k)) return false;
        }
        return true;
      };
      double hi = 1.0;
      while (!feasible(hi)) {
        hi *= 2.0;
        if (hi > 1e12) throw InfeasibleProblem("zero-forcing initialization exceeds power cap");
      }
      double lo = 0.0;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
      }
      p.row(u).setConstant(1.1 * hi);
    }
  } else {
    auto feasible = [&](double pw) {
      PowerAllocation pp = PowerAllocation::Constant(nu, nf, pw);
      return min_constraint_slack(pp, chan, spec, noise_var) >= 0.0;
    };
    double hi = 1.0;
    while (!feasible(hi)) {
      hi *= 2.0;
      if (hi > 1e12)
        throw InfeasibleProblem("equal-power initialization infeasible (interference limited)");
    }
    double lo = 0.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    p.setConstant(1.1 * hi);
  }
  if (min_constraint_slack(p, chan, spec, noise_var) <= 0.0)
    throw InfeasibleProblem("initialization failed to produce a strictly feasible point");
  return p;
}

OptimizeResult alternating_optimize(const SystemConfig& cfg, const ChannelRealization& chan,
                                    const ConvergenceSpec& spec, ScaMethod method,
                                    double outer_tol, double inner_tol, int max_outer) {
  const DeltaTensor dt = spec.delta_tensor();
  OptimizeResult res;
  res.p = feasible_init(chan, spec, cfg.noise_var);
  double obj = res.p.sum();
  res.objective_history.push_back(obj);
  for (int outer = 0; outer < max_outer; ++outer) {
    res.filters = mmse_filters(res.p, chan, dt, cfg.noise_var);
    FilterCoeffs coeffs = filter_coeffs(res.filters, chan, cfg.noise_var);
    ScaDiagnostics diag;
    PowerAllocation p_new = sca_solve(method, coeffs, spec, res.p, inner_tol, &diag);
    res.inner_iters.push_back(diag.inner_iters);
    ++res.outer_iters;
    double obj_new = p_new.sum();
    if (obj_new < obj) {
      res.p = p_new;
      res.objective_history.push_back(obj_new);
    }
    if (obj - obj_new <= outer_tol) break;
    obj = std::min(obj, obj_new);
  }
  res.filters = mmse_filters(res.p, chan, dt, cfg.noise_var);
  res.snr_db = snr_db(res.p, cfg);
  return res;
}

}  // namespace ccpa
