#include "ccpa/receiver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ccpa/csv.hpp"

namespace ccpa {

Eigen::MatrixXcd interference_covariance(const PowerAllocation& p, const ChannelRealization& chan,
                                         int m, const Eigen::VectorXd& delta, double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be > 0");
  const int nr = chan.rx_antennas;
  Eigen::MatrixXcd sigma = noise_var * Eigen::MatrixXcd::Identity(nr, nr);
  for (int l = 0; l < chan.users; ++l) {
    const double w = p(l, m) * delta[l];
    if (w != 0.0) sigma.noalias() += w * chan.gamma(l, m) * chan.gamma(l, m).adjoint();
  }
  return sigma;
}

ReceiveFilters mmse_filters(const PowerAllocation& p, const ChannelRealization& chan,
                            const DeltaTensor& delta, double noise_var) {
  const int nu = chan.users, nf = chan.bins;
  const int nk = static_cast<int>(delta.empty() ? 0 : delta[0].rows());
  ReceiveFilters f;
  f.users = nu;
  f.bins = nf;
  f.num_indices = nk;
  f.w.resize(static_cast<std::size_t>(nu) * nk * nf);
  f.eta.setZero(nu, nk);
  f.zeta.setZero(nu, nk);
  for (int u = 0; u < nu; ++u) {
    for (int k = 0; k < nk; ++k) {
      const Eigen::VectorXd d = delta[static_cast<std::size_t>(u)].row(k).transpose();
      double zeta = 0.0;
      for (int m = 0; m < nf; ++m) {
        Eigen::MatrixXcd sigma = interference_covariance(p, chan, m, d, noise_var);
        Eigen::VectorXcd sg = sigma.ldlt().solve(chan.gamma(u, m));
        zeta += p(u, m) * chan.gamma(u, m).dot(sg).real();
        f.w[(static_cast<std::size_t>(u) * nk + k) * nf + m] = std::sqrt(p(u, m)) * sg;
      }
      zeta /= nf;
      f.zeta(u, k) = zeta;
      const double avg_energy = 1.0 - d[u];
      f.eta(u, k) = 1.0 / (avg_energy * zeta + 1.0);
      for (int m = 0; m < nf; ++m)
        f.w[(static_cast<std::size_t>(u) * nk + k) * nf + m] *= f.eta(u, k);
    }
  }
  return f;
}

double effective_sinr(const PowerAllocation& p, const ReceiveFilters& filters,
                      const ChannelRealization& chan, const Eigen::VectorXd& delta,
                      double noise_var, int u, int k) {
  double acc = 0.0;
  for (int m = 0; m < chan.bins; ++m) {
    const Eigen::VectorXcd& w = filters.omega(u, k, m);
    const double wn = w.squaredNorm();
    if (wn == 0.0) continue;
    Eigen::MatrixXcd sigma = interference_covariance(p, chan, m, delta, noise_var);
    const double num = p(u, m) * std::norm(w.dot(chan.gamma(u, m)));
    const double den = (w.adjoint() * sigma * w).value().real();
    acc += num / den;
  }
  return acc / chan.bins;
}

double mmse_sinr(const PowerAllocation& p, const ChannelRealization& chan,
                 const Eigen::VectorXd& delta, double noise_var, int u) {
  double acc = 0.0;
  for (int m = 0; m < chan.bins; ++m) {
    if (p(u, m) == 0.0) continue;
    Eigen::MatrixXcd sigma = interference_covariance(p, chan, m, delta, noise_var);
    acc += p(u, m) * chan.gamma(u, m).dot(sigma.ldlt().solve(chan.gamma(u, m))).real();
  }
  return acc / chan.bins;
}

Eigen::MatrixXcd zf_rows(const ChannelRealization& chan, int m) {
  const int nu = chan.users, nr = chan.rx_antennas;
  if (nr < nu) throw std::invalid_argument("zero forcing needs rx_antennas >= users");
  Eigen::MatrixXcd g(nr, nu);
  for (int u = 0; u < nu; ++u) g.col(u) = chan.gamma(u, m);
  Eigen::MatrixXcd gram = g.adjoint() * g;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
  if (!lu.isInvertible()) throw std::runtime_error("rank-deficient channel at bin " + std::to_string(m));
  return g * lu.inverse();
}

namespace {

struct UserFrame {
  RaCode code;
  Interleaver outer;
  std::vector<std::uint8_t> info, coded, tx_bits;  // tx_bits = interleaved coded
  std::vector<cplx> tx_freq;                       // per block, spread symbols
  std::vector<double> feedback;                    // a priori LLRs, tx order
  std::vector<cplx> soft_freq;                     // spread soft symbols
  double delta = 1.0;

  UserFrame(std::size_t info_len, std::uint64_t seed)
      : code(info_len, seed), outer(3 * info_len, seed + 0x9e3779b97f4a7c15ull) {}
};

}  // namespace

TurboResult turbo_equalize(const SystemConfig& cfg, const ChannelRealization& chan,
                           const PowerAllocation& p, Modulation mod, int num_blocks,
                           const TurboOptions& opt, std::uint64_t seed) {
  cfg.validate();
  const int nu = cfg.users, nr = cfg.rx_antennas, nf = cfg.bins;
  const int nq = bits_per_symbol(mod);
  const std::size_t coded_len = static_cast<std::size_t>(nq) * nf * num_blocks;
  if (coded_len % 3 != 0) throw std::invalid_argument("coded frame length must be divisible by 3");
  const std::size_t info_len = coded_len / 3;
  const std::size_t num_syms = coded_len / nq;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto cnoise = [&](double var) {
    const double s = std::sqrt(var / 2.0);
    return cplx(s * gauss(rng), s * gauss(rng));
  };

  std::vector<UserFrame> users;
  users.reserve(nu);
  for (int u = 0; u < nu; ++u) {
    users.emplace_back(info_len, seed * 6364136223846793005ull + u + 1);
    UserFrame& uf = users.back();
    uf.info.resize(info_len);
    for (auto& b : uf.info) b = static_cast<std::uint8_t>(rng() & 1);
    uf.coded = uf.code.encode(uf.info);
    uf.tx_bits = uf.outer.interleave(uf.coded);
    std::vector<cplx> syms = map_symbols(uf.tx_bits, mod);
    uf.tx_freq.resize(num_syms);
    std::vector<cplx> blk(static_cast<std::size_t>(nf));
    for (int b = 0; b < num_blocks; ++b) {
      std::copy_n(syms.begin() + static_cast<std::size_t>(b) * nf, nf, blk.begin());
      dft(blk, /*inverse=*/false, /*unitary=*/true);
      std::copy_n(blk.begin(), nf, uf.tx_freq.begin() + static_cast<std::size_t>(b) * nf);
    }
    uf.feedback.assign(coded_len, 0.0);
    if (opt.perfect_apriori > 0.0)
      for (std::size_t i = 0; i < coded_len; ++i)
        uf.feedback[i] = uf.tx_bits[i] ? -opt.perfect_apriori : opt.perfect_apriori;
    uf.soft_freq.assign(num_syms, cplx(0.0, 0.0));
  }

  // Received frequency-domain samples, [block][bin], each length N_R.
  std::vector<Eigen::VectorXcd> rx(static_cast<std::size_t>(num_blocks) * nf);
  for (int b = 0; b < num_blocks; ++b)
    for (int m = 0; m < nf; ++m) {
      Eigen::VectorXcd y = Eigen::VectorXcd::Zero(nr);
      for (int u = 0; u < nu; ++u)
        y += std::sqrt(p(u, m)) * users[static_cast<std::size_t>(u)].tx_freq[static_cast<std::size_t>(b) * nf + m] *
             chan.gamma(u, m);
      if (!opt.noiseless)
        for (int r = 0; r < nr; ++r) y[r] += cnoise(cfg.noise_var);
      rx[static_cast<std::size_t>(b) * nf + m] = std::move(y);
    }

  TurboResult result;
  result.info_bits.resize(nu);
  result.info_hat.resize(nu);
  for (int u = 0; u < nu; ++u) result.info_bits[u] = users[u].info;

  std::vector<double> soft_residual;
  std::vector<cplx> soft_time, blk(static_cast<std::size_t>(nf));
  std::vector<double> eq_llr(coded_len);

  for (int iter = 0; iter < opt.turbo_iters; ++iter) {
    // Soft symbols and per-user residual interference from current feedback.
    for (int u = 0; u < nu; ++u) {
      UserFrame& uf = users[u];
      soft_symbols(uf.feedback, mod, soft_time, soft_residual);
      double acc = 0.0;
      for (double e : soft_residual) acc += e;
      uf.delta = acc / static_cast<double>(num_syms);
      for (int b = 0; b < num_blocks; ++b) {
        std::copy_n(soft_time.begin() + static_cast<std::size_t>(b) * nf, nf, blk.begin());
        dft(blk, /*inverse=*/false, /*unitary=*/true);
        std::copy_n(blk.begin(), nf, uf.soft_freq.begin() + static_cast<std::size_t>(b) * nf);
      }
    }
    Eigen::VectorXd delta(nu);
    for (int u = 0; u < nu; ++u) delta[u] = users[u].delta;

    // Per-bin MMSE solve shared by blocks; filters depend only on (u, m).
    std::vector<Eigen::VectorXcd> sg(static_cast<std::size_t>(nu) * nf);
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(nu);
    for (int m = 0; m < nf; ++m) {
      Eigen::MatrixXcd sigma = interference_covariance(p, chan, m, delta, cfg.noise_var);
      Eigen::LDLT<Eigen::MatrixXcd> ldlt(sigma);
      for (int u = 0; u < nu; ++u) {
        sg[static_cast<std::size_t>(u) * nf + m] = ldlt.solve(chan.gamma(u, m));
        zeta[u] += p(u, m) * chan.gamma(u, m).dot(sg[static_cast<std::size_t>(u) * nf + m]).real();
      }
    }
    zeta /= nf;

    for (int u = 0; u < nu; ++u) {
      UserFrame& uf = users[u];
      const double z = zeta[u];
      const double rho = z > 1e-12 ? z / std::max(1e-12, 1.0 - z * uf.delta) : 0.0;
      if (rho <= 0.0) {
        std::fill(eq_llr.begin(), eq_llr.end(), 0.0);
      } else {
        for (int b = 0; b < num_blocks; ++b) {
          // Filter the soft-cancelled signal, re-add the user's own estimate
          // scaled by the bin-averaged gain (which keeps the despread symbol
          // gain flat at zeta), then normalize to unit symbol gain.
          for (int m = 0; m < nf; ++m) {
            Eigen::VectorXcd y = rx[static_cast<std::size_t>(b) * nf + m];
            for (int l = 0; l < nu; ++l)
              y -= std::sqrt(p(l, m)) * users[l].soft_freq[static_cast<std::size_t>(b) * nf + m] *
                   chan.gamma(l, m);
            const cplx z_hat =
                std::sqrt(p(u, m)) * sg[static_cast<std::size_t>(u) * nf + m].dot(y) +
                z * uf.soft_freq[static_cast<std::size_t>(b) * nf + m];
            blk[static_cast<std::size_t>(m)] = z_hat;
          }
          dft(blk, /*inverse=*/true, /*unitary=*/true);
          for (int n = 0; n < nf; ++n) {
            const cplx y = blk[static_cast<std::size_t>(n)] / z;
            const std::size_t bit0 = (static_cast<std::size_t>(b) * nf + n) * nq;
            demap_symbol(y, rho, std::span<const double>(uf.feedback.data() + bit0, nq), mod,
                         std::span<double>(eq_llr.data() + bit0, nq));
          }
        }
      }
      if (opt.observer) opt.observer(iter, u, eq_llr);

      std::vector<double> dec_in = uf.outer.deinterleave(eq_llr);
      RaCode::DecodeResult dec = uf.code.decode(dec_in, opt.decoder_iters);
      uf.feedback = uf.outer.interleave(dec.extrinsic);

      TrajectoryRecord::Row row;
      row.iter = iter;
      row.user = u;
      row.delta = uf.delta;
      row.i_eq = mi_from_llrs(eq_llr, uf.tx_bits);
      row.i_dec = mi_from_llrs(dec.extrinsic, uf.coded);
      std::size_t errs = 0;
      for (std::size_t i = 0; i < info_len; ++i) errs += dec.hard_info[i] != uf.info[i];
      row.ber = static_cast<double>(errs) / static_cast<double>(info_len);
      result.trajectory.rows.push_back(row);
      if (iter + 1 == opt.turbo_iters) result.info_hat[u] = dec.hard_info;
    }
  }
  return result;
}

void save_trajectory_csv(const TrajectoryRecord& traj, const std::string& path) {
  csvio::Table t;
  t.header = {"iter", "user", "i_eq", "i_dec", "ber", "delta"};
  for (const auto& r : traj.rows)
    t.rows.push_back({std::to_string(r.iter), std::to_string(r.user), csvio::fmt(r.i_eq),
                      csvio::fmt(r.i_dec), csvio::fmt(r.ber), csvio::fmt(r.delta)});
  csvio::write(path, t);
}

}  // namespace ccpa
