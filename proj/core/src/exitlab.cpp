#include "ccpa/exitlab.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <numbers>
#include <random>

#include "ccpa/csv.hpp"

namespace ccpa {

JParams default_j_params(Modulation mod) {
  // Fitted by fit_j_params; regenerate with the fit-j tool.
  if (mod == Modulation::qpsk) return {0.315387285353, 0.885839986389, 1.12338181575};
  return {0.408133689655, 0.551403764662, 1.90632680644};
}

double j_forward(double sigma2, const JParams& p) {
  if (sigma2 <= 0.0) return 0.0;
  double i = std::pow(1.0 - std::exp2(-p.h1 * std::pow(sigma2, p.h2)), p.h3);
  return std::clamp(i, 0.0, 1.0);
}

double j_inverse(double mi, const JParams& p) {
  if (mi <= 0.0) return 0.0;
  if (mi >= 1.0) throw InfeasibleTarget("mutual information target >= 1 requires unbounded LLR variance");
  double inner = -std::log2(1.0 - std::pow(mi, 1.0 / p.h3));
  return std::pow(inner / p.h1, 1.0 / p.h2);
}

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = std::sqrt(i / 2.0);
    jac(i, i - 1) = b;
    jac(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes.resize(n);
  weights.resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrt_pi * v0 * v0;
  }
}

namespace {

constexpr int kGhNodes = 24;

const std::vector<double>& gh_nodes() {
  static std::vector<double> n = [] {
    std::vector<double> nn, ww;
    gauss_hermite(kGhNodes, nn, ww);
    return nn;
  }();
  return n;
}
const std::vector<double>& gh_weights() {
  static std::vector<double> w = [] {
    std::vector<double> nn, ww;
    gauss_hermite(kGhNodes, nn, ww);
    return ww;
  }();
  return w;
}

// E tanh^2(lambda / 2) with lambda ~ N(sigma2/2, sigma2).
double mean_tanh_sq(double sigma2) {
  if (sigma2 <= 0.0) return 0.0;
  const auto& xs = gh_nodes();
  const auto& ws = gh_weights();
  const double s = std::sqrt(2.0 * sigma2);
  double acc = 0.0;
  for (int i = 0; i < kGhNodes; ++i) {
    double lam = 0.5 * sigma2 + s * xs[i];
    double t = std::tanh(0.5 * lam);
    acc += ws[i] * t * t;
  }
  return acc / std::sqrt(std::numbers::pi);
}

}  // namespace

double ccc_mi(double sigma2, Modulation mod) {
  if (sigma2 <= 0.0) return 0.0;
  const double nu = 4.0 / sigma2;
  const auto& xs = gh_nodes();
  const auto& ws = gh_weights();
  const auto& alpha = alphabet(mod);
  const int nq = bits_per_symbol(mod);
  const double sn = std::sqrt(nu);
  double loss = 0.0;  // avg log2(1 + exp(-x lambda))
  std::vector<double> ext(static_cast<std::size_t>(nq));
  for (std::size_t bi = 0; bi < alpha.size(); ++bi) {
    for (int i = 0; i < kGhNodes; ++i)
      for (int j = 0; j < kGhNodes; ++j) {
        cplx y = alpha[bi] + cplx(sn * xs[i], sn * xs[j]);
        demap_symbol(y, 1.0 / nu, {}, mod, ext);
        double w = ws[i] * ws[j];
        for (int q = 0; q < nq; ++q) {
          double x = symbol_bit(static_cast<int>(bi), q, nq) ? -1.0 : 1.0;
          double e = std::clamp(-x * ext[static_cast<std::size_t>(q)], -60.0, 60.0);
          loss += w * std::log1p(std::exp(e));
        }
      }
  }
  loss /= alpha.size() * nq * std::numbers::pi * std::numbers::ln2;
  return std::clamp(1.0 - loss, 0.0, 1.0);
}

JFit fit_j_to_table(const std::vector<double>& s2, const std::vector<double>& mi, JParams init) {
  auto cost = [&](const Eigen::Vector3d& lp) {
    JParams p{std::exp(lp[0]), std::exp(lp[1]), std::exp(lp[2])};
    double c = 0.0;
    for (std::size_t i = 0; i < s2.size(); ++i) {
      double d = j_forward(s2[i], p) - mi[i];
      c += d * d;
    }
    return c;
  };
  std::vector<Eigen::Vector3d> simplex(4);
  simplex[0] = Eigen::Vector3d(std::log(init.h1), std::log(init.h2), std::log(init.h3));
  for (int i = 0; i < 3; ++i) {
    simplex[static_cast<std::size_t>(i) + 1] = simplex[0];
    simplex[static_cast<std::size_t>(i) + 1][i] += 0.25;
  }
  std::vector<double> f(4);
  for (int i = 0; i < 4; ++i) f[static_cast<std::size_t>(i)] = cost(simplex[static_cast<std::size_t>(i)]);
  for (int it = 0; it < 2000; ++it) {
    std::array<int, 4> ord{0, 1, 2, 3};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
    if (f[ord[3]] - f[ord[0]] < 1e-16) break;
    Eigen::Vector3d centroid = (simplex[ord[0]] + simplex[ord[1]] + simplex[ord[2]]) / 3.0;
    Eigen::Vector3d xr = centroid + (centroid - simplex[ord[3]]);
    double fr = cost(xr);
    if (fr < f[ord[0]]) {
      Eigen::Vector3d xe = centroid + 2.0 * (centroid - simplex[ord[3]]);
      double fe = cost(xe);
      if (fe < fr) { simplex[ord[3]] = xe; f[ord[3]] = fe; }
      else { simplex[ord[3]] = xr; f[ord[3]] = fr; }
    } else if (fr < f[ord[2]]) {
      simplex[ord[3]] = xr;
      f[ord[3]] = fr;
    } else {
      Eigen::Vector3d xc = centroid + 0.5 * (simplex[ord[3]] - centroid);
      double fc = cost(xc);
      if (fc < f[ord[3]]) { simplex[ord[3]] = xc; f[ord[3]] = fc; }
      else {
        for (int i = 1; i < 4; ++i) {
          simplex[ord[i]] = simplex[ord[0]] + 0.5 * (simplex[ord[i]] - simplex[ord[0]]);
          f[ord[i]] = cost(simplex[ord[i]]);
        }
      }
    }
  }
  int best = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
  JFit out;
  out.params = {std::exp(simplex[best][0]), std::exp(simplex[best][1]), std::exp(simplex[best][2])};
  for (std::size_t i = 0; i < s2.size(); ++i)
    out.max_residual = std::max(out.max_residual, std::abs(j_forward(s2[i], out.params) - mi[i]));
  return out;
}

JFit fit_j_params(Modulation mod) {
  std::vector<double> s2, mi;
  for (int i = 0; i < 48; ++i) {
    double v = std::pow(10.0, -1.4 + 3.2 * i / 47.0);  // 0.04 .. 63
    s2.push_back(v);
    mi.push_back(ccc_mi(v, mod));
  }
  JFit fit = fit_j_to_table(s2, mi, default_j_params(mod));
  if (fit.max_residual > 0.02)
    throw std::runtime_error("J-function fit residual too large: " + std::to_string(fit.max_residual));
  return fit;
}

double residual_interference(double mi, Modulation mod) {
  if (mi <= 0.0) return 1.0;
  if (mi >= 1.0) return 0.0;
  double s2 = j_inverse(mi, default_j_params(Modulation::qpsk));
  double t2 = mean_tanh_sq(s2);
  double energy = mod == Modulation::qpsk ? t2 : t2 * (4.0 + t2) / 5.0;
  return std::clamp(1.0 - energy, 0.0, 1.0);
}

std::vector<double> gaussian_apriori_llrs(const std::vector<std::uint8_t>& bits, double sigma2,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(std::max(sigma2, 0.0)));
  std::vector<double> llr(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    double mean = (bits[i] ? -0.5 : 0.5) * sigma2;
    llr[i] = mean + gauss(rng);
  }
  return llr;
}

DecoderExitCurve measure_decoder_exit(const std::vector<double>& grid, int blocks, int block_bits,
                                      int decoder_iters, std::uint64_t seed) {
  if (block_bits % 3 != 0) throw std::invalid_argument("block_bits must be divisible by 3");
  DecoderExitCurve curve;
  curve.grid = grid;
  curve.blocks = blocks;
  curve.block_bits = block_bits;
  curve.output.resize(grid.size());
  const std::size_t info_len = static_cast<std::size_t>(block_bits) / 3;
  const JParams j2 = default_j_params(Modulation::qpsk);
  RaCode code(info_len, seed);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double s2 = grid[gi] >= 1.0 ? j_inverse(0.999999, j2) : j_inverse(grid[gi], j2);
    double loss = 0.0;
    std::size_t count = 0;
    std::mt19937_64 rng(seed ^ (0x1234567ull * (gi + 1)));
    for (int b = 0; b < blocks; ++b) {
      std::vector<std::uint8_t> info(info_len);
      for (auto& bit : info) bit = static_cast<std::uint8_t>(rng() & 1);
      std::vector<std::uint8_t> coded = code.encode(info);
      std::vector<double> apriori = gaussian_apriori_llrs(coded, s2, rng());
      RaCode::DecodeResult dec = code.decode(apriori, decoder_iters);
      for (std::size_t i = 0; i < coded.size(); ++i) {
        double x = coded[i] ? -1.0 : 1.0;
        double e = std::clamp(-x * dec.extrinsic[i], -60.0, 60.0);
        loss += std::log1p(std::exp(e));
        ++count;
      }
    }
    curve.output[gi] = std::clamp(1.0 - loss / (count * std::numbers::ln2), 0.0, 1.0);
  }
  // Pool-adjacent-violators pass: isotonic projection in L2.
  std::vector<double> val = curve.output;
  std::vector<double> wt(val.size(), 1.0);
  std::vector<std::size_t> len(val.size(), 1);
  std::size_t n = 0;
  for (std::size_t i = 0; i < curve.output.size(); ++i) {
    val[n] = curve.output[i];
    wt[n] = 1.0;
    len[n] = 1;
    ++n;
    while (n > 1 && val[n - 2] > val[n - 1]) {
      val[n - 2] = (wt[n - 2] * val[n - 2] + wt[n - 1] * val[n - 1]) / (wt[n - 2] + wt[n - 1]);
      wt[n - 2] += wt[n - 1];
      len[n - 2] += len[n - 1];
      --n;
    }
  }
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t j = 0; j < len[b]; ++j) curve.output[pos++] = val[b];
  return curve;
}

double invert_decoder_curve(const DecoderExitCurve& curve, double target_output) {
  if (curve.grid.empty()) throw std::invalid_argument("empty decoder curve");
  if (target_output <= curve.output.front()) return curve.grid.front();
  if (target_output > curve.output.back())
    throw InfeasibleTarget("decoder curve cannot reach output MI " + std::to_string(target_output));
  for (std::size_t j = 1; j < curve.grid.size(); ++j) {
    if (curve.output[j] >= target_output) {
      if (curve.output[j] == target_output) return curve.grid[j];
      double f = (target_output - curve.output[j - 1]) / (curve.output[j] - curve.output[j - 1]);
      return curve.grid[j - 1] + f * (curve.grid[j] - curve.grid[j - 1]);
    }
  }
  return curve.grid.back();
}

void save_decoder_curve_csv(const DecoderExitCurve& curve, const std::string& path) {
  csvio::Table t;
  t.comments = {"decoder transfer curve", "blocks=" + std::to_string(curve.blocks),
                "block_bits=" + std::to_string(curve.block_bits)};
  t.header = {"i_apriori", "i_extrinsic"};
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    t.rows.push_back({csvio::fmt(curve.grid[i]), csvio::fmt(curve.output[i])});
  csvio::write(path, t);
}

DecoderExitCurve load_decoder_curve_csv(const std::string& path) {
  csvio::Table t = csvio::read(path);
  DecoderExitCurve curve;
  for (const auto& c : t.comments) {
    if (c.rfind("blocks=", 0) == 0) curve.blocks = std::stoi(c.substr(7));
    if (c.rfind("block_bits=", 0) == 0) curve.block_bits = std::stoi(c.substr(11));
  }
  for (const auto& row : t.rows) {
    if (row.size() != 2) throw std::runtime_error("bad decoder curve row in " + path);
    curve.grid.push_back(std::stod(row[0]));
    curve.output.push_back(std::stod(row[1]));
  }
  return curve;
}

DeltaTensor ConvergenceSpec::delta_tensor() const {
  DeltaTensor out(static_cast<std::size_t>(users()));
  for (int u = 0; u < users(); ++u) {
    Eigen::MatrixXd& d = out[static_cast<std::size_t>(u)];
    d.resize(points(), users());
    for (int k = 0; k < points(); ++k)
      for (int l = 0; l < users(); ++l) d(k, l) = delta_for(u, k, l);
  }
  return out;
}

ConvergenceSpec build_convergence_spec(const std::vector<UserTarget>& targets, int k_points,
                                       const std::vector<DecoderExitCurve>& curves, Modulation mod,
                                       SamplingMode mode) {
  const int nu = static_cast<int>(targets.size());
  if (nu < 1 || k_points < 1) throw std::invalid_argument("need at least one user and one point");
  if (curves.empty()) throw std::invalid_argument("need at least one decoder curve");
  const JParams jp = default_j_params(mod);
  ConvergenceSpec spec;
  spec.mode = mode;
  spec.mod = mod;
  spec.mi_grid.resize(nu, k_points);
  spec.eps.resize(nu, k_points);
  spec.delta_bar.resize(nu, k_points);
  spec.xi.resize(nu, k_points);
  spec.sigma2.resize(nu, k_points);
  for (int u = 0; u < nu; ++u) {
    const UserTarget& tg = targets[static_cast<std::size_t>(u)];
    if (!(tg.dec_target > 0.0 && tg.dec_target <= 1.0))
      throw std::invalid_argument("decoder MI target must be in (0,1]");
    const DecoderExitCurve& curve = curves[curves.size() == 1 ? 0 : static_cast<std::size_t>(u)];
    for (int k = 0; k < k_points; ++k) {
      const bool last = k + 1 == k_points;
      double mi = k_points == 1 ? 0.0 : tg.dec_target * k / (k_points - 1);
      double eps = last ? 0.0 : tg.eps;
      double need = invert_decoder_curve(curve, mi) + eps;
      if (last) need = std::max(need, tg.eq_target);
      if (need >= 1.0)
        throw InfeasibleTarget("required equalizer output MI >= 1 at point " + std::to_string(k));
      double s2 = j_inverse(need, jp);
      double db = residual_interference(mi, mod);
      spec.mi_grid(u, k) = mi;
      spec.eps(u, k) = eps;
      spec.sigma2(u, k) = s2;
      spec.delta_bar(u, k) = db;
      spec.xi(u, k) = s2 / (4.0 + s2 * db);
    }
  }
  return spec;
}

void save_spec_csv(const ConvergenceSpec& spec, const std::string& path) {
  csvio::Table t;
  t.comments = {std::string("mode=") + (spec.mode == SamplingMode::diagonal ? "diagonal" : "worst-case")};
  t.header = {"user", "k", "i_dec", "eps", "delta", "xi", "sigma2"};
  for (int u = 0; u < spec.users(); ++u)
    for (int k = 0; k < spec.points(); ++k)
      t.rows.push_back({std::to_string(u), std::to_string(k), csvio::fmt(spec.mi_grid(u, k)),
                        csvio::fmt(spec.eps(u, k)), csvio::fmt(spec.delta_bar(u, k)),
                        csvio::fmt(spec.xi(u, k)), csvio::fmt(spec.sigma2(u, k))});
  csvio::write(path, t);
}

double bep_from_mi(double i_apriori, double i_extrinsic) {
  const JParams j2 = default_j_params(Modulation::qpsk);
  double s = j_inverse(i_apriori, j2) + j_inverse(i_extrinsic, j2);
  return 0.5 * std::erfc(std::sqrt(s) / (2.0 * std::numbers::sqrt2));
}

double semi_analytic_exit(const PowerAllocation& p, const ChannelRealization& chan,
                          const ConvergenceSpec& spec, double noise_var, int u, int k) {
  Eigen::VectorXd delta(spec.users());
  for (int l = 0; l < spec.users(); ++l) delta[l] = spec.delta_for(u, k, l);
  double zeta = mmse_sinr(p, chan, delta, noise_var, u);
  double zd = zeta * spec.delta_bar(u, k);
  if (zd >= 1.0) throw std::runtime_error("SINR-variance map singular: zeta * delta >= 1");
  double sigma_hat2 = 4.0 * zeta / (1.0 - zd);
  return j_forward(sigma_hat2, default_j_params(spec.mod));
}

}  // namespace ccpa
