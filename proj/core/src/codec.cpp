#include "ccpa/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ccpa {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clip_llr(double v) { return std::clamp(v, -kLlrClip, kLlrClip); }

// log Pr(bit = b) for lambda = ln P(0)/P(1)
double log_bit_prob(int b, double llr) {
  const double s = (b == 0) ? -clip_llr(llr) : clip_llr(llr);
  return -std::log1p(std::exp(s));
}

double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

int bits_per_symbol(Modulation mod) { return mod == Modulation::qpsk ? 2 : 4; }

Modulation modulation_from_bits(int nq) {
  if (nq == 2) return Modulation::qpsk;
  if (nq == 4) return Modulation::qam16;
  throw std::invalid_argument("unsupported bits_per_symbol");
}

const std::vector<cplx>& alphabet(Modulation mod) {
  static const std::vector<cplx> qpsk = [] {
    std::vector<cplx> a(4);
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 4; ++i) {
      int c0 = symbol_bit(i, 0, 2), c1 = symbol_bit(i, 1, 2);
      a[i] = cplx((1 - 2 * c0) * s, (1 - 2 * c1) * s);
    }
    return a;
  }();
  static const std::vector<cplx> qam16 = [] {
    // Per-axis Gray labeling (sign bit, magnitude bit): 00->+3 01->+1 11->-1 10->-3.
    std::vector<cplx> a(16);
    const double s = 1.0 / std::sqrt(10.0);
    auto level = [&](int sign, int mag) { return (1 - 2 * sign) * (3 - 2 * mag) * s; };
    for (int i = 0; i < 16; ++i) {
      int c0 = symbol_bit(i, 0, 4), c1 = symbol_bit(i, 1, 4);
      int c2 = symbol_bit(i, 2, 4), c3 = symbol_bit(i, 3, 4);
      a[i] = cplx(level(c0, c2), level(c1, c3));
    }
    return a;
  }();
  return mod == Modulation::qpsk ? qpsk : qam16;
}

Interleaver::Interleaver(std::size_t n, std::uint64_t seed) : perm_(n) {
  for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng() % i;
    std::swap(perm_[i - 1], perm_[j]);
  }
}

RaCode::RaCode(std::size_t info_len, std::uint64_t seed)
    : info_len_(info_len), inner_(2 * info_len, seed) {
  if (info_len == 0) throw std::invalid_argument("empty info word");
}

std::vector<std::uint8_t> RaCode::encode(const std::vector<std::uint8_t>& info) const {
  if (info.size() != info_len_) throw std::invalid_argument("info length mismatch");
  std::vector<std::uint8_t> repeated(2 * info_len_);
  for (std::size_t i = 0; i < info_len_; ++i) repeated[2 * i] = repeated[2 * i + 1] = info[i] & 1;
  std::vector<std::uint8_t> perm = inner_.interleave(repeated);
  std::vector<std::uint8_t> coded(3 * info_len_);
  std::copy(info.begin(), info.end(), coded.begin());
  std::uint8_t acc = 0;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    acc ^= perm[j];
    coded[info_len_ + j] = acc;
  }
  return coded;
}

RaCode::DecodeResult RaCode::decode(const std::vector<double>& apriori, int iters) const {
  if (apriori.size() != coded_len()) throw std::invalid_argument("llr frame length mismatch");
  const std::size_t n = info_len_;
  const std::size_t steps = 2 * n;
  const double* lam_sys = apriori.data();
  const double* lam_par = apriori.data() + n;

  std::vector<double> ext_d(steps, 0.0);   // accumulator extrinsic, repeated-bit order
  std::vector<double> ext_par(steps, 0.0);
  std::vector<double> prior_d(steps), prior_acc(steps), ext_acc(steps);
  std::vector<double> alpha((steps + 1) * 2), beta((steps + 1) * 2), g(steps * 4);

  for (int sweep = 0; sweep < std::max(iters, 1); ++sweep) {
    // Repetition node messages toward the accumulator edges.
    for (std::size_t i = 0; i < n; ++i) {
      prior_d[2 * i] = clip_llr(lam_sys[i] + ext_d[2 * i + 1]);
      prior_d[2 * i + 1] = clip_llr(lam_sys[i] + ext_d[2 * i]);
    }
    prior_acc = inner_.interleave(prior_d);

    // gamma[j*4 + s*2 + d]: transition from state s with input d (next state s^d,
    // parity output s^d).
    for (std::size_t j = 0; j < steps; ++j)
      for (int s = 0; s < 2; ++s)
        for (int d = 0; d < 2; ++d)
          g[j * 4 + s * 2 + d] = log_bit_prob(d, prior_acc[j]) + log_bit_prob(s ^ d, lam_par[j]);

    alpha[0] = 0.0;
    alpha[1] = kNegInf;
    for (std::size_t j = 0; j < steps; ++j)
      for (int sn = 0; sn < 2; ++sn)
        alpha[(j + 1) * 2 + sn] = lse2(alpha[j * 2 + 0] + g[j * 4 + 0 * 2 + sn],
                                       alpha[j * 2 + 1] + g[j * 4 + 1 * 2 + (1 ^ sn)]);
    beta[steps * 2 + 0] = beta[steps * 2 + 1] = 0.0;
    for (std::size_t j = steps; j-- > 0;)
      for (int s = 0; s < 2; ++s)
        beta[j * 2 + s] = lse2(g[j * 4 + s * 2 + 0] + beta[(j + 1) * 2 + s],
                               g[j * 4 + s * 2 + 1] + beta[(j + 1) * 2 + (s ^ 1)]);

    for (std::size_t j = 0; j < steps; ++j) {
      double m[2][2];  // [d][s]
      for (int s = 0; s < 2; ++s)
        for (int d = 0; d < 2; ++d)
          m[d][s] = alpha[j * 2 + s] + g[j * 4 + s * 2 + d] + beta[(j + 1) * 2 + (s ^ d)];
      const double post_d = lse2(m[0][0], m[0][1]) - lse2(m[1][0], m[1][1]);
      ext_acc[j] = clip_llr(post_d - prior_acc[j]);
      // parity output equals the next state
      double p0 = kNegInf, p1 = kNegInf;
      for (int s = 0; s < 2; ++s)
        for (int d = 0; d < 2; ++d)
          ((s ^ d) == 0 ? p0 : p1) = lse2((s ^ d) == 0 ? p0 : p1, m[d][s]);
      ext_par[j] = clip_llr(p0 - p1 - clip_llr(lam_par[j]));
    }
    ext_d = inner_.deinterleave(ext_acc);
  }

  DecodeResult res;
  res.extrinsic.resize(coded_len());
  res.info_llr.resize(n);
  res.hard_info.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.extrinsic[i] = clip_llr(ext_d[2 * i] + ext_d[2 * i + 1]);
    res.info_llr[i] = clip_llr(lam_sys[i] + ext_d[2 * i] + ext_d[2 * i + 1]);
    res.hard_info[i] = res.info_llr[i] < 0.0 ? 1 : 0;
  }
  for (std::size_t j = 0; j < steps; ++j) res.extrinsic[n + j] = ext_par[j];
  return res;
}

std::vector<cplx> map_symbols(const std::vector<std::uint8_t>& bits, Modulation mod) {
  const int nq = bits_per_symbol(mod);
  if (bits.size() % static_cast<std::size_t>(nq) != 0)
    throw std::invalid_argument("bit count not divisible by bits per symbol");
  const auto& alpha = alphabet(mod);
  std::vector<cplx> out(bits.size() / nq);
  for (std::size_t s = 0; s < out.size(); ++s) {
    int idx = 0;
    for (int q = 0; q < nq; ++q) idx = (idx << 1) | (bits[s * nq + q] & 1);
    out[s] = alpha[static_cast<std::size_t>(idx)];
  }
  return out;
}

cplx soft_symbol(std::span<const double> llrs, Modulation mod) {
  const int nq = bits_per_symbol(mod);
  const auto& alpha = alphabet(mod);
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double lp = 0.0;
    for (int q = 0; q < nq; ++q) lp += log_bit_prob(symbol_bit(static_cast<int>(i), q, nq), llrs[q]);
    acc += alpha[i] * std::exp(lp);
  }
  return acc;
}

void soft_symbols(const std::vector<double>& llr, Modulation mod,
                  std::vector<cplx>& soft, std::vector<double>& residual) {
  const int nq = bits_per_symbol(mod);
  if (llr.size() % static_cast<std::size_t>(nq) != 0)
    throw std::invalid_argument("llr count not divisible by bits per symbol");
  const std::size_t n = llr.size() / nq;
  const auto& alpha = alphabet(mod);
  soft.resize(n);
  residual.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    cplx mean(0.0, 0.0);
    double m2 = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      double lp = 0.0;
      for (int q = 0; q < nq; ++q)
        lp += log_bit_prob(symbol_bit(static_cast<int>(i), q, nq), llr[s * nq + q]);
      const double pr = std::exp(lp);
      mean += alpha[i] * pr;
      m2 += std::norm(alpha[i]) * pr;
    }
    soft[s] = mean;
    // Conditional residual variance E|s - mean|^2; the max guards rounding.
    // For constant-envelope alphabets this equals 1 - |mean|^2, but for
    // 16QAM the conditional symbol energy is not 1, and using 1 - |mean|^2
    // can go negative on a finite frame with saturated feedback.
    residual[s] = std::max(0.0, m2 - std::norm(mean));
  }
}

void demap_symbol(cplx y, double post_sinr, std::span<const double> apriori,
                  Modulation mod, std::span<double> extrinsic) {
  if (!(post_sinr > 0.0)) throw std::invalid_argument("post_sinr must be > 0");
  const int nq = bits_per_symbol(mod);
  const auto& alpha = alphabet(mod);
  double metric[16];
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    double m = -std::norm(y - alpha[i]) * post_sinr;
    if (!apriori.empty())
      for (int q = 0; q < nq; ++q)
        m += log_bit_prob(symbol_bit(static_cast<int>(i), q, nq), apriori[q]);
    metric[i] = m;
  }
  for (int q = 0; q < nq; ++q) {
    double m0 = kNegInf, m1 = kNegInf;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (symbol_bit(static_cast<int>(i), q, nq) == 0)
        m0 = lse2(m0, metric[i]);
      else
        m1 = lse2(m1, metric[i]);
    }
    double post = m0 - m1;
    if (!apriori.empty()) post -= clip_llr(apriori[q]);
    extrinsic[q] = clip_llr(post);
  }
}

std::vector<double> demap_llr(const std::vector<cplx>& y, double post_sinr,
                              const std::vector<double>& apriori, Modulation mod) {
  const int nq = bits_per_symbol(mod);
  if (!apriori.empty() && apriori.size() != y.size() * static_cast<std::size_t>(nq))
    throw std::invalid_argument("apriori length mismatch");
  std::vector<double> ext(y.size() * nq);
  for (std::size_t s = 0; s < y.size(); ++s) {
    std::span<const double> ap =
        apriori.empty() ? std::span<const double>{}
                        : std::span<const double>{apriori.data() + s * nq, static_cast<std::size_t>(nq)};
    demap_symbol(y[s], post_sinr, ap, mod, {ext.data() + s * nq, static_cast<std::size_t>(nq)});
  }
  return ext;
}

double mi_from_llrs(const std::vector<double>& llrs, const std::vector<std::uint8_t>& bits) {
  if (llrs.size() != bits.size() || llrs.empty())
    throw std::invalid_argument("llr/bit length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < llrs.size(); ++i) {
    const double x = bits[i] ? -1.0 : 1.0;
    acc += std::log1p(std::exp(std::clamp(-x * llrs[i], -60.0, 60.0)));
  }
  return 1.0 - acc / (llrs.size() * std::numbers::ln2);
}

}  // namespace ccpa
