// Systematic repeat-accumulate codec, interleaving, Gray symbol mapping,
// soft symbols and MAP soft demapping.
//
// LLR convention throughout: lambda = ln Pr(bit=0) / Pr(bit=1), natural log,
// clipped to +-kLlrClip.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ccpa/model.hpp"

namespace ccpa {

inline constexpr double kLlrClip = 30.0;

enum class Modulation { qpsk, qam16 };

int bits_per_symbol(Modulation mod);
Modulation modulation_from_bits(int nq);

// Gray-labeled unit-average-energy alphabet; index = packed bits, bit q of the
// index (MSB first) is s_{i,q}.
const std::vector<cplx>& alphabet(Modulation mod);
inline int symbol_bit(int index, int q, int nq) { return (index >> (nq - 1 - q)) & 1; }

// Seeded Fisher-Yates permutation on {0..n-1}.
class Interleaver {
 public:
  Interleaver(std::size_t n, std::uint64_t seed);

  std::size_t size() const { return perm_.size(); }

  template <typename T>
  std::vector<T> interleave(const std::vector<T>& x) const {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) y[perm_[i]] = x[i];
    return y;
  }
  template <typename T>
  std::vector<T> deinterleave(const std::vector<T>& y) const {
    std::vector<T> x(y.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) x[i] = y[perm_[i]];
    return x;
  }

 private:
  std::vector<std::uint32_t> perm_;
};

// Rate-1/3 systematic repeat-accumulate code: the info word is transmitted
// systematically, repeated twice, interleaved and passed through a two-state
// accumulator. Codeword layout: [systematic (N) | parity (2N)].
class RaCode {
 public:
  RaCode(std::size_t info_len, std::uint64_t seed);

  std::size_t info_len() const { return info_len_; }
  std::size_t coded_len() const { return 3 * info_len_; }

  std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& info) const;

  struct DecodeResult {
    std::vector<double> extrinsic;       // per coded bit, a priori excluded
    std::vector<double> info_llr;        // a posteriori LLRs of info bits
    std::vector<std::uint8_t> hard_info;
  };
  // `apriori` holds one LLR per coded bit; `iters` sweeps of message passing
  // between the repetition nodes and the accumulator BCJR.
  DecodeResult decode(const std::vector<double>& apriori, int iters) const;

 private:
  std::size_t info_len_;
  Interleaver inner_;
};

std::vector<cplx> map_symbols(const std::vector<std::uint8_t>& bits, Modulation mod);

// Soft symbol expectations from bit a priori LLRs. residual[n] is the
// conditional residual variance E|s - soft[n]|^2 given the LLRs of symbol n
// (nonnegative; zero when the feedback is fully saturated).
cplx soft_symbol(std::span<const double> llrs, Modulation mod);
void soft_symbols(const std::vector<double>& llr, Modulation mod,
                  std::vector<cplx>& soft, std::vector<double>& residual);

// Exact MAP bit LLRs for the model y = b + CN(0, 1/post_sinr), minus the
// bit's own a priori. `apriori` may be empty (treated as all-zero).
void demap_symbol(cplx y, double post_sinr, std::span<const double> apriori,
                  Modulation mod, std::span<double> extrinsic);
std::vector<double> demap_llr(const std::vector<cplx>& y, double post_sinr,
                              const std::vector<double>& apriori, Modulation mod);

// Averaging mutual-information estimator between coded bits and their LLRs:
// I ~= 1 - avg log2(1 + exp(-x * lambda)) with x = +1 for bit 0, -1 for bit 1.
double mi_from_llrs(const std::vector<double>& llrs, const std::vector<std::uint8_t>& bits);

}  // namespace ccpa
