#include "obliv/gf2m.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "obliv/common.hpp"

#if defined(__PCLMUL__)
#include <immintrin.h>
#endif

namespace obliv {

namespace {

// Lowest-weight irreducible polynomials for m = 3..64 (scripts/gen_irreducibles.py).
constexpr std::uint64_t kIrreducibleLow[62] = {
    0x3ULL,     0x3ULL,  0x5ULL,  0x3ULL,  0x3ULL,  0x1dULL, 0x3ULL,   0x9ULL,
    0x5ULL,     0x9ULL,  0x1bULL, 0x21ULL, 0x3ULL,  0x39ULL, 0x9ULL,   0x9ULL,
    0x27ULL,    0x9ULL,  0x5ULL,  0x3ULL,  0x21ULL, 0x1bULL, 0x9ULL,   0x1bULL,
    0x27ULL,    0x3ULL,  0x5ULL,  0x3ULL,  0x9ULL,  0xc5ULL, 0x401ULL, 0x81ULL,
    0x5ULL,     0x201ULL, 0x71ULL, 0x69ULL, 0x11ULL, 0x39ULL, 0x9ULL,  0x81ULL,
    0x71ULL,    0x21ULL, 0x1bULL, 0x3ULL,  0x21ULL, 0x2dULL, 0x201ULL, 0x1dULL,
    0x69ULL,    0x9ULL,  0x71ULL, 0x201ULL, 0x81ULL, 0x95ULL, 0x11ULL, 0x80001ULL,
    0xc5ULL,    0x3ULL,  0x27ULL, 0x20000001ULL, 0x3ULL, 0x1dULL,
};

void check_degree(unsigned m) {
  if (m < GFContext::kMinDegree || m > GFContext::kMaxDegree)
    throw std::invalid_argument("GF(2^m): unsupported degree m=" + std::to_string(m));
}

}  // namespace

void clmul64_portable(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
  lo = 0;
  hi = 0;
  for (unsigned i = 0; i < 64; ++i) {
    if ((b >> i) & 1U) {
      lo ^= a << i;
      if (i != 0) hi ^= a >> (64 - i);
    }
  }
}

void clmul64(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
#if defined(__PCLMUL__)
  const __m128i va = _mm_cvtsi64_si128(static_cast<long long>(a));
  const __m128i vb = _mm_cvtsi64_si128(static_cast<long long>(b));
  const __m128i p = _mm_clmulepi64_si128(va, vb, 0x00);
  lo = static_cast<std::uint64_t>(_mm_cvtsi128_si64(p));
  hi = static_cast<std::uint64_t>(_mm_extract_epi64(p, 1));
#else
  clmul64_portable(a, b, lo, hi);
#endif
}

std::uint64_t irreducible_low(unsigned m) {
  check_degree(m);
  return kIrreducibleLow[m - GFContext::kMinDegree];
}

GFContext::GFContext(unsigned m)
    : m_(m),
      low_(irreducible_low(m)),
      mask_(m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1) {
  // s[e] = bit0(x^e mod P) for e < 2m - 1.
  std::vector<unsigned> s(2 * m_);
  std::uint64_t y = 1;
  for (unsigned e = 0; e < 2 * m_; ++e) {
    s[e] = static_cast<unsigned>(y & 1U);
    const bool carry = ((y >> (m_ - 1)) & 1U) != 0;
    y = (y << 1) & mask_;
    if (carry) y ^= low_;
  }
  for (unsigned t = 0; t < m_; ++t) {
    std::uint64_t w = 0;
    for (unsigned b = 0; b < m_; ++b)
      if (s[t + b]) w |= std::uint64_t{1} << b;
    basis_masks_[t] = w;
  }
}

std::uint64_t GFContext::mul(std::uint64_t a, std::uint64_t b) const {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  clmul64(a, b, lo, hi);
  for (;;) {
    const std::uint64_t t = m_ == 64 ? hi : ((lo >> m_) | (hi << (64 - m_)));
    if (t == 0) return lo & mask_;
    lo &= mask_;
    std::uint64_t plo = 0;
    std::uint64_t phi = 0;
    clmul64(t, low_, plo, phi);
    lo ^= plo;
    hi = phi;
  }
}

std::uint64_t GFContext::pow(std::uint64_t a, std::uint64_t e) const {
  std::uint64_t r = 1;
  while (e != 0) {
    if (e & 1U) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

std::uint64_t GFContext::inverse(std::uint64_t a) const {
  if ((a & mask_) == 0) throw std::invalid_argument("GF(2^m): zero has no inverse");
  // a^(2^m - 2) by square-and-multiply over the m-1 set bits.
  std::uint64_t r = 1;
  std::uint64_t sq = a;
  for (unsigned i = 1; i < m_; ++i) {
    sq = mul(sq, sq);
    r = mul(r, sq);
  }
  return r;
}

std::uint64_t GFContext::bit0_mask(std::uint64_t c) const {
  std::uint64_t w = 0;
  c &= mask_;
  while (c != 0) {
    const int t = __builtin_ctzll(c);
    w ^= basis_masks_[static_cast<unsigned>(t)];
    c &= c - 1;
  }
  return w;
}

unsigned GFContext::degree_for_domain(std::uint64_t domain_size) {
  const auto bits = static_cast<unsigned>(ceil_log2(domain_size));
  if (bits > kMaxDegree) throw std::invalid_argument("GF(2^m): domain too large");
  return bits < kMinDegree ? kMinDegree : bits;
}

const GFContext& gf_context(unsigned m) {
  check_degree(m);
  static const std::vector<std::unique_ptr<GFContext>> contexts = [] {
    std::vector<std::unique_ptr<GFContext>> v;
    for (unsigned d = GFContext::kMinDegree; d <= GFContext::kMaxDegree; ++d)
      v.push_back(std::make_unique<GFContext>(d));
    return v;
  }();
  return *contexts[m - GFContext::kMinDegree];
}

}  // namespace obliv
