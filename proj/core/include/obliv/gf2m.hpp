#pragma once

#include <array>
#include <cstdint>

namespace obliv {

/// Arithmetic in GF(2^m) for 3 <= m <= 64 in the polynomial basis.
/// Elements are the low m bits of a uint64_t; addition is XOR.
class GFContext {
 public:
  static constexpr unsigned kMinDegree = 3;
  static constexpr unsigned kMaxDegree = 64;

  explicit GFContext(unsigned m);

  unsigned degree() const { return m_; }
  /// Reduction polynomial without its leading x^m term.
  std::uint64_t modulus_low() const { return low_; }
  std::uint64_t element_mask() const { return mask_; }

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t pow(std::uint64_t a, std::uint64_t e) const;
  /// Throws std::invalid_argument for a == 0.
  std::uint64_t inverse(std::uint64_t a) const;

  /// The word w with parity(w & y) == bit0(c * y) for every element y.
  std::uint64_t bit0_mask(std::uint64_t c) const;

  /// Smallest supported degree whose field holds `domain_size` distinct indices.
  static unsigned degree_for_domain(std::uint64_t domain_size);

 private:
  unsigned m_;
  std::uint64_t low_;
  std::uint64_t mask_;
  std::array<std::uint64_t, 64> basis_masks_{};
};

/// Pinned lowest-weight irreducible polynomial of degree m (low part).
std::uint64_t irreducible_low(unsigned m);

/// Shared immutable context per degree.
const GFContext& gf_context(unsigned m);

/// Carry-less 64x64 -> 128 multiply, returned as (lo, hi).
void clmul64(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi);
/// Portable reference for clmul64.
void clmul64_portable(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi);

inline unsigned parity64(std::uint64_t x) {
  x ^= x >> 32;
  x ^= x >> 16;
  x ^= x >> 8;
  x ^= x >> 4;
  x ^= x >> 2;
  x ^= x >> 1;
  return static_cast<unsigned>(x & 1U);
}

}  // namespace obliv
