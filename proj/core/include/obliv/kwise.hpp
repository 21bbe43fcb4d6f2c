#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "obliv/gf2m.hpp"
#include "obliv/rng.hpp"

namespace obliv {

/// k-wise independent +-1 signs: bit 0 of a random degree-(k-1) polynomial
/// over GF(2^m), evaluated at the field encoding of the index.
class KWiseSignFamily {
 public:
  /// Draws k coefficients (k*m bits). A nonzero `domain_size` is checked
  /// against the field size 2^m.
  static KWiseSignFamily make(unsigned k, unsigned m, BitSource& src,
                              std::uint64_t domain_size = 0);
  static KWiseSignFamily from_coefficients(unsigned m, std::vector<std::uint64_t> coeffs);

  unsigned k() const { return static_cast<unsigned>(coeffs_.size()); }
  const GFContext& field() const { return *ctx_; }
  std::span<const std::uint64_t> coefficients() const { return coeffs_; }

  /// Polynomial value at x (Horner).
  std::uint64_t evaluate(std::uint64_t x) const;
  /// 0 or 1; throws std::invalid_argument when index >= 2^m.
  unsigned bit_at(std::uint64_t index) const;
  int sign_at(std::uint64_t index) const { return bit_at(index) ? -1 : 1; }

 private:
  KWiseSignFamily(const GFContext* ctx, std::vector<std::uint64_t> coeffs)
      : ctx_(ctx), coeffs_(std::move(coeffs)) {}

  const GFContext* ctx_;
  std::vector<std::uint64_t> coeffs_;
};

/// Exhaustive k-wise uniformity check over the whole coefficient space of
/// GF(2^m)^k: every k-tuple of distinct points must see each of the 2^k sign
/// patterns exactly 2^(k*m - k) times. Feasible for k*m <= ~24.
struct KWiseAuditResult {
  unsigned m = 0;
  unsigned k = 0;
  std::uint64_t tuples_checked = 0;
  std::uint64_t families = 0;
  bool uniform = false;
  /// Sum over all families and all points of the sign; zero for an unbiased family.
  std::int64_t total_sign_sum = 0;
};
KWiseAuditResult audit_kwise_exhaustive(unsigned m, unsigned k);

}  // namespace obliv
