#include "obliv/kwise.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace obliv {

KWiseSignFamily KWiseSignFamily::make(unsigned k, unsigned m, BitSource& src,
                                      std::uint64_t domain_size) {
  if (k < 1) throw std::invalid_argument("make_family: k must be at least 1");
  const GFContext& ctx = gf_context(m);
  if (domain_size != 0 && m < 64 && domain_size > (std::uint64_t{1} << m))
    throw std::invalid_argument("make_family: domain of " + std::to_string(domain_size) +
                                " indices does not fit GF(2^" + std::to_string(m) + ")");
  std::vector<std::uint64_t> coeffs(k);
  for (auto& c : coeffs) c = src.next_bits(m);
  return KWiseSignFamily(&ctx, std::move(coeffs));
}

KWiseSignFamily KWiseSignFamily::from_coefficients(unsigned m, std::vector<std::uint64_t> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("KWiseSignFamily: need at least one coefficient");
  const GFContext& ctx = gf_context(m);
  for (auto c : coeffs)
    if ((c & ~ctx.element_mask()) != 0)
      throw std::invalid_argument("KWiseSignFamily: coefficient outside the field");
  return KWiseSignFamily(&ctx, std::move(coeffs));
}

std::uint64_t KWiseSignFamily::evaluate(std::uint64_t x) const {
  std::uint64_t acc = 0;
  for (std::size_t t = coeffs_.size(); t-- > 0;) acc = ctx_->mul(acc, x) ^ coeffs_[t];
  return acc;
}

unsigned KWiseSignFamily::bit_at(std::uint64_t index) const {
  if ((index & ~ctx_->element_mask()) != 0)
    throw std::invalid_argument("sign_at: index outside the field range");
  return static_cast<unsigned>(evaluate(index) & 1U);
}

KWiseAuditResult audit_kwise_exhaustive(unsigned m, unsigned k) {
  if (k == 0 || static_cast<std::uint64_t>(k) * m > 30)
    throw std::invalid_argument("audit_kwise_exhaustive: coefficient space too large");
  const std::uint64_t points = std::uint64_t{1} << m;
  if (k > points) throw std::invalid_argument("audit_kwise_exhaustive: k exceeds field size");

  // All k-tuples of distinct points in increasing order.
  std::vector<std::vector<std::uint64_t>> tuples;
  std::vector<std::uint64_t> cur(k);
  auto rec = [&](auto&& self, unsigned depth, std::uint64_t start) -> void {
    if (depth == k) {
      tuples.push_back(cur);
      return;
    }
    for (std::uint64_t p = start; p < points; ++p) {
      cur[depth] = p;
      self(self, depth + 1, p + 1);
    }
  };
  rec(rec, 0, 0);

  const std::uint64_t families = std::uint64_t{1} << (k * m);
  const std::size_t patterns = std::size_t{1} << k;
  std::vector<std::uint64_t> counts(tuples.size() * patterns, 0);
  std::vector<unsigned> bits(points);
  std::vector<std::uint64_t> coeffs(k);
  std::int64_t sign_sum = 0;
  const std::uint64_t elem_mask = (std::uint64_t{1} << m) - 1;
  for (std::uint64_t f = 0; f < families; ++f) {
    for (unsigned t = 0; t < k; ++t) coeffs[t] = (f >> (t * m)) & elem_mask;
    const auto fam = KWiseSignFamily::from_coefficients(m, coeffs);
    for (std::uint64_t p = 0; p < points; ++p) {
      bits[p] = fam.bit_at(p);
      sign_sum += bits[p] ? -1 : 1;
    }
    for (std::size_t ti = 0; ti < tuples.size(); ++ti) {
      std::size_t pattern = 0;
      for (unsigned d = 0; d < k; ++d) pattern |= static_cast<std::size_t>(bits[tuples[ti][d]]) << d;
      ++counts[ti * patterns + pattern];
    }
  }
  const std::uint64_t expected = families / patterns;
  KWiseAuditResult res;
  res.m = m;
  res.k = k;
  res.tuples_checked = tuples.size();
  res.families = families;
  res.total_sign_sum = sign_sum;
  res.uniform = std::all_of(counts.begin(), counts.end(),
                            [&](std::uint64_t c) { return c == expected; });
  return res;
}

}  // namespace obliv
