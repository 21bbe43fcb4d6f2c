#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace obliv {

/// Deterministic bit stream with an exact count of consumed bits.
///
/// The generator is SplitMix64 used in counter mode: word t of the stream is
/// mix(seed + (t + 1) * 0x9E3779B97F4A7C15). Bits are handed out least
/// significant bit first, so next_bits(8) twice yields the same 16 bits as
/// next_bits(16). This choice is frozen; golden values in the tests depend on it.
///
/// A source can also replay an explicit bit tape, which is how tests force
/// particular draws. Reading past the end of a tape throws std::out_of_range.
class BitSource {
 public:
  explicit BitSource(std::uint64_t seed = 0);
  static BitSource from_tape(std::vector<bool> tape);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits_consumed() const { return consumed_; }

  /// Up to 64 bits; the first bit drawn lands in bit 0 of the result.
  std::uint64_t next_bits(unsigned k);
  std::vector<bool> next_bit_string(std::size_t k);
  bool next_bit() { return next_bits(1) != 0; }
  /// One bit: 0 -> +1, 1 -> -1.
  int next_sign() { return next_bit() ? -1 : 1; }

  /// Uniform on [0, m) by rejection on ceil(log2 m) bits. m == 1 draws no bits.
  /// Throws std::runtime_error after 128 consecutive rejections.
  std::uint64_t uniform_int(std::uint64_t m);

  /// Uniform K-subset of {1..n}, sorted ascending. Partial Fisher-Yates walk
  /// driven by uniform_int(n), uniform_int(n-1), ..., O(K) extra memory.
  std::vector<std::uint32_t> sample_k_subset(std::uint32_t n, std::uint32_t K);

  /// Uniform double in [0, 1) from 53 bits.
  double next_unit();
  /// Standard normal via Box-Muller (two next_unit draws).
  double next_gaussian();

  /// Independent source keyed by (seed, key). Does not touch this stream.
  BitSource derive(std::uint64_t key) const;

 private:
  std::uint64_t next_word();

  std::uint64_t seed_ = 0;
  std::uint64_t word_index_ = 0;
  std::uint64_t buffer_ = 0;
  unsigned buffered_ = 0;
  std::uint64_t consumed_ = 0;
  bool tape_mode_ = false;
  std::vector<bool> tape_;
  std::size_t tape_pos_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64_mix(std::uint64_t z);

/// The deterministic map behind sample_k_subset: choices[t] is the draw in
/// [0, n - t) at step t. Returns the sorted 1-based subset.
std::vector<std::uint32_t> subset_from_choices(std::uint32_t n,
                                               std::span<const std::uint64_t> choices);

}  // namespace obliv
