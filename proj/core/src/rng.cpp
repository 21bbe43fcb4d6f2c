#include "obliv/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "obliv/common.hpp"

namespace obliv {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr int kMaxRejections = 128;
}  // namespace

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

BitSource::BitSource(std::uint64_t seed) : seed_(seed) {}

BitSource BitSource::from_tape(std::vector<bool> tape) {
  BitSource src(0);
  src.tape_mode_ = true;
  src.tape_ = std::move(tape);
  return src;
}

std::uint64_t BitSource::next_word() {
  ++word_index_;
  return splitmix64_mix(seed_ + word_index_ * kGamma);
}

std::uint64_t BitSource::next_bits(unsigned k) {
  if (k > 64) throw std::invalid_argument("next_bits: k must be at most 64");
  if (k == 0) return 0;
  consumed_ += k;
  if (tape_mode_) {
    if (tape_pos_ + k > tape_.size()) throw std::out_of_range("BitSource: bit tape exhausted");
    std::uint64_t out = 0;
    for (unsigned i = 0; i < k; ++i) {
      if (tape_[tape_pos_++]) out |= std::uint64_t{1} << i;
    }
    return out;
  }
  std::uint64_t out = 0;
  unsigned have = 0;
  while (have < k) {
    if (buffered_ == 0) {
      buffer_ = next_word();
      buffered_ = 64;
    }
    const unsigned take = std::min(k - have, buffered_);
    const std::uint64_t chunk = take == 64 ? buffer_ : (buffer_ & ((std::uint64_t{1} << take) - 1));
    out |= chunk << have;
    buffer_ = take == 64 ? 0 : (buffer_ >> take);
    buffered_ -= take;
    have += take;
  }
  return out;
}

std::vector<bool> BitSource::next_bit_string(std::size_t k) {
  std::vector<bool> out;
  out.reserve(k);
  while (k > 0) {
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(k, 64));
    const std::uint64_t w = next_bits(take);
    for (unsigned i = 0; i < take; ++i) out.push_back(((w >> i) & 1U) != 0);
    k -= take;
  }
  return out;
}

std::uint64_t BitSource::uniform_int(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("uniform_int: m must be positive");
  if (m == 1) return 0;
  const auto b = static_cast<unsigned>(ceil_log2(m));
  for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
    const std::uint64_t v = next_bits(b);
    if (v < m) return v;
  }
  throw std::runtime_error("uniform_int: " + std::to_string(kMaxRejections) +
                           " consecutive rejections for m=" + std::to_string(m) +
                           "; the bit generator looks broken");
}

std::vector<std::uint32_t> subset_from_choices(std::uint32_t n,
                                               std::span<const std::uint64_t> choices) {
  const std::size_t K = choices.size();
  if (K > n) throw std::invalid_argument("subset_from_choices: K > n");
  // Virtual array a[p] = p except at the positions recorded in `moved`.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> moved;
  moved.reserve(2 * K);
  auto read = [&](std::uint64_t p) {
    for (const auto& [pos, val] : moved)
      if (pos == p) return val;
    return p;
  };
  auto write = [&](std::uint64_t p, std::uint64_t v) {
    for (auto& [pos, val] : moved)
      if (pos == p) {
        val = v;
        return;
      }
    moved.emplace_back(p, v);
  };
  std::vector<std::uint32_t> out;
  out.reserve(K);
  for (std::size_t t = 0; t < K; ++t) {
    if (choices[t] >= n - t) throw std::invalid_argument("subset_from_choices: choice out of range");
    const std::uint64_t r = t + choices[t];
    const std::uint64_t picked = read(r);
    write(r, read(t));
    write(t, picked);
    out.push_back(static_cast<std::uint32_t>(picked + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> BitSource::sample_k_subset(std::uint32_t n, std::uint32_t K) {
  if (K > n) throw std::invalid_argument("sample_k_subset: K must not exceed n");
  std::vector<std::uint64_t> choices(K);
  for (std::uint32_t t = 0; t < K; ++t) choices[t] = uniform_int(n - t);
  return subset_from_choices(n, choices);
}

double BitSource::next_unit() {
  return static_cast<double>(next_bits(53)) * 0x1.0p-53;
}

double BitSource::next_gaussian() {
  const double u1 = 1.0 - next_unit();  // (0, 1]
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BitSource BitSource::derive(std::uint64_t key) const {
  return BitSource(splitmix64_mix(seed_ ^ splitmix64_mix(key + kGamma)));
}

}  // namespace obliv
