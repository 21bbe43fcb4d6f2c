#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "golden_values.hpp"
#include "obliv/rng.hpp"
#include "stats.hpp"

using obliv::BitSource;

TEST(BitSource, ZeroBitsLeavesCounterUnchanged) {
  BitSource s(5);
  EXPECT_EQ(s.next_bits(0), 0u);
  EXPECT_EQ(s.bits_consumed(), 0u);
  EXPECT_TRUE(s.next_bit_string(0).empty());
}

TEST(BitSource, TwoByteReadsEqualOneSixteenBitRead) {
  BitSource a(123), b(123);
  const auto lo = a.next_bits(8);
  const auto hi = a.next_bits(8);
  EXPECT_EQ(lo | (hi << 8), b.next_bits(16));
  EXPECT_EQ(a.bits_consumed(), 16u);
}

TEST(BitSource, ReadsStraddlingWordBoundaries) {
  BitSource a(9), b(9);
  std::vector<bool> bits;
  for (int i = 0; i < 10; ++i) {
    const auto w = a.next_bits(29);
    for (int j = 0; j < 29; ++j) bits.push_back((w >> j) & 1);
  }
  EXPECT_EQ(bits, b.next_bit_string(290));
}

TEST(BitSource, Seed42GoldenWords) {
  BitSource s(42);
  for (auto w : golden::kSeed42Words) EXPECT_EQ(s.next_bits(64), w);
  EXPECT_EQ(s.bits_consumed(), 192u);
}

TEST(BitSource, DeriveGolden) { EXPECT_EQ(BitSource(99).derive(5).seed(), golden::kDerive99Key5); }

TEST(BitSource, DeterministicReplay) {
  BitSource a(77), b(77);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(a.uniform_int(1000), b.uniform_int(1000));
    EXPECT_EQ(a.sample_k_subset(50, 5), b.sample_k_subset(50, 5));
  }
  EXPECT_EQ(a.bits_consumed(), b.bits_consumed());
}

TEST(BitSource, TapeReplayAndExhaustion) {
  auto s = BitSource::from_tape({true, false, true});
  EXPECT_EQ(s.next_bits(3), 0b101u);
  EXPECT_THROW(s.next_bit(), std::out_of_range);
}

TEST(UniformInt, SingletonDrawsNoBits) {
  BitSource s(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(s.uniform_int(1), 0u);
  EXPECT_EQ(s.bits_consumed(), 0u);
  EXPECT_THROW(s.uniform_int(0), std::invalid_argument);
}

TEST(UniformInt, Seed7Golden) {
  BitSource s(7);
  for (auto v : golden::kSeed7Uniform10) EXPECT_EQ(s.uniform_int(10), v);
  EXPECT_EQ(s.bits_consumed(), golden::kSeed7Uniform10Bits);
}

TEST(UniformInt, CoinFrequency) {
  BitSource s(2024);
  int ones = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ones += static_cast<int>(s.uniform_int(2));
  EXPECT_EQ(s.bits_consumed(), static_cast<std::uint64_t>(draws));
  EXPECT_NEAR(ones / double(draws), 0.5, 0.01);
}

TEST(UniformInt, SixCellsChiSquare) {
  BitSource s(31337);
  std::vector<double> counts(6, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[s.uniform_int(6)] += 1;
  EXPECT_GT(test_stats::chi_square_uniform_pvalue(counts), 0.001);
  // Expected bits per draw: 3 * 8/6.
  EXPECT_LE(s.bits_consumed(), 2u * 3u * draws);
}

TEST(UniformInt, RejectionCapAborts) {
  // A tape of all ones always yields 7 >= 5.
  auto s = BitSource::from_tape(std::vector<bool>(3 * 200, true));
  EXPECT_THROW(s.uniform_int(5), std::runtime_error);
}

TEST(SampleSubset, FullSet) {
  BitSource s(3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(s.sample_k_subset(5, 5), (std::vector<std::uint32_t>{1, 2, 3, 4, 5}));
}

TEST(SampleSubset, RejectsOversizedK) {
  BitSource s(3);
  EXPECT_THROW(s.sample_k_subset(4, 5), std::invalid_argument);
}

TEST(SampleSubset, Seed3Golden) {
  BitSource s(3);
  for (int t = 0; t < 3; ++t) {
    const auto got = s.sample_k_subset(100, 8);
    const std::vector<std::uint32_t> want(golden::kSeed3Subsets100of8 + 8 * t, golden::kSeed3Subsets100of8 + 8 * t + 8);
    EXPECT_EQ(got, want);
  }
  EXPECT_EQ(s.bits_consumed(), golden::kSeed3SubsetBits);
}

TEST(SampleSubset, SingletonFrequencies) {
  BitSource s(8);
  std::vector<double> counts(4, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[s.sample_k_subset(4, 1)[0] - 1] += 1;
  for (double c : counts) EXPECT_NEAR(c / draws, 0.25, 0.01);
}

TEST(SampleSubset, ChooseThreeOfSixChiSquare) {
  BitSource s(6);
  std::map<std::vector<std::uint32_t>, double> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[s.sample_k_subset(6, 3)] += 1;
  ASSERT_EQ(counts.size(), 20u);
  std::vector<double> c;
  for (auto& [k, v] : counts) c.push_back(v);
  EXPECT_GT(test_stats::chi_square_uniform_pvalue(c), 0.001);
}

TEST(SampleSubset, ExhaustiveChoiceSweepIsExactlyUniform) {
  // Every choice sequence of the Fisher-Yates walk for n <= 6 maps each
  // K-subset the same number of times: K! sequences per subset.
  for (std::uint32_t n = 1; n <= 6; ++n)
    for (std::uint32_t K = 1; K <= n; ++K) {
      std::map<std::vector<std::uint32_t>, int> counts;
      std::vector<std::uint64_t> ch(K, 0);
      for (;;) {
        counts[obliv::subset_from_choices(n, ch)]++;
        std::uint32_t t = 0;
        while (t < K && ++ch[t] == n - t) ch[t++] = 0;
        if (t == K) break;
      }
      std::uint64_t binom = 1, fact = 1;
      for (std::uint32_t i = 0; i < K; ++i) {
        binom = binom * (n - i) / (i + 1);
        fact *= i + 1;
      }
      ASSERT_EQ(counts.size(), binom) << n << " " << K;
      for (auto& [k, v] : counts) EXPECT_EQ(static_cast<std::uint64_t>(v), fact);
    }
}

TEST(SampleSubset, BitBudgetWithinFourKLogN) {
  for (std::uint32_t n : {64u, 1000u, 4096u}) {
    BitSource s(n);
    const std::uint32_t K = 8;
    for (std::uint32_t i = 0; i < n; ++i) s.sample_k_subset(n, K);
    EXPECT_LE(static_cast<double>(s.bits_consumed()), 4.0 * K * n * std::log2(double(n)));
  }
}

TEST(BitSource, GaussianMoments) {
  BitSource s(55);
  double m1 = 0, m2 = 0;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    const double g = s.next_gaussian();
    m1 += g;
    m2 += g * g;
  }
  EXPECT_NEAR(m1 / draws, 0.0, 0.02);
  EXPECT_NEAR(m2 / draws, 1.0, 0.03);
}

TEST(TestStats, ChiSquareTailMatchesTables) {
  EXPECT_NEAR(test_stats::gamma_q(0.5, 3.841458820694124 / 2), 0.05, 1e-9);
  EXPECT_NEAR(test_stats::gamma_q(9.5, 30.14352720564616 / 2), 0.05, 1e-9);
}
