#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "golden_values.hpp"
#include "obliv/pattern.hpp"
#include "obliv/spectra.hpp"

using namespace obliv;

namespace {

Vector random_vector(std::size_t n, BitSource& src) {
  Vector x(n);
  for (auto& v : x) v = src.next_gaussian();
  return x;
}

double rel_diff(const Vector& a, const Vector& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST(Pattern, SmallestCaseIsReproducible) {
  BitSource a(3), b(3);
  const auto v = PatternMatrix::build(2, a);
  const auto w = PatternMatrix::build(2, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(std::abs(v.entry(i, j)), 1);
      EXPECT_EQ(v.entry(i, j), w.entry(i, j));
    }
  EXPECT_EQ(a.bits_consumed(), v.bits().total());
}

TEST(Pattern, GoldenEightByEight) {
  BitSource src(5);
  const auto v = PatternMatrix::build(8, src);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(v.entry(i, j), golden::kPatternN8Seed5[i * 8 + j]) << i << "," << j;
  EXPECT_EQ(src.bits_consumed(), golden::kPatternN8Seed5Bits);
}

TEST(Pattern, GoldenChecksumN256) {
  BitSource src(1);
  const auto v = PatternMatrix::build(256, src);
  const DenseMatrix d = v.to_dense();
  long long total = 0, weighted = 0;
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j) {
      const auto e = static_cast<long long>(d(i, j));
      total += e;
      weighted += e * static_cast<long long>((31 * i + 17 * j) % 101);
    }
  EXPECT_EQ(total, golden::kPatternN256Seed1Sum);
  EXPECT_EQ(weighted, golden::kPatternN256Seed1Weighted);
}

TEST(Pattern, BitCountFormulaAndBound) {
  for (std::size_t n : {64u, 256u, 1024u}) {
    BitSource src(n);
    const auto v = PatternMatrix::build(n, src);
    const std::size_t s = ceil_log2(n);
    const std::uint64_t expect = 2 * s * v.fam1_degree() + 8 * n * v.fam23_degree();
    EXPECT_EQ(src.bits_consumed(), expect);
    EXPECT_EQ(v.bits().total(), expect);
    EXPECT_LE(expect, 10 * n * s);
  }
}

TEST(Pattern, FromCoefficientsReproducesEntries) {
  BitSource src(9);
  const auto v = PatternMatrix::build(32, src);
  const auto w = PatternMatrix::from_coefficients(
      32, {v.fam1_coefficients().begin(), v.fam1_coefficients().end()},
      {v.fam2_coefficients().begin(), v.fam2_coefficients().end()},
      {v.fam3_coefficients().begin(), v.fam3_coefficients().end()});
  EXPECT_EQ(max_abs_diff(v.to_dense(), w.to_dense()), 0.0);
}

TEST(Pattern, ApplyZeroAndBasisVector) {
  BitSource src(2);
  const auto v = PatternMatrix::build(64, src);
  const Vector zero(64, 0.0);
  for (double y : v.apply(zero)) EXPECT_EQ(y, 0.0);
  Vector e1(64, 0.0);
  e1[0] = 1.0;
  const Vector col = v.apply(e1);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(col[i], v.entry(i, 0));
  const Vector row = v.apply_transpose(e1);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(row[j], v.entry(0, j));
}

TEST(Pattern, StreamingMatchesReferenceDense) {
  for (std::size_t n : {3u, 17u, 64u, 200u, 512u}) {
    BitSource src(n + 100);
    const auto v = PatternMatrix::build(n, src);
    const DenseMatrix ref = v.to_dense_reference();
    EXPECT_EQ(max_abs_diff(ref, v.to_dense()), 0.0) << n;
    for (int t = 0; t < 3; ++t) {
      const Vector x = random_vector(n, src);
      EXPECT_LE(rel_diff(v.apply(x), ref.multiply(x)), 1e-12) << n;
      EXPECT_LE(rel_diff(v.apply_transpose(x), ref.multiply_transpose(x)), 1e-12) << n;
    }
  }
}

TEST(Pattern, ScaledKernelMatchesDiagonalProducts) {
  const std::size_t n = 40;
  BitSource src(77);
  const auto v = PatternMatrix::build(n, src);
  std::vector<std::int8_t> left(n), right(n);
  for (auto& s : left) s = static_cast<std::int8_t>(src.next_sign());
  for (auto& s : right) s = static_cast<std::int8_t>(src.next_sign());
  const DenseMatrix d = v.to_dense_scaled(0.25, left, right);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(d(i, j), 0.25 * left[i] * v.entry(i, j) * right[j]);
  const Vector x = random_vector(n, src);
  Vector y(n, 1.0);
  v.apply_scaled(x, y, 0.25, left, right, true, true);
  Vector expect = d.multiply_transpose(x);
  for (auto& e : expect) e += 1.0;
  EXPECT_LE(rel_diff(y, expect), 1e-14);
}

TEST(Pattern, DimensionMismatchRejected) {
  BitSource src(1);
  const auto v = PatternMatrix::build(8, src);
  Vector x(7, 1.0), y(8);
  EXPECT_THROW(v.apply(x, y), std::invalid_argument);
  EXPECT_THROW(PatternMatrix::build(1, src), std::invalid_argument);
}

TEST(LargeCoordinates, ThresholdZeroCountsNonzeros) {
  const std::size_t n = 64;
  BitSource src(4);
  const auto v = PatternMatrix::build(n, src);
  std::vector<std::int8_t> eta(n, 1);
  Vector x = random_vector(n, src);
  const double nx = norm2(x);
  for (auto& e : x) e /= nx;
  const Vector y = v.apply(x);
  std::size_t nonzero = 0;
  for (double e : y) nonzero += e != 0.0;
  EXPECT_EQ(large_coordinate_count(v, eta, x, 0.0, false), nonzero);
  EXPECT_EQ(large_coordinate_count(v, eta, x, std::sqrt(double(n)) + 1e-9, false), 0u);
  EXPECT_EQ(large_coordinate_count(v, eta, x, std::sqrt(double(n)) + 1e-9, true), 0u);
}

TEST(LargeCoordinates, BasisVectorGivesAllCoordinates) {
  const std::size_t n = 128;
  BitSource src(6);
  const auto v = PatternMatrix::build(n, src);
  std::vector<std::int8_t> eta(n, 1);
  Vector e1(n, 0.0);
  e1[0] = 1.0;
  EXPECT_EQ(large_coordinate_count(v, eta, e1, 0.5, false), n);
  EXPECT_EQ(large_coordinate_count(v, eta, e1, 0.5, true), n);
}

TEST(LargeCoordinates, SparseAndDensePathsAgree) {
  const std::size_t n = 64;
  BitSource src(8);
  const auto v = PatternMatrix::build(n, src);
  std::vector<std::int8_t> eta(n);
  for (auto& s : eta) s = static_cast<std::int8_t>(src.next_sign());
  for (std::size_t nnz : {2u, 8u, 9u, 64u}) {
    Vector x(n, 0.0);
    for (std::size_t k = 0; k < nnz; ++k) x[(k * 7) % n] = 1.0 / std::sqrt(double(nnz));
    for (bool tr : {false, true}) {
      Vector ex(n);
      for (std::size_t k = 0; k < n; ++k) ex[k] = eta[k] * x[k];
      const Vector y = tr ? v.apply_transpose(ex) : v.apply(ex);
      std::size_t expect = 0;
      for (double e : y) expect += e != 0.0 && std::abs(e) >= 0.3;
      EXPECT_EQ(large_coordinate_count(v, eta, x, 0.3, tr), expect) << nnz << " " << tr;
    }
  }
}

TEST(LargeCoordinates, NonUnitVectorRejected) {
  BitSource src(1);
  const auto v = PatternMatrix::build(8, src);
  std::vector<std::int8_t> eta(8, 1);
  Vector x(8, 1.0);
  EXPECT_THROW(large_coordinate_count(v, eta, x, 0.1, false), std::invalid_argument);
}

TEST(Calibrate, DeterministicUnderSameSeed) {
  BitSource src(12);
  const auto v = PatternMatrix::build(64, src);
  BitSource a(99), b(99);
  const auto c1 = calibrate(v, 50, 0.05, a, 2048);
  const auto c2 = calibrate(v, 50, 0.05, b, 2048);
  EXPECT_EQ(c1.rho_hat, c2.rho_hat);
  EXPECT_EQ(c1.beta_hat, c2.beta_hat);
  EXPECT_EQ(c1.gamma_hat, c2.gamma_hat);
}

TEST(Calibrate, NormFactorWithinThree) {
  BitSource src(13);
  const auto v = PatternMatrix::build(64, src);
  BitSource cal(14);
  const auto c = calibrate(v, 1000, 0.05, cal, 2048);
  ASSERT_TRUE(c.rho_available);
  EXPECT_LE(c.rho_hat, 3.0);
  EXPECT_GE(c.rho_hat, 1.0);  // ||V|| >= ||V||_F / sqrt(n) = sqrt(n)
  EXPECT_EQ(c.trials, 1000u);
}

TEST(Calibrate, OverCapIsCapabilityError) {
  BitSource src(1);
  const auto v = PatternMatrix::build(64, src);
  BitSource cal(2);
  EXPECT_THROW(calibrate(v, 5, 0.05, cal, 32), CapabilityError);
  BitSource cal2(2);
  const auto c = calibrate(v, 5, 0.05, cal2, 32, false);
  EXPECT_FALSE(c.rho_available);
}

TEST(Hadamard, FourByFour) {
  const auto w = hadamard_sparse_witness(1, 2048);
  EXPECT_EQ(w.n, 4u);
  EXPECT_EQ(w.x, (Vector{1, 1, 0, 0}));
  EXPECT_EQ(w.support_hx.size(), 2u);
}

TEST(Hadamard, SupportsAreSquareRootOfDimension) {
  for (unsigned k = 1; k <= 5; ++k) {
    const auto w = hadamard_sparse_witness(k, 2048);
    EXPECT_EQ(w.support_x.size(), std::size_t{1} << k);
    EXPECT_EQ(w.support_hx.size(), std::size_t{1} << k);
    EXPECT_EQ(w.support_x.size() * w.support_hx.size(), w.n);
  }
  EXPECT_THROW(hadamard_sparse_witness(6, 2048), CapabilityError);
}

TEST(Hadamard, TransformMatchesDenseDefinition) {
  const std::size_t n = 16;
  BitSource src(3);
  Vector x = random_vector(n, src), hx = x;
  walsh_hadamard(hx);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += (__builtin_popcountll(i & j) % 2 ? -1.0 : 1.0) * x[j];
    EXPECT_NEAR(hx[i], s, 1e-12);
  }
}
