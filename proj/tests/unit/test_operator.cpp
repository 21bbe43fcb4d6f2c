#include <gtest/gtest.h>

#include <cmath>
#include <iomanip>

#include "obliv/operator.hpp"
#include "obliv/spectra.hpp"

using namespace obliv;

namespace {

Vector random_vector(std::size_t n, BitSource& src) {
  Vector x(n);
  for (auto& v : x) v = src.next_gaussian();
  return x;
}

double diff_norm(const Vector& a, const Vector& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

DenseMatrix diagonal(const Vector& d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

}  // namespace

TEST(ExactOperator, IdentityAndDiagonal) {
  const auto id = exact_from_dense(DenseMatrix::identity(5));
  const Vector x = {1, -2, 3, 0.5, 7};
  EXPECT_EQ(id.apply(x), x);
  EXPECT_EQ(id.eps_mach(), 0.0);
  const auto d3 = exact_from_dense(diagonal(Vector(4, 3.0)));
  EXPECT_EQ(d3.apply(Vector(4, 1.0)), Vector(4, 3.0));
}

TEST(ExactOperator, CounterSharedAcrossCopies) {
  const auto op = exact_from_dense(DenseMatrix::identity(3));
  const auto copy = op;
  op.apply(Vector(3, 1.0));
  copy.apply_transpose(Vector(3, 1.0));
  EXPECT_EQ(op.queries(), 2u);
  EXPECT_EQ(copy.queries(), 2u);
  const auto t = op.transposed();
  t.apply(Vector(3, 1.0));
  EXPECT_EQ(t.queries(), 1u);
  EXPECT_EQ(op.queries(), 2u);
}

TEST(ExactOperator, RectangularAndSparse) {
  DenseMatrix a(2, 3);
  a(0, 0) = 1;
  a(0, 2) = 2;
  a(1, 1) = -1;
  const auto op = exact_from_dense(a);
  EXPECT_EQ(op.apply(Vector{1, 1, 1}), (Vector{3, -1}));
  EXPECT_EQ(op.apply_transpose(Vector{1, 2}), (Vector{1, -2, 2}));
  Vector bad(2);
  EXPECT_THROW(op.apply(bad), std::invalid_argument);

  SparseMatrix s;
  s.rows = 2;
  s.cols = 3;
  s.row_index = {0, 0, 1};
  s.col_index = {0, 2, 1};
  s.values = {1, 2, -1};
  const auto sop = exact_from_sparse(s);
  EXPECT_EQ(sop.apply(Vector{1, 1, 1}), (Vector{3, -1}));
  EXPECT_EQ(sop.apply_transpose(Vector{1, 2}), (Vector{1, -2, 2}));
  EXPECT_EQ(max_abs_diff(s.to_dense(), a), 0.0);
}

TEST(InexactWrap, ZeroEpsIsExact) {
  BitSource src(1);
  const auto a = random_gaussian(10, 10, src);
  const auto op = exact_from_dense(a);
  for (auto policy : {NoisePolicy::adversarial_direction, NoisePolicy::random_direction,
                      NoisePolicy::rounding_emulation}) {
    const auto w = inexact_wrap(op, 0.0, 10.0, policy, 3);
    const Vector x = random_vector(10, src);
    EXPECT_EQ(w.apply(x), op.apply(x));
  }
}

TEST(InexactWrap, ErrorWithinBudgetForEveryPolicy) {
  BitSource src(2);
  const std::size_t n = 20;
  const auto a = random_gaussian(n, n, src);
  const double norm = spectral_norm(a);
  const auto op = exact_from_dense(a);
  for (auto policy : {NoisePolicy::adversarial_direction, NoisePolicy::random_direction,
                      NoisePolicy::rounding_emulation}) {
    const auto w = inexact_wrap(op, 1e-3, norm, policy, 7);
    EXPECT_EQ(w.eps_mach(), 1e-3);
    double worst = 0;
    for (int t = 0; t < 1000; ++t) {
      const Vector x = random_vector(n, src);
      const bool tr = t % 2;
      const Vector y = tr ? w.apply_transpose(x) : w.apply(x);
      const Vector ref = tr ? a.multiply_transpose(x) : a.multiply(x);
      worst = std::max(worst, diff_norm(y, ref) / (norm * norm2(x)));
    }
    EXPECT_LE(worst, 1e-3) << std::setprecision(17) << to_string(policy) << " " << worst;
    if (policy == NoisePolicy::adversarial_direction) {
      EXPECT_GT(worst, 0.9e-3);
    }
  }
}

TEST(InexactWrap, ZeroInputGivesZero) {
  const auto op = exact_from_dense(DenseMatrix::identity(4));
  for (auto policy : {NoisePolicy::adversarial_direction, NoisePolicy::random_direction,
                      NoisePolicy::rounding_emulation}) {
    const auto w = inexact_wrap(op, 0.1, 1.0, policy, 1);
    EXPECT_EQ(w.apply(Vector(4, 0.0)), Vector(4, 0.0));
  }
}

TEST(InexactWrap, DeterministicReplayAndBadEps) {
  BitSource src(5);
  const auto a = random_gaussian(6, 6, src);
  const auto w1 = inexact_wrap(exact_from_dense(a), 0.01, 5.0, NoisePolicy::random_direction, 9);
  const auto w2 = inexact_wrap(exact_from_dense(a), 0.01, 5.0, NoisePolicy::random_direction, 9);
  const Vector x = random_vector(6, src);
  EXPECT_EQ(w1.apply(x), w2.apply(x));
  EXPECT_EQ(w1.apply(x), w2.apply(x));
  EXPECT_THROW(inexact_wrap(exact_from_dense(a), 1.0, 5.0, NoisePolicy::random_direction, 9), std::invalid_argument);
  EXPECT_THROW(inexact_wrap(exact_from_dense(a), -0.1, 5.0, NoisePolicy::random_direction, 9), std::invalid_argument);
  EXPECT_EQ(parse_noise_policy(to_string(NoisePolicy::rounding_emulation)), NoisePolicy::rounding_emulation);
  EXPECT_THROW(parse_noise_policy("gaussian"), std::invalid_argument);
}

TEST(SumOperator, ZeroSummandAndDenseAgreement) {
  BitSource src(11);
  const std::size_t n = 64;
  const auto a = random_gaussian(n, n, src);
  const auto e = random_gaussian(n, n, src);
  const auto opa = exact_from_dense(a);
  const auto zero = exact_from_dense(DenseMatrix(n, n));
  const Vector x = random_vector(n, src);
  EXPECT_EQ(sum_op(opa, zero).apply(x), opa.apply(x));

  const auto ope = exact_from_dense(e);
  const auto s = sum_op(opa, ope);
  const DenseMatrix ae = a + e;
  const double nrm = spectral_norm(ae);
  EXPECT_LE(diff_norm(s.apply(x), ae.multiply(x)), 1e-12 * nrm * norm2(x));
  EXPECT_LE(diff_norm(s.apply_transpose(x), ae.multiply_transpose(x)), 1e-12 * nrm * norm2(x));
  EXPECT_EQ(opa.queries(), 4u);  // two queries came from the zero-summand check
  EXPECT_EQ(ope.queries(), 2u);
  EXPECT_THROW(sum_op(opa, exact_from_dense(DenseMatrix(n, n + 1))), std::invalid_argument);
}

TEST(SumOperator, TagIsNineTimesInputs) {
  const auto a = inexact_wrap(exact_from_dense(DenseMatrix::identity(3)), 1e-6, 1.0, NoisePolicy::rounding_emulation, 1);
  const auto e = exact_from_dense(DenseMatrix::identity(3));
  EXPECT_DOUBLE_EQ(sum_op(a, e).eps_mach(), 9e-6);
  EXPECT_DOUBLE_EQ(sum_op(e, e, {1e-6, 2}).eps_mach(), 9e-6);
}

TEST(SumOperator, RoundingEmulationWithinTag) {
  BitSource src(12);
  const std::size_t n = 32;
  const double u = 1e-6;
  const auto a = random_gaussian(n, n, src);
  DenseMatrix e = random_gaussian(n, n, src);
  const double na = spectral_norm(a);
  e *= 0.5 * na / spectral_norm(e);  // ||E|| <= ||A|| / 2
  const auto wa = inexact_wrap(exact_from_dense(a), u, na, NoisePolicy::rounding_emulation, 1);
  const auto we = inexact_wrap(exact_from_dense(e), u, 0.5 * na, NoisePolicy::rounding_emulation, 2);
  const auto s = sum_op(wa, we, {u, 3});
  const DenseMatrix ae = a + e;
  const double nae = spectral_norm(ae);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const Vector x = random_vector(n, src);
    worst = std::max(worst, diff_norm(s.apply(x), ae.multiply(x)) / (nae * norm2(x)));
  }
  EXPECT_LE(worst, s.eps_mach());
}

TEST(NormalEquations, OrthogonalGivesIdentity) {
  BitSource src(13);
  const auto q = random_orthogonal(16, src);
  const auto op = normal_equations_op(exact_from_dense(q), exact_from_dense(q.transposed()));
  const Vector x = random_vector(16, src);
  EXPECT_LE(diff_norm(op.apply(x), x), 1e-13 * norm2(x));
  EXPECT_EQ(op.apply(Vector(16, 0.0)), Vector(16, 0.0));
  EXPECT_THROW(normal_equations_op(exact_from_dense(DenseMatrix(3, 4)), exact_from_dense(DenseMatrix(3, 4))),
               std::invalid_argument);
}

TEST(NormalEquations, TagAndNearPositiveForm) {
  BitSource src(14);
  const std::size_t n = 24;
  const auto a = random_gaussian(n, n, src);
  const double na = spectral_norm(a);
  const auto wa = inexact_wrap(exact_from_dense(a), 1e-6, na, NoisePolicy::rounding_emulation, 4);
  const auto wat = inexact_wrap(exact_from_dense(a.transposed()), 1e-6, na, NoisePolicy::rounding_emulation, 5);
  const auto op = normal_equations_op(wa, wat);
  EXPECT_DOUBLE_EQ(op.eps_mach(), 3e-6);
  const DenseMatrix ata = matmul(a.transposed(), a);
  for (int t = 0; t < 200; ++t) {
    const Vector x = random_vector(n, src);
    const Vector y = op.apply(x);
    EXPECT_GE(dot(x, y), -op.eps_mach() * na * na * dot(x, x));
    EXPECT_LE(diff_norm(y, ata.multiply(x)), op.eps_mach() * na * na * norm2(x));
  }
}

TEST(RankOneShift, Examples) {
  BitSource src(15);
  const auto a = random_gaussian(5, 5, src);
  const auto op = exact_from_dense(a);
  const Vector x = random_vector(5, src);
  EXPECT_EQ(rank_one_shifted(op, 0.0).apply(x), op.apply(x));
  const auto z = rank_one_shifted(exact_from_dense(DenseMatrix(4, 4)), 1.0);
  EXPECT_EQ(z.apply(Vector{1, 0, 0, 0}), Vector(4, 1.0));
  EXPECT_THROW(rank_one_shifted(op, INFINITY), std::invalid_argument);
}

TEST(RankOneShift, MatchesDenseShift) {
  BitSource src(16);
  const std::size_t n = 32;
  const auto a = random_gaussian(n, n, src);
  const double sigma = 0.37;
  DenseMatrix shifted = a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) shifted(i, j) += sigma;
  const auto op = rank_one_shifted(exact_from_dense(a), sigma);
  EXPECT_LE(max_abs_diff(materialize(op), shifted), 1e-12 * spectral_norm(shifted));
  const Vector x = random_vector(n, src);
  EXPECT_LE(diff_norm(op.apply_transpose(x), shifted.multiply_transpose(x)), 1e-12 * norm2(x) * spectral_norm(shifted));
}

TEST(GammaDraw, GridArithmetic) {
  const auto g = gamma_grid(4, 0.5, 512);
  EXPECT_DOUBLE_EQ(g.D, 0.5);
  EXPECT_DOUBLE_EQ(g.C, 1.0);
  EXPECT_EQ(g.points_per_side, 16u);
  EXPECT_DOUBLE_EQ(g.value(0), -0.25);
  EXPECT_DOUBLE_EQ(g.value(15), -0.5);
  EXPECT_DOUBLE_EQ(g.value(16), 0.25);
  EXPECT_DOUBLE_EQ(g.value(31), 0.5);
  EXPECT_THROW(g.value(32), std::out_of_range);
}

TEST(GammaDraw, SupportAndSymmetry) {
  BitSource src(17);
  const std::size_t n = 4;
  const auto g = gamma_grid(n, 0.5, 512);
  int positive = 0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const double gamma = draw_gamma(n, 0.5, 512, src);
    EXPECT_GE(std::abs(gamma), g.D / 2 - 1e-15);
    EXPECT_LE(std::abs(gamma), g.D + 1e-15);
    positive += gamma > 0;
  }
  EXPECT_NEAR(static_cast<double>(positive) / draws, 0.5, 0.02);
}

TEST(GammaDraw, RejectsSmallL) {
  BitSource src(1);
  EXPECT_THROW(draw_gamma(4, 0.5, 511, src), std::invalid_argument);
  EXPECT_THROW(draw_gamma(4, 1.5, 1e6, src), std::invalid_argument);
}

TEST(GammaDraw, EntryFloorRatio) {
  DenseMatrix a(2, 2);
  a(0, 0) = 1;
  a(0, 1) = -0.5;
  a(1, 0) = 0.25;
  a(1, 1) = 2;
  EXPECT_DOUBLE_EQ(entry_floor_ratio(a, 2.0, 8.0), 1.0);
}
