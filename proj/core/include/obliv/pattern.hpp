#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "obliv/dense.hpp"
#include "obliv/kwise.hpp"
#include "obliv/rng.hpp"

namespace obliv {

/// Target constants of the pattern property: sparsity alpha, magnitude beta,
/// fraction gamma and norm factor rho (||V|| <= rho sqrt(n)).
struct PatternParams {
  double alpha = 0.01;
  double beta = 0.1;
  double gamma = 0.05;
  double rho = 3.0;
};

struct PatternBits {
  std::uint64_t fam1 = 0;
  std::uint64_t fam2 = 0;
  std::uint64_t fam3 = 0;
  std::uint64_t total() const { return fam1 + fam2 + fam3; }
};

/// The +-1 matrix V = V1 o V2 o V3^T, stored as family coefficients only.
///
/// entry(i, j) = sign1(i * 2^s + j) * sign2_i(j) * sign3_j(i) with s = ceil(log2 n).
/// sign1 is a 2s-wise family over GF(2^(2s)); sign2_i and sign3_j are 4-wise
/// families over GF(2^max(3, s)), one per row and one per column.
class PatternMatrix {
 public:
  static PatternMatrix build(std::size_t n, BitSource& src);
  /// Reassemble from stored coefficients (row-major per family, 4 per row/column).
  static PatternMatrix from_coefficients(std::size_t n, std::vector<std::uint64_t> fam1,
                                         std::vector<std::uint64_t> fam2,
                                         std::vector<std::uint64_t> fam3);

  std::size_t n() const { return n_; }
  unsigned index_shift() const { return shift_; }
  unsigned fam1_degree() const { return m1_; }
  unsigned fam23_degree() const { return m2_; }
  unsigned fam1_k() const { return static_cast<unsigned>(fam1_.size()); }
  std::span<const std::uint64_t> fam1_coefficients() const { return fam1_; }
  std::span<const std::uint64_t> fam2_coefficients() const { return fam2_; }
  std::span<const std::uint64_t> fam3_coefficients() const { return fam3_; }
  const PatternBits& bits() const { return bits_; }

  /// Reference evaluation by Horner's rule; 0-based indices.
  int entry(std::size_t i, std::size_t j) const;

  /// y = V x, streamed; throws std::invalid_argument on length mismatch.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// y = V^T x
  void apply_transpose(std::span<const double> x, std::span<double> y) const;
  Vector apply(std::span<const double> x) const;
  Vector apply_transpose(std::span<const double> x) const;

  /// Dense copy through the streaming kernel.
  DenseMatrix to_dense() const;
  /// Dense copy through entry(); the independent reference path.
  DenseMatrix to_dense_reference() const;

  /// Column j (or row j when `row` is set) through entry().
  Vector line(std::size_t j, bool row) const;

  /// y (+)= scale * diag(left) * V * diag(right) * x, or the transpose product
  /// scale * diag(right) * V^T * diag(left) * x. Empty sign spans mean all +1.
  /// This is the shared streaming kernel; working memory is about n words.
  void apply_scaled(std::span<const double> x, std::span<double> y, double scale,
                    std::span<const std::int8_t> left, std::span<const std::int8_t> right,
                    bool transpose, bool accumulate) const;
  /// scale * diag(left) * V * diag(right) as a dense matrix.
  DenseMatrix to_dense_scaled(double scale, std::span<const std::int8_t> left,
                              std::span<const std::int8_t> right) const;

 private:
  PatternMatrix() = default;
  void finish_setup();

  std::size_t n_ = 0;
  unsigned shift_ = 0;
  unsigned m1_ = 0;
  unsigned m2_ = 0;
  std::vector<std::uint64_t> fam1_;
  std::vector<std::uint64_t> fam2_;
  std::vector<std::uint64_t> fam3_;
  // bit0 masks of the row/column family coefficients, 4 per family.
  std::vector<std::uint64_t> mask2_;
  std::vector<std::uint64_t> mask3_;
  PatternBits bits_;
};

/// Number of nonzero coordinates of V diag(eta) x (or V^T diag(eta) x) with
/// magnitude >= beta.
/// x must have unit norm within 1e-9.
std::size_t large_coordinate_count(const PatternMatrix& v, std::span<const std::int8_t> eta,
                                   std::span<const double> x, double beta, bool transposed);

struct PatternCalibration {
  double rho_hat = 0.0;
  bool rho_available = false;
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
  std::size_t trials = 0;
  double alpha = 0.0;
};

/// Empirical pattern constants. rho_hat comes from the dense oracle on V (skipped
/// when n exceeds `oracle_cap`, unless `require_rho`, in which case a
/// CapabilityError is thrown). beta_hat is the largest grid threshold at which the
/// 1st percentile, over sampled alpha*n-sparse unit x and sign vectors eta, of the
/// fraction of large coordinates (both V and V^T) stays >= gamma_floor; gamma_hat
/// is that 1st-percentile fraction.
PatternCalibration calibrate(const PatternMatrix& v, std::size_t trials, double alpha, BitSource& src,
                             std::size_t oracle_cap, bool require_rho = true,
                             double gamma_floor = 0.05);

struct HadamardWitness {
  std::size_t n = 0;
  Vector x;
  std::vector<std::size_t> support_x;
  std::vector<std::size_t> support_hx;
};

/// x_j = 1 iff the top k bits of the 2k-bit index j are zero; H is the
/// unnormalized Walsh-Hadamard matrix of order n = 4^k.
HadamardWitness hadamard_sparse_witness(unsigned k, std::size_t cap);

/// In-place fast Walsh-Hadamard transform (unnormalized). Length must be a power of two.
void walsh_hadamard(std::span<double> v);

}  // namespace obliv
