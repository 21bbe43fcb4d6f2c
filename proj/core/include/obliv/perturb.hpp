#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "obliv/dense.hpp"
#include "obliv/operator.hpp"
#include "obliv/pattern.hpp"
#include "obliv/rng.hpp"

namespace obliv {

/// Parameters of R = (R1 + R2) / 2.
struct PerturbationConfig {
  PatternParams pattern;
  /// Nonzeros per column of the sparse part.
  std::uint32_t K = 8;
  /// Row trimming threshold; 0 selects ceil(2 e K). With 0, K is first lowered
  /// (down to 1) until ceil(2 e K) <= n, and L is capped at n.
  std::uint32_t L = 0;
  /// When set, K = ceil(rule_S / (delta^2 alpha^3)) and L = ceil(2 e K) replace K and L.
  bool k_from_rule = false;
  double rule_S = 1.0;
};

std::uint32_t default_L(std::uint32_t K);
/// K = ceil(S / (delta^2 alpha^3)).
std::uint32_t rule_K(double S, double delta, double alpha);

/// R1 = diag(d1) V diag(d2) / (rho sqrt(n)).
class DensePerturbation {
 public:
  DensePerturbation() = default;
  DensePerturbation(std::shared_ptr<const PatternMatrix> v, std::vector<std::int8_t> d1, std::vector<std::int8_t> d2,
                    double rho);

  std::size_t n() const { return v_ ? v_->n() : 0; }
  double rho() const { return rho_; }
  double scale() const { return scale_; }
  const PatternMatrix& pattern() const { return *v_; }
  std::shared_ptr<const PatternMatrix> pattern_ptr() const { return v_; }
  std::span<const std::int8_t> d1() const { return d1_; }
  std::span<const std::int8_t> d2() const { return d2_; }

  double entry(std::size_t i, std::size_t j) const;
  /// y (+)= R1 x
  void apply(std::span<const double> x, std::span<double> y, bool accumulate = false) const;
  /// y (+)= R1^T x
  void apply_transpose(std::span<const double> x, std::span<double> y, bool accumulate = false) const;
  DenseMatrix to_dense() const;

 private:
  std::shared_ptr<const PatternMatrix> v_;
  std::vector<std::int8_t> d1_;
  std::vector<std::int8_t> d2_;
  double rho_ = 1.0;
  double scale_ = 1.0;
};

/// Draws d1 then d2 (n bits each).
DensePerturbation build_r1(std::size_t n, std::shared_ptr<const PatternMatrix> v, double rho, BitSource& src);

/// Row-trimmed sparse hashing matrix R2 with entries X_{l,i} / L.
class SparsePerturbation {
 public:
  SparsePerturbation() = default;
  /// rows: n*K 0-based row indices, column-major, strictly increasing within a
  /// column; signs: +-1 in the same order.
  static SparsePerturbation from_parts(std::size_t n, std::uint32_t K, std::uint32_t L,
                                       std::vector<std::uint32_t> rows, std::vector<std::int8_t> signs);

  std::size_t n() const { return n_; }
  std::uint32_t K() const { return K_; }
  std::uint32_t L() const { return L_; }
  double scale() const { return 1.0 / static_cast<double>(L_); }
  std::span<const std::uint32_t> rows() const { return rows_; }
  std::span<const std::int8_t> signs() const { return signs_; }
  /// True for rows of the untrimmed matrix with more than L nonzeros.
  const std::vector<bool>& heavy_mask() const { return heavy_; }
  /// Nonzero count per row of the untrimmed matrix.
  std::vector<std::uint32_t> untrimmed_row_counts() const;

  /// y (+)= R2 x
  void apply(std::span<const double> x, std::span<double> y, bool accumulate = false) const;
  /// y (+)= R2^T x
  void apply_transpose(std::span<const double> x, std::span<double> y, bool accumulate = false) const;
  DenseMatrix to_dense() const;

 private:
  std::size_t n_ = 0;
  std::uint32_t K_ = 0;
  std::uint32_t L_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<std::int8_t> signs_;
  std::vector<bool> heavy_;
};

/// For each column: its K-subset, then its K signs in sorted-row order.
SparsePerturbation build_r2(std::size_t n, std::uint32_t K, std::uint32_t L, BitSource& src);

struct HeavyRowStats {
  /// Rows zeroed by the trimming rule (more than L nonzeros over all n columns).
  std::size_t trimmed_rows = 0;
  /// Rows with at least L nonzeros among the first n-1 columns.
  std::size_t heavy_prefix_rows = 0;
  /// n e^{-K} (e K / L)^L
  double bound = 0.0;
};
HeavyRowStats heavy_row_stats(const SparsePerturbation& sp);
/// n e^{-K} (e K / L)^L, evaluated in long double.
double heavy_row_bound(std::size_t n, double K, double L);

struct BitReport {
  std::uint64_t pattern_fam1 = 0;
  std::uint64_t pattern_fam2 = 0;
  std::uint64_t pattern_fam3 = 0;
  std::uint64_t d1 = 0;
  std::uint64_t d2 = 0;
  std::uint64_t r2_subsets = 0;
  std::uint64_t r2_signs = 0;
  std::uint64_t total() const;
  nlohmann::json to_json() const;
};

class ObliviousPerturbation {
 public:
  ObliviousPerturbation() = default;
  ObliviousPerturbation(DensePerturbation r1, SparsePerturbation r2, PerturbationConfig config, double eps,
                        double delta, BitReport bits);

  std::size_t n() const { return r1_.n(); }
  const DensePerturbation& r1() const { return r1_; }
  const SparsePerturbation& r2() const { return r2_; }
  const PerturbationConfig& config() const { return config_; }
  double eps() const { return eps_; }
  double delta() const { return delta_; }
  const BitReport& bits() const { return bits_; }

  /// y = (R1 x + R2 x) / 2, no temporaries.
  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_transpose(std::span<const double> x, std::span<double> y) const;
  Vector apply(std::span<const double> x) const;
  Vector apply_transpose(std::span<const double> x) const;
  DenseMatrix to_dense() const;

 private:
  DensePerturbation r1_;
  SparsePerturbation r2_;
  PerturbationConfig config_;
  double eps_ = 0.0;
  double delta_ = 0.0;
  BitReport bits_;
};

/// Draws, in order: the pattern matrix (unless `pattern` is given), d1, d2, then R2.
ObliviousPerturbation build_perturbation(std::size_t n, double eps, double delta, const PerturbationConfig& config,
                                         BitSource& src, std::shared_ptr<const PatternMatrix> pattern = nullptr);

/// Exact operator view (tag 0) sharing the perturbation.
LinearOperator perturbation_operator(std::shared_ptr<const ObliviousPerturbation> r);

/// Versioned JSON container; round trips bit-exactly.
nlohmann::json perturbation_to_json(const ObliviousPerturbation& r);
ObliviousPerturbation perturbation_from_json(const nlohmann::json& j);
/// Writes through a temporary file in the same directory, then renames, so a
/// failed write leaves no partial file. Errors carry the path.
void save_perturbation(const ObliviousPerturbation& r, const std::string& path);
ObliviousPerturbation load_perturbation(const std::string& path);

}  // namespace obliv
