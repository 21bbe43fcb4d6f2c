#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "obliv/common.hpp"
#include "obliv/dense.hpp"
#include "obliv/rng.hpp"

namespace obliv {

/// Matvec-only access to an n x m matrix A with a declared accuracy tag:
/// ||apply(w) - A w|| <= eps_mach * ||A|| * ||w||.
///
/// Copies share state, including the query counter, so a counter read through
/// any copy sees every apply and apply_transpose made through the others.
class LinearOperator {
 public:
  using Kernel = std::function<void(std::span<const double>, std::span<double>)>;

  LinearOperator() = default;
  LinearOperator(std::size_t rows, std::size_t cols, double eps_mach, Kernel apply, Kernel apply_transpose,
                 std::string name = {});

  std::size_t rows() const { return state_->rows; }
  std::size_t cols() const { return state_->cols; }
  double eps_mach() const { return state_->eps; }
  const std::string& name() const { return state_->name; }
  bool valid() const { return static_cast<bool>(state_); }

  /// out = A in. Throws std::invalid_argument on dimension mismatch.
  void apply(std::span<const double> in, std::span<double> out) const;
  /// out = A^T in.
  void apply_transpose(std::span<const double> in, std::span<double> out) const;
  Vector apply(std::span<const double> in) const;
  Vector apply_transpose(std::span<const double> in) const;

  /// Queries made through this operator (apply and apply_transpose).
  std::uint64_t queries() const { return state_->count.load(std::memory_order_relaxed); }

  /// Operator for A^T with its own counter, reusing the same kernels.
  LinearOperator transposed() const;

 private:
  struct State {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double eps = 0.0;
    Kernel apply;
    Kernel apply_t;
    std::string name;
    mutable std::atomic<std::uint64_t> count{0};
  };
  std::shared_ptr<State> state_;
};

/// Coordinate-format sparse matrix (0-based).
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_index;
  std::vector<std::size_t> col_index;
  std::vector<double> values;

  DenseMatrix to_dense() const;
};

LinearOperator exact_from_dense(DenseMatrix a);
LinearOperator exact_from_sparse(const SparseMatrix& a);

enum class NoisePolicy {
  /// Full-size error pointing against A w (or e_1 when A w = 0).
  adversarial_direction,
  /// Uniformly random direction, magnitude uniform in [0, eps * hint * ||w||).
  random_direction,
  /// One relative rounding per output coordinate: y_i (1 + d_i), |d_i| <= eps.
  rounding_emulation,
};

NoisePolicy parse_noise_policy(const std::string& s);
std::string to_string(NoisePolicy p);

/// Adds error of size at most eps * norm_hint * ||w|| to every apply and
/// apply_transpose. Noise for call c comes from BitSource(seed).derive(c).
/// eps == 0 returns an operator with the same action; eps must lie in [0, 1).
LinearOperator inexact_wrap(const LinearOperator& op, double eps, double norm_hint, NoisePolicy policy,
                            std::uint64_t seed);

/// Rounding applied to the coordinatewise sum in sum_op (unit 0 = plain doubles).
struct RoundingModel {
  double unit = 0.0;
  std::uint64_t seed = 0;
};

/// A + E, tagged 9 * max(input tags, rounding unit). One query to each child per call.
LinearOperator sum_op(const LinearOperator& a, const LinearOperator& e, RoundingModel rounding = {});
/// c * A, same tag.
LinearOperator scaled_op(const LinearOperator& a, double c);
/// A^T A from matvec access to A and A^T, tagged 3 * max(input tags).
LinearOperator normal_equations_op(const LinearOperator& a, const LinearOperator& at);
/// A + sigma * 1 1^T. The shift is exact in working precision; A's tag is kept.
LinearOperator rank_one_shifted(const LinearOperator& a, double sigma);

/// Grid behind draw_gamma: points_per_side evenly spaced values on [D/2, D] and
/// their mirror, with D = 4 sqrt(n / (delta L)) and points_per_side = ceil(n^2 / (2 delta)).
struct GammaGrid {
  double D = 0.0;
  double C = 0.0;
  std::uint64_t points_per_side = 0;
  double value(std::uint64_t index) const;  // index in [0, 2 * points_per_side)
};
GammaGrid gamma_grid(std::size_t n, double delta, double L);
/// Uniform draw from the grid; requires L >= 4 n^3 / delta.
double draw_gamma(std::size_t n, double delta, double L, BitSource& src);

/// Smallest |a_ij| * L / norm_a; >= 1 means every entry satisfies |a_ij| >= ||A|| / L.
double entry_floor_ratio(const DenseMatrix& a, double norm_a, double L);

}  // namespace obliv
