#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "obliv/dense.hpp"
#include "obliv/operator.hpp"
#include "obliv/rng.hpp"

namespace obliv {

/// Dense-oracle dimension cap: OBLIV_ORACLE_CAP if set, else 2048.
std::size_t default_oracle_cap();

struct SpectralReport {
  std::vector<double> singular_values;  // descending
  double s_max = 0.0;
  double s_min = 0.0;
  double kappa = 0.0;  // infinity when s_min == 0
  std::string method;
  /// Method-specific residual: ||M^T M - V S^2 V^T||_F / ||M||_F^2 for Jacobi,
  /// ||M - U B V^T||-style orthogonality loss is not tracked for the bidiagonal path (0).
  double residual = 0.0;
  std::size_t sweeps = 0;
};

struct SvdResult {
  DenseMatrix U;
  DenseMatrix V;
  std::vector<double> sigma;  // descending; U and V columns follow this order
  SpectralReport report;
};

/// Column-by-column through apply on basis vectors. Throws CapabilityError above cap.
DenseMatrix materialize(const LinearOperator& op, std::size_t cap = default_oracle_cap());

/// One-sided Jacobi SVD with U and V; at most 60 sweeps, then std::runtime_error.
SvdResult svd_small(const DenseMatrix& m, std::size_t cap = default_oracle_cap());

/// Singular values only: Householder bidiagonalization, then bisection on the
/// Golub-Kahan tridiagonal. Faster than Jacobi for n in the hundreds and above.
SpectralReport singular_values(const DenseMatrix& m, std::size_t cap = default_oracle_cap());

/// Largest singular value (bidiagonalization plus bisection for the top value only).
double spectral_norm(const DenseMatrix& m);

/// Eigenvalues (ascending) of a symmetric matrix: tridiagonalization plus bisection.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& s);

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with diagonal a and
/// off-diagonal b (size a.size() - 1), by Sturm-count bisection.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& a, const std::vector<double>& b);

/// Determinant by LU with partial pivoting.
double determinant(DenseMatrix m);

/// Normal vector of the span of n-1 columns of length n: zeta_r = (-1)^(r+1) det(B^(r)),
/// B^(r) being the columns with row r removed (1-based r). Requires n <= 12.
Vector cofactor_normal(const std::vector<Vector>& columns);

/// The construction that defeats the dense part alone: u is a unit vector
/// orthogonal to columns 2..n of vhat (from the SVD of vhat^T with its first row
/// zeroed), j an index with |u_j| >= 1/sqrt(n), and
/// A = (<col_1(vhat), u> / (sqrt(n) u_j)) e_j e_1^T. With eps = 1/sqrt(n) and
/// sign diagonals D1, D2, A + eps D1 vhat D2 is singular when d1_j d2_1 = -1.
struct SingularConstruction {
  DenseMatrix a;
  Vector u;
  std::size_t j = 0;
};
SingularConstruction singular_construction(const DenseMatrix& vhat);

struct NamedMatrix {
  std::string name;
  DenseMatrix a;
};

/// Unit-norm hard inputs: rank_one (e_1 e_1^T), jordan (normalized 0.5 I + N),
/// near_singular (Q1 diag(1, ..., 1, 1e-14) Q2^T) and dense_defeating (built from vhat,
/// or from a fresh pattern matrix V / (3 sqrt(n)) drawn from src when absent).
std::vector<NamedMatrix> adversarial_suite(std::size_t n, const std::optional<DenseMatrix>& vhat, BitSource& src,
                                           std::size_t cap = default_oracle_cap());

}  // namespace obliv
