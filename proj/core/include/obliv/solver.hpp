#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "obliv/common.hpp"
#include "obliv/operator.hpp"
#include "obliv/perturb.hpp"
#include "obliv/rng.hpp"

namespace obliv {

struct SolveConfig {
  double eps = 0.1;
  double delta = 0.1;
  /// 0 selects cap_constant * n * ln(1/eps) / eps^3.
  std::uint64_t max_matvecs = 0;
  double cap_constant = 200.0;
  /// Target for ||A~ x - b|| / ||b||; 0 selects eps.
  double cg_tolerance = 0.0;
  std::size_t norm_probes = 4;
  /// Power steps per norm candidate; 0 selects ceil(log2 n) + 1.
  std::size_t norm_steps = 0;
  std::size_t residual_check_every = 25;
  PerturbationConfig perturbation;
};

/// cap_constant * n * ln(1/eps) / eps^3, rounded up.
std::uint64_t default_matvec_cap(std::size_t n, double eps, double cap_constant = 200.0);

struct NormEstimate {
  double Z = 0.0;
  /// Hutchinson estimate of the Frobenius norm that seeds the candidate ladder.
  double Z_hat = 0.0;
  std::vector<double> candidates;
  std::vector<double> candidate_estimates;
  std::uint64_t matvecs_used = 0;
  std::uint64_t probe_seed = 0;
  std::size_t retries = 0;
};

/// sqrt of the mean of ||A r_i||^2 over k Rademacher probes.
double hutchinson_norm(const LinearOperator& a, std::size_t k, BitSource& src);

/// Power iteration on M = A^T A / Zc^2 + I / 8 for each candidate Zc on a
/// doubling ladder from Z_hat / sqrt(n) up to Z_hat, all from one shared random
/// start; returns the largest ||A z|| / ||z|| seen. Never exceeds ||A|| beyond
/// rounding. steps == 0 selects ceil(log2 n) + 1. Throws std::invalid_argument
/// for probes == 0 or an operator that maps every probe to zero, and
/// std::runtime_error after 3 zero starts.
NormEstimate estimate_norm(const LinearOperator& a, const LinearOperator& at, BitSource& src, std::size_t steps = 0,
                           std::size_t probes = 4);

enum class CgStatus { converged, max_iterations, breakdown, budget_exhausted };
std::string to_string(CgStatus s);

struct CgOptions {
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  /// The true residual is recomputed every `check_every` iterations, and also
  /// whenever the recurrence residual ||r|| / ||v|| drops below `recurrence_tol`.
  std::size_t check_every = 25;
  double recurrence_tol = -1.0;  // < 0 selects tol
  /// Certified residual measure compared against tol. Default: ||M x - v|| / ||v||.
  std::function<double(std::span<const double>)> true_residual;
  /// Checked before each iteration; true stops with budget_exhausted.
  std::function<bool()> out_of_budget;
};

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  CgStatus status = CgStatus::max_iterations;
  /// Recurrence residual ||r_k|| / ||v|| after each iteration.
  std::vector<double> residual_history;
  /// Last certified residual (NaN when never checked).
  double certified_residual = 0.0;
  /// p^T M p / ||p||^2 at breakdown.
  double breakdown_curvature = 0.0;
};

/// Conjugate gradients on M x = v from x = 0. Four work vectors.
CgResult cg_normal_equations(const LinearOperator& m, std::span<const double> v, const CgOptions& opts = {});

struct SolveReport {
  Vector x;
  double residual_norm = 0.0;
  double backward_ratio = 0.0;
  double norm_estimate = 0.0;
  double perturbed_residual = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  std::uint64_t matvecs_used = 0;
  std::uint64_t matvec_cap = 0;
  std::size_t iterations = 0;
  bool succeeded = false;
  bool cap_hit = false;
  CgStatus cg_status = CgStatus::max_iterations;
  NormEstimate norm;
  BitReport bits;
  double eps = 0.0;
  double delta = 0.0;

  nlohmann::json to_json(bool include_x = true) const;
};

/// Backward-stable solve through the perturbed, rank-one shifted normal equations.
/// matvecs_used counts queries to `a` and `at` only.
SolveReport solve_backward(const LinearOperator& a, const LinearOperator& at, std::span<const double> b,
                           const SolveConfig& cfg, BitSource& src);

/// ||A x - b|| / (norm_a ||x||); +infinity when x == 0. One query to `a`.
double backward_error(const LinearOperator& a, std::span<const double> x, std::span<const double> b, double norm_a);

}  // namespace obliv
