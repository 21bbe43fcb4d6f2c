#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "obliv/perturb.hpp"
#include "obliv/spectra.hpp"

namespace obliv {

/// Runs behind the command-line tool and the acceptance checks. Every function
/// is deterministic in its arguments.

struct ConditionConfig {
  std::vector<std::size_t> ns;
  std::vector<std::uint64_t> seeds;
  double eps = 0.5;
  double delta = 0.1;
  PerturbationConfig perturbation;
  /// Seeds the pattern matrix (one per n, shared by every trial at that n) and
  /// the random members of the suite.
  std::uint64_t base_seed = 0;
  std::size_t oracle_cap = 0;  // 0 selects default_oracle_cap()
  /// s_n at or below this counts as singular.
  double singular_threshold = 1e-12;
};

struct ConditionRow {
  std::string family;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double s_min = 0.0;
  double s_max = 0.0;
  double kappa = 0.0;
};

struct ConditionPoint {
  std::size_t n = 0;
  std::size_t trials = 0;
  double median_kappa = 0.0;
  double nonsingular_fraction = 0.0;
  /// Empirical 10th percentile of s_n and the fraction of trials strictly below it.
  double s_min_q10 = 0.0;
  double fraction_below_q10 = 0.0;
};

struct ConditionSummary {
  std::vector<ConditionPoint> points;
  /// Least-squares slope of log(median kappa) against log n.
  double slope = 0.0;
  double nonsingular_fraction = 0.0;
};

struct ConditionResult {
  std::vector<ConditionRow> rows;  // ordered by (family, n, seed)
  ConditionSummary summary;
  nlohmann::json to_json() const;
  std::string rows_csv() const;
};

/// For each n: one pattern matrix V, the suite built against V / (rho sqrt n),
/// then one perturbation per (family, seed) and the singular values of A + eps R.
/// Throws CapabilityError when some n exceeds the oracle cap.
ConditionResult condition_experiment(const ConditionConfig& cfg);

/// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Linear-interpolation quantile of a copy of v, q in [0, 1].
double quantile(std::vector<double> v, double q);

struct BitAuditRow {
  std::size_t n = 0;
  /// Components of the first build at this n.
  BitReport bits;
  double mean_total = 0.0;
  double ratio = 0.0;  // mean_total / (n log2 n)
};

struct BitAuditResult {
  std::vector<BitAuditRow> rows;
  double max_over_min = 0.0;
  nlohmann::json to_json() const;
  std::string rows_csv() const;
};

/// `trials` builds per n with seeds derived from `seed`; zero trials gives an empty table.
BitAuditResult bit_audit(const std::vector<std::size_t>& ns, double eps, double delta,
                         const PerturbationConfig& config, std::uint64_t seed, std::size_t trials = 1);

/// Calibration of a fresh pattern matrix plus the Walsh-Hadamard witness.
/// rho_hat is skipped (with a warning entry) when n exceeds the cap.
nlohmann::json pattern_check(std::size_t n, std::uint64_t seed, std::size_t trials, double alpha,
                             unsigned hadamard_k, std::size_t oracle_cap);

nlohmann::json kwise_audit_json(unsigned m, unsigned k);

nlohmann::json spectral_report_json(const SpectralReport& r);

/// {n, K, L, bits_total, bits_by_component, heavy_rows} for a built perturbation.
nlohmann::json perturbation_summary(const ObliviousPerturbation& r);

}  // namespace obliv
