#include "obliv/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace obliv {

std::uint32_t default_L(std::uint32_t K) {
  return static_cast<std::uint32_t>(std::ceil(2.0 * std::numbers::e * static_cast<double>(K)));
}

std::uint32_t rule_K(double S, double delta, double alpha) {
  if (!(S > 0 && delta > 0 && delta < 1 && alpha > 0 && alpha < 1))
    throw std::invalid_argument("rule_K: need S > 0 and delta, alpha in (0, 1)");
  const double k = std::ceil(S / (delta * delta * alpha * alpha * alpha));
  if (k > 4.0e9) throw std::invalid_argument("rule_K: K does not fit in 32 bits");
  return static_cast<std::uint32_t>(k);
}

DensePerturbation::DensePerturbation(std::shared_ptr<const PatternMatrix> v, std::vector<std::int8_t> d1,
                                     std::vector<std::int8_t> d2, double rho)
    : v_(std::move(v)), d1_(std::move(d1)), d2_(std::move(d2)), rho_(rho) {
  if (!v_) throw std::invalid_argument("DensePerturbation: missing pattern matrix");
  if (d1_.size() != v_->n() || d2_.size() != v_->n())
    throw std::invalid_argument("DensePerturbation: sign vectors must have length n");
  for (const auto* d : {&d1_, &d2_})
    for (auto s : *d)
      if (s != 1 && s != -1) throw std::invalid_argument("DensePerturbation: sign entries must be +-1");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("DensePerturbation: rho must be positive");
  scale_ = 1.0 / (rho_ * std::sqrt(static_cast<double>(v_->n())));
}

double DensePerturbation::entry(std::size_t i, std::size_t j) const {
  return scale_ * d1_[i] * v_->entry(i, j) * d2_[j];
}

void DensePerturbation::apply(std::span<const double> x, std::span<double> y, bool accumulate) const {
  v_->apply_scaled(x, y, scale_, d1_, d2_, false, accumulate);
}

void DensePerturbation::apply_transpose(std::span<const double> x, std::span<double> y, bool accumulate) const {
  v_->apply_scaled(x, y, scale_, d1_, d2_, true, accumulate);
}

DenseMatrix DensePerturbation::to_dense() const { return v_->to_dense_scaled(scale_, d1_, d2_); }

DensePerturbation build_r1(std::size_t n, std::shared_ptr<const PatternMatrix> v, double rho, BitSource& src) {
  if (!v || v->n() != n) throw std::invalid_argument("build_r1: pattern matrix dimension must equal n");
  std::vector<std::int8_t> d1(n), d2(n);
  for (auto& s : d1) s = static_cast<std::int8_t>(src.next_sign());
  for (auto& s : d2) s = static_cast<std::int8_t>(src.next_sign());
  return DensePerturbation(std::move(v), std::move(d1), std::move(d2), rho);
}

SparsePerturbation SparsePerturbation::from_parts(std::size_t n, std::uint32_t K, std::uint32_t L,
                                                  std::vector<std::uint32_t> rows, std::vector<std::int8_t> signs) {
  if (K < 1 || K >= L || L > n) throw std::invalid_argument("SparsePerturbation: need 1 <= K < L <= n");
  if (rows.size() != n * K || signs.size() != n * K)
    throw std::invalid_argument("SparsePerturbation: expected n*K row indices and signs");
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t l = 0; l < K; ++l) {
      const std::uint32_t r = rows[i * K + l];
      if (r >= n) throw std::invalid_argument("SparsePerturbation: row index out of range");
      if (l > 0 && r <= rows[i * K + l - 1])
        throw std::invalid_argument("SparsePerturbation: row indices must increase within a column");
      const auto s = signs[i * K + l];
      if (s != 1 && s != -1) throw std::invalid_argument("SparsePerturbation: signs must be +-1");
    }
  SparsePerturbation sp;
  sp.n_ = n;
  sp.K_ = K;
  sp.L_ = L;
  sp.rows_ = std::move(rows);
  sp.signs_ = std::move(signs);
  const auto counts = sp.untrimmed_row_counts();
  sp.heavy_.resize(n);
  for (std::size_t r = 0; r < n; ++r) sp.heavy_[r] = counts[r] > L;
  return sp;
}

std::vector<std::uint32_t> SparsePerturbation::untrimmed_row_counts() const {
  std::vector<std::uint32_t> c(n_, 0);
  for (auto r : rows_) ++c[r];
  return c;
}

void SparsePerturbation::apply(std::span<const double> x, std::span<double> y, bool accumulate) const {
  if (x.size() != n_ || y.size() != n_) throw std::invalid_argument("SparsePerturbation::apply: dimension mismatch");
  if (!accumulate) std::fill(y.begin(), y.end(), 0.0);
  const double s = scale();
  for (std::size_t i = 0; i < n_; ++i) {
    const double xi = s * x[i];
    if (xi == 0.0) continue;
    for (std::uint32_t l = 0; l < K_; ++l) {
      const std::uint32_t r = rows_[i * K_ + l];
      if (!heavy_[r]) y[r] += signs_[i * K_ + l] * xi;
    }
  }
}

void SparsePerturbation::apply_transpose(std::span<const double> x, std::span<double> y, bool accumulate) const {
  if (x.size() != n_ || y.size() != n_)
    throw std::invalid_argument("SparsePerturbation::apply_transpose: dimension mismatch");
  const double s = scale();
  for (std::size_t i = 0; i < n_; ++i) {
    double t = 0.0;
    for (std::uint32_t l = 0; l < K_; ++l) {
      const std::uint32_t r = rows_[i * K_ + l];
      if (!heavy_[r]) t += signs_[i * K_ + l] * x[r];
    }
    y[i] = accumulate ? y[i] + s * t : s * t;
  }
}

DenseMatrix SparsePerturbation::to_dense() const {
  DenseMatrix m(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::uint32_t l = 0; l < K_; ++l) {
      const std::uint32_t r = rows_[i * K_ + l];
      if (!heavy_[r]) m(r, i) = signs_[i * K_ + l] * scale();
    }
  return m;
}

SparsePerturbation build_r2(std::size_t n, std::uint32_t K, std::uint32_t L, BitSource& src) {
  if (K < 1 || K >= L || L > n) throw std::invalid_argument("build_r2: need 1 <= K < L <= n");
  std::vector<std::uint32_t> rows(n * K);
  std::vector<std::int8_t> signs(n * K);
  for (std::size_t i = 0; i < n; ++i) {
    const auto J = src.sample_k_subset(static_cast<std::uint32_t>(n), K);
    for (std::uint32_t l = 0; l < K; ++l) rows[i * K + l] = J[l] - 1;
    for (std::uint32_t l = 0; l < K; ++l) signs[i * K + l] = static_cast<std::int8_t>(src.next_sign());
  }
  return SparsePerturbation::from_parts(n, K, L, std::move(rows), std::move(signs));
}

double heavy_row_bound(std::size_t n, double K, double L) {
  const long double nn = static_cast<long double>(n);
  const long double k = K;
  const long double l = L;
  return static_cast<double>(nn * std::exp(-k) * std::pow(std::numbers::e_v<long double> * k / l, l));
}

HeavyRowStats heavy_row_stats(const SparsePerturbation& sp) {
  HeavyRowStats st;
  const std::size_t n = sp.n();
  for (std::size_t r = 0; r < n; ++r) st.trimmed_rows += sp.heavy_mask()[r];
  std::vector<std::uint32_t> prefix(n, 0);
  const auto rows = sp.rows();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::uint32_t l = 0; l < sp.K(); ++l) ++prefix[rows[i * sp.K() + l]];
  for (std::size_t r = 0; r < n; ++r) st.heavy_prefix_rows += prefix[r] >= sp.L();
  st.bound = heavy_row_bound(n, sp.K(), sp.L());
  return st;
}

std::uint64_t BitReport::total() const {
  return pattern_fam1 + pattern_fam2 + pattern_fam3 + d1 + d2 + r2_subsets + r2_signs;
}

nlohmann::json BitReport::to_json() const {
  return {{"pattern_v1", pattern_fam1}, {"pattern_v2", pattern_fam2}, {"pattern_v3", pattern_fam3},
          {"d1", d1},                   {"d2", d2},                     {"r2_subsets", r2_subsets},
          {"r2_signs", r2_signs},       {"total", total()}};
}

ObliviousPerturbation::ObliviousPerturbation(DensePerturbation r1, SparsePerturbation r2, PerturbationConfig config,
                                             double eps, double delta, BitReport bits)
    : r1_(std::move(r1)), r2_(std::move(r2)), config_(config), eps_(eps), delta_(delta), bits_(bits) {
  if (r1_.n() != r2_.n()) throw std::invalid_argument("ObliviousPerturbation: R1 and R2 dimensions differ");
}

void ObliviousPerturbation::apply(std::span<const double> x, std::span<double> y) const {
  r1_.apply(x, y, false);
  r2_.apply(x, y, true);
  for (double& v : y) v *= 0.5;
}

void ObliviousPerturbation::apply_transpose(std::span<const double> x, std::span<double> y) const {
  r1_.apply_transpose(x, y, false);
  r2_.apply_transpose(x, y, true);
  for (double& v : y) v *= 0.5;
}

Vector ObliviousPerturbation::apply(std::span<const double> x) const {
  Vector y(n());
  apply(x, y);
  return y;
}

Vector ObliviousPerturbation::apply_transpose(std::span<const double> x) const {
  Vector y(n());
  apply_transpose(x, y);
  return y;
}

DenseMatrix ObliviousPerturbation::to_dense() const {
  DenseMatrix m = r1_.to_dense();
  m += r2_.to_dense();
  m *= 0.5;
  return m;
}

ObliviousPerturbation build_perturbation(std::size_t n, double eps, double delta, const PerturbationConfig& config,
                                         BitSource& src, std::shared_ptr<const PatternMatrix> pattern) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("build_perturbation: eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("build_perturbation: delta must lie in (0, 1)");
  if (n < 2) throw std::invalid_argument("build_perturbation: n must be at least 2");
  PerturbationConfig cfg = config;
  if (cfg.k_from_rule) {
    cfg.K = rule_K(cfg.rule_S, delta, cfg.pattern.alpha);
    cfg.L = default_L(cfg.K);
  } else if (cfg.L == 0) {
    // Small n: shrink K until ceil(2 e K) fits, so automatic parameters always build.
    while (cfg.K > 1 && default_L(cfg.K) > n) --cfg.K;
    cfg.L = std::min<std::uint32_t>(default_L(cfg.K), static_cast<std::uint32_t>(std::min<std::size_t>(n, UINT32_MAX)));
  }
  if (cfg.K >= cfg.L) throw std::invalid_argument("build_perturbation: need K < L");
  if (cfg.L > n) throw std::invalid_argument("build_perturbation: L exceeds n");

  BitReport bits;
  if (pattern) {
    if (pattern->n() != n) throw std::invalid_argument("build_perturbation: pattern dimension must equal n");
  } else {
    pattern = std::make_shared<const PatternMatrix>(PatternMatrix::build(n, src));
    bits.pattern_fam1 = pattern->bits().fam1;
    bits.pattern_fam2 = pattern->bits().fam2;
    bits.pattern_fam3 = pattern->bits().fam3;
  }
  const std::uint64_t b0 = src.bits_consumed();
  DensePerturbation r1 = build_r1(n, pattern, cfg.pattern.rho, src);
  bits.d1 = n;
  bits.d2 = n;
  const std::uint64_t b1 = src.bits_consumed();
  if (b1 - b0 != 2 * n) throw std::logic_error("build_perturbation: unexpected bit count for d1, d2");

  // R2: separate the subset and sign bits by replaying the per-column draw order.
  std::vector<std::uint32_t> rows(n * cfg.K);
  std::vector<std::int8_t> signs(n * cfg.K);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t s0 = src.bits_consumed();
    const auto J = src.sample_k_subset(static_cast<std::uint32_t>(n), cfg.K);
    bits.r2_subsets += src.bits_consumed() - s0;
    for (std::uint32_t l = 0; l < cfg.K; ++l) rows[i * cfg.K + l] = J[l] - 1;
    for (std::uint32_t l = 0; l < cfg.K; ++l) signs[i * cfg.K + l] = static_cast<std::int8_t>(src.next_sign());
    bits.r2_signs += cfg.K;
  }
  SparsePerturbation r2 = SparsePerturbation::from_parts(n, cfg.K, cfg.L, std::move(rows), std::move(signs));
  return ObliviousPerturbation(std::move(r1), std::move(r2), cfg, eps, delta, bits);
}

LinearOperator perturbation_operator(std::shared_ptr<const ObliviousPerturbation> r) {
  const std::size_t n = r->n();
  return LinearOperator(
      n, n, 0.0, [r](std::span<const double> in, std::span<double> out) { r->apply(in, out); },
      [r](std::span<const double> in, std::span<double> out) { r->apply_transpose(in, out); }, "R");
}

}  // namespace obliv
