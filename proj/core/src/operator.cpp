#include "obliv/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "obliv/audit.hpp"

namespace obliv {

LinearOperator::LinearOperator(std::size_t rows, std::size_t cols, double eps_mach, Kernel apply,
                               Kernel apply_transpose, std::string name)
    : state_(std::make_shared<State>()) {
  if (!(eps_mach >= 0.0) || !std::isfinite(eps_mach)) throw std::invalid_argument("LinearOperator: bad eps tag");
  state_->rows = rows;
  state_->cols = cols;
  state_->eps = eps_mach;
  state_->apply = std::move(apply);
  state_->apply_t = std::move(apply_transpose);
  state_->name = std::move(name);
}

void LinearOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != state_->cols || out.size() != state_->rows)
    throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
  state_->count.fetch_add(1, std::memory_order_relaxed);
  state_->apply(in, out);
}

void LinearOperator::apply_transpose(std::span<const double> in, std::span<double> out) const {
  if (in.size() != state_->rows || out.size() != state_->cols)
    throw std::invalid_argument("LinearOperator::apply_transpose: dimension mismatch");
  state_->count.fetch_add(1, std::memory_order_relaxed);
  state_->apply_t(in, out);
}

Vector LinearOperator::apply(std::span<const double> in) const {
  Vector out(rows());
  apply(in, out);
  return out;
}

Vector LinearOperator::apply_transpose(std::span<const double> in) const {
  Vector out(cols());
  apply_transpose(in, out);
  return out;
}

LinearOperator LinearOperator::transposed() const {
  return LinearOperator(state_->cols, state_->rows, state_->eps, state_->apply_t, state_->apply,
                        state_->name.empty() ? std::string{} : state_->name + "^T");
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix m(rows, cols);
  for (std::size_t k = 0; k < values.size(); ++k) m(row_index[k], col_index[k]) += values[k];
  return m;
}

LinearOperator exact_from_dense(DenseMatrix a) {
  auto m = std::make_shared<const DenseMatrix>(std::move(a));
  return LinearOperator(
      m->rows(), m->cols(), 0.0, [m](std::span<const double> in, std::span<double> out) { m->multiply(in, out); },
      [m](std::span<const double> in, std::span<double> out) { m->multiply_transpose(in, out); }, "dense");
}

LinearOperator exact_from_sparse(const SparseMatrix& a) {
  if (a.row_index.size() != a.values.size() || a.col_index.size() != a.values.size())
    throw std::invalid_argument("exact_from_sparse: inconsistent triplet arrays");
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (a.row_index[k] >= a.rows || a.col_index[k] >= a.cols)
      throw std::invalid_argument("exact_from_sparse: index out of range");
  auto m = std::make_shared<const SparseMatrix>(a);
  return LinearOperator(
      m->rows, m->cols, 0.0,
      [m](std::span<const double> in, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < m->values.size(); ++k) out[m->row_index[k]] += m->values[k] * in[m->col_index[k]];
      },
      [m](std::span<const double> in, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < m->values.size(); ++k) out[m->col_index[k]] += m->values[k] * in[m->row_index[k]];
      },
      "sparse");
}

NoisePolicy parse_noise_policy(const std::string& s) {
  if (s == "adversarial" || s == "adversarial-direction") return NoisePolicy::adversarial_direction;
  if (s == "random" || s == "random-direction") return NoisePolicy::random_direction;
  if (s == "rounding" || s == "rounding-emulation") return NoisePolicy::rounding_emulation;
  throw std::invalid_argument("unknown noise policy '" + s + "'");
}

std::string to_string(NoisePolicy p) {
  switch (p) {
    case NoisePolicy::adversarial_direction:
      return "adversarial-direction";
    case NoisePolicy::random_direction:
      return "random-direction";
    case NoisePolicy::rounding_emulation:
      return "rounding-emulation";
  }
  return "unknown";
}

namespace {

// Keeps the realized error inside the budget despite rounding in the update itself:
// each coordinate update rounds by at most one unit in the last place of its result.
constexpr double kBudgetShrink = 1.0 - 1e-14;
constexpr double kUpdateRounding = 4.0 * std::numeric_limits<double>::epsilon();

struct NoiseState {
  double eps;
  double hint;
  NoisePolicy policy;
  BitSource base;
  std::atomic<std::uint64_t> calls{0};
};

void add_noise(NoiseState& st, std::span<const double> w, std::span<double> out) {
  const double budget = st.eps * st.hint * norm2(w) * kBudgetShrink - kUpdateRounding * norm2(out);
  if (!(budget > 0.0)) return;
  const std::uint64_t call = st.calls.fetch_add(1, std::memory_order_relaxed);
  switch (st.policy) {
    case NoisePolicy::adversarial_direction: {
      const double yn = norm2(out);
      if (yn > 0.0) {
        const double f = budget / yn;
        for (double& v : out) v -= f * v;
      } else {
        out[0] += budget;
      }
      return;
    }
    case NoisePolicy::random_direction: {
      BitSource s1 = st.base.derive(call);
      const double mag = budget * s1.next_unit();
      double gn2 = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double g = s1.next_gaussian();
        gn2 += g * g;
      }
      if (gn2 == 0.0) return;
      const double f = mag / std::sqrt(gn2);
      BitSource s2 = st.base.derive(call);
      s2.next_unit();
      for (double& v : out) v += f * s2.next_gaussian();
      return;
    }
    case NoisePolicy::rounding_emulation: {
      // Two passes over the same derived stream: measure, then apply with a clamp
      // that only matters when the wrapped operator's output exceeds hint * ||w||.
      BitSource s1 = st.base.derive(call);
      double en2 = 0.0;
      for (double v : out) {
        const double e = v * st.eps * (2.0 * s1.next_unit() - 1.0);
        en2 += e * e;
      }
      const double en = std::sqrt(en2);
      const double clamp = en > budget ? budget / en : 1.0;
      BitSource s2 = st.base.derive(call);
      for (double& v : out) v += clamp * v * st.eps * (2.0 * s2.next_unit() - 1.0);
      return;
    }
  }
}

}  // namespace

LinearOperator inexact_wrap(const LinearOperator& op, double eps, double norm_hint, NoisePolicy policy,
                            std::uint64_t seed) {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("inexact_wrap: eps must lie in [0, 1)");
  if (!(norm_hint >= 0.0) || !std::isfinite(norm_hint)) throw std::invalid_argument("inexact_wrap: bad norm hint");
  auto st = std::make_shared<NoiseState>();
  st->eps = eps;
  st->hint = norm_hint;
  st->policy = policy;
  st->base = BitSource(seed);
  return LinearOperator(
      op.rows(), op.cols(), op.eps_mach() + eps,
      [op, st](std::span<const double> in, std::span<double> out) {
        op.apply(in, out);
        add_noise(*st, in, out);
      },
      [op, st](std::span<const double> in, std::span<double> out) {
        op.apply_transpose(in, out);
        add_noise(*st, in, out);
      },
      "inexact(" + op.name() + ")");
}

namespace {

struct RoundingState {
  RoundingModel model;
  BitSource base;
  std::atomic<std::uint64_t> calls{0};
};

void round_sum(RoundingState& st, std::span<double> out) {
  if (st.model.unit == 0.0) return;
  BitSource s = st.base.derive(st.calls.fetch_add(1, std::memory_order_relaxed));
  for (double& v : out) v *= 1.0 + st.model.unit * (2.0 * s.next_unit() - 1.0);
}

}  // namespace

LinearOperator sum_op(const LinearOperator& a, const LinearOperator& e, RoundingModel rounding) {
  if (a.rows() != e.rows() || a.cols() != e.cols()) throw std::invalid_argument("sum_op: dimension mismatch");
  if (!(rounding.unit >= 0.0 && rounding.unit < 1.0)) throw std::invalid_argument("sum_op: bad rounding unit");
  auto st = std::make_shared<RoundingState>();
  st->model = rounding;
  st->base = BitSource(rounding.seed);
  const double tag = 9.0 * std::max({a.eps_mach(), e.eps_mach(), rounding.unit});
  return LinearOperator(
      a.rows(), a.cols(), tag,
      [a, e, st](std::span<const double> in, std::span<double> out) {
        a.apply(in, out);
        WorkVector t(out.size());
        e.apply(in, t.span());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
        round_sum(*st, out);
      },
      [a, e, st](std::span<const double> in, std::span<double> out) {
        a.apply_transpose(in, out);
        WorkVector t(out.size());
        e.apply_transpose(in, t.span());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
        round_sum(*st, out);
      },
      "(" + a.name() + "+" + e.name() + ")");
}

LinearOperator scaled_op(const LinearOperator& a, double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("scaled_op: scale must be finite");
  return LinearOperator(
      a.rows(), a.cols(), a.eps_mach(),
      [a, c](std::span<const double> in, std::span<double> out) {
        a.apply(in, out);
        for (double& v : out) v *= c;
      },
      [a, c](std::span<const double> in, std::span<double> out) {
        a.apply_transpose(in, out);
        for (double& v : out) v *= c;
      },
      "c*" + a.name());
}

LinearOperator normal_equations_op(const LinearOperator& a, const LinearOperator& at) {
  if (a.rows() != at.cols() || a.cols() != at.rows())
    throw std::invalid_argument("normal_equations_op: A and A^T dimensions disagree");
  const double tag = 3.0 * std::max(a.eps_mach(), at.eps_mach());
  auto kernel = [a, at](std::span<const double> in, std::span<double> out) {
    WorkVector t(a.rows());
    a.apply(in, t.span());
    at.apply(t.span(), out);
  };
  return LinearOperator(a.cols(), a.cols(), tag, kernel, kernel, "N(" + a.name() + ")");
}

LinearOperator rank_one_shifted(const LinearOperator& a, double sigma) {
  if (!std::isfinite(sigma)) throw std::invalid_argument("rank_one_shifted: shift must be finite");
  return LinearOperator(
      a.rows(), a.cols(), a.eps_mach(),
      [a, sigma](std::span<const double> in, std::span<double> out) {
        a.apply(in, out);
        double s = 0.0;
        for (double v : in) s += v;
        const double add = sigma * s;
        for (double& v : out) v += add;
      },
      [a, sigma](std::span<const double> in, std::span<double> out) {
        a.apply_transpose(in, out);
        double s = 0.0;
        for (double v : in) s += v;
        const double add = sigma * s;
        for (double& v : out) v += add;
      },
      a.name() + "+s11^T");
}

double GammaGrid::value(std::uint64_t index) const {
  if (index >= 2 * points_per_side) throw std::out_of_range("GammaGrid::value: index out of range");
  const double step = points_per_side > 1 ? (D / 2) / static_cast<double>(points_per_side - 1) : 0.0;
  if (index < points_per_side) return -(D / 2 + static_cast<double>(index) * step);
  return D / 2 + static_cast<double>(index - points_per_side) * step;
}

GammaGrid gamma_grid(std::size_t n, double delta, double L) {
  if (n < 1) throw std::invalid_argument("gamma_grid: n must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("gamma_grid: delta must lie in (0, 1)");
  const double nd = static_cast<double>(n);
  const double need = 4.0 * nd * nd * nd / delta;
  if (!(L >= need * (1.0 - 1e-12)))
    throw std::invalid_argument("gamma_grid: L must be at least 4 n^3 / delta");
  GammaGrid g;
  g.D = 4.0 * std::sqrt(nd / (delta * L));
  g.C = 1.0 / (2.0 * delta);
  g.points_per_side = static_cast<std::uint64_t>(std::ceil(g.C * nd * nd - 1e-9));
  return g;
}

double draw_gamma(std::size_t n, double delta, double L, BitSource& src) {
  const GammaGrid g = gamma_grid(n, delta, L);
  return g.value(src.uniform_int(2 * g.points_per_side));
}

double entry_floor_ratio(const DenseMatrix& a, double norm_a, double L) {
  if (!(norm_a > 0.0)) throw std::invalid_argument("entry_floor_ratio: norm must be positive");
  double m = INFINITY;
  for (double v : a.data()) m = std::min(m, std::abs(v));
  return m * L / norm_a;
}

}  // namespace obliv
