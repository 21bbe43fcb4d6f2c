#include "obliv/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "obliv/pattern.hpp"

namespace obliv {

namespace {

constexpr int kMaxJacobiSweeps = 60;
constexpr double kJacobiTol = 1e-15;
constexpr int kMaxBisectionSteps = 200;

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap)
    throw CapabilityError(std::string(what) + ": dimension " + std::to_string(n) + " exceeds the dense oracle cap " +
                          std::to_string(cap));
}

// Number of eigenvalues of the tridiagonal (a, b) strictly less than x.
std::size_t sturm_count(const std::vector<double>& a, const std::vector<double>& b2, double x, double pivmin) {
  std::size_t c = 0;
  double d = a[0] - x;
  if (std::abs(d) < pivmin) d = -pivmin;
  c += d < 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    d = a[i] - x - b2[i - 1] / d;
    if (std::abs(d) < pivmin) d = -pivmin;
    c += d < 0;
  }
  return c;
}

struct Tridiagonal {
  std::vector<double> a;
  std::vector<double> b2;
  double lo = 0.0;
  double hi = 0.0;
  double pivmin = 0.0;
};

Tridiagonal prepare(const std::vector<double>& a, const std::vector<double>& b) {
  Tridiagonal t;
  t.a = a;
  t.b2.resize(b.size());
  double bmax = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    t.b2[i] = b[i] * b[i];
    bmax = std::max(bmax, std::abs(b[i]));
  }
  t.lo = INFINITY;
  t.hi = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = (i > 0 ? std::abs(b[i - 1]) : 0.0) + (i < b.size() ? std::abs(b[i]) : 0.0);
    t.lo = std::min(t.lo, a[i] - r);
    t.hi = std::max(t.hi, a[i] + r);
  }
  const double scale = std::max({std::abs(t.lo), std::abs(t.hi), 1e-300});
  t.lo -= 4 * std::numeric_limits<double>::epsilon() * scale;
  t.hi += 4 * std::numeric_limits<double>::epsilon() * scale;
  t.pivmin = std::numeric_limits<double>::min() * std::max(1.0, bmax * bmax);
  return t;
}

// k-th smallest eigenvalue (0-based).
double bisect(const Tridiagonal& t, std::size_t k) {
  double lo = t.lo;
  double hi = t.hi;
  for (int it = 0; it < kMaxBisectionSteps; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double tol = 2 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
    if (hi - lo <= tol) break;
    if (sturm_count(t.a, t.b2, mid, t.pivmin) <= k) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Bidiagonal {
  std::vector<double> d;
  std::vector<double> e;
};

// Householder reduction A = Q B P^T with B upper bidiagonal; requires rows >= cols.
Bidiagonal bidiagonalize(DenseMatrix a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Bidiagonal out;
  out.d.assign(n, 0.0);
  out.e.assign(n > 0 ? n - 1 : 0, 0.0);
  std::vector<double> v(m);
  std::vector<double> w(n);
  std::vector<double> z(m);
  for (std::size_t k = 0; k < n; ++k) {
    {
      auto ck = a.col(k);
      const std::size_t len = m - k;
      double alpha = 0.0;
      {
        double scale = 0.0;
        for (std::size_t i = k; i < m; ++i) scale = std::max(scale, std::abs(ck[i]));
        if (scale > 0) {
          double s = 0;
          for (std::size_t i = k; i < m; ++i) s += (ck[i] / scale) * (ck[i] / scale);
          alpha = scale * std::sqrt(s);
        }
      }
      if (alpha == 0.0) {
        out.d[k] = 0.0;
      } else {
        const double sg = ck[k] >= 0 ? 1.0 : -1.0;
        out.d[k] = -sg * alpha;
        for (std::size_t i = 0; i < len; ++i) v[i] = ck[k + i];
        v[0] += sg * alpha;
        const double vn2 = 2.0 * alpha * (alpha + std::abs(ck[k]));
        const double beta = 2.0 / vn2;
        for (std::size_t j = k + 1; j < n; ++j) {
          auto cj = a.col(j);
          double t = 0;
          for (std::size_t i = 0; i < len; ++i) t += v[i] * cj[k + i];
          t *= beta;
          for (std::size_t i = 0; i < len; ++i) cj[k + i] -= t * v[i];
        }
      }
    }
    if (k + 1 < n) {
      const std::size_t len = n - k - 1;
      double scale = 0.0;
      for (std::size_t j = 0; j < len; ++j) scale = std::max(scale, std::abs(a(k, k + 1 + j)));
      double alpha = 0.0;
      if (scale > 0) {
        double s = 0;
        for (std::size_t j = 0; j < len; ++j) s += (a(k, k + 1 + j) / scale) * (a(k, k + 1 + j) / scale);
        alpha = scale * std::sqrt(s);
      }
      if (alpha == 0.0) {
        out.e[k] = 0.0;
      } else {
        const double x0 = a(k, k + 1);
        const double sg = x0 >= 0 ? 1.0 : -1.0;
        out.e[k] = -sg * alpha;
        for (std::size_t j = 0; j < len; ++j) w[j] = a(k, k + 1 + j);
        w[0] += sg * alpha;
        const double beta = 2.0 / (2.0 * alpha * (alpha + std::abs(x0)));
        const std::size_t rows = m - k - 1;
        std::fill(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(rows), 0.0);
        for (std::size_t j = 0; j < len; ++j) {
          const double wj = w[j];
          const double* cj = a.col(k + 1 + j).data() + k + 1;
          for (std::size_t i = 0; i < rows; ++i) z[i] += wj * cj[i];
        }
        for (std::size_t j = 0; j < len; ++j) {
          const double f = beta * w[j];
          double* cj = a.col(k + 1 + j).data() + k + 1;
          for (std::size_t i = 0; i < rows; ++i) cj[i] -= f * z[i];
        }
      }
    }
  }
  return out;
}

Tridiagonal golub_kahan(const Bidiagonal& bd) {
  const std::size_t n = bd.d.size();
  std::vector<double> a(2 * n, 0.0);
  std::vector<double> b(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    b[2 * i] = bd.d[i];
    if (i + 1 < n) b[2 * i + 1] = bd.e[i];
  }
  return prepare(a, b);
}

void fill_kappa(SpectralReport& r) {
  const auto& s = r.singular_values;
  r.s_max = s.empty() ? 0.0 : s.front();
  r.s_min = s.empty() ? 0.0 : s.back();
  r.kappa = r.s_min > 0.0 ? r.s_max / r.s_min : INFINITY;
}

}  // namespace

std::size_t default_oracle_cap() {
  if (const char* env = std::getenv("OBLIV_ORACLE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 2048;
}

DenseMatrix materialize(const LinearOperator& op, std::size_t cap) {
  check_cap(std::max(op.rows(), op.cols()), cap, "materialize");
  DenseMatrix m(op.rows(), op.cols());
  Vector e(op.cols(), 0.0);
  for (std::size_t j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply(e, m.col(j));
    e[j] = 0.0;
  }
  return m;
}

SvdResult svd_small(const DenseMatrix& m, std::size_t cap) {
  check_cap(std::max(m.rows(), m.cols()), cap, "svd_small");
  if (m.rows() < m.cols()) {
    SvdResult t = svd_small(m.transposed(), cap);
    std::swap(t.U, t.V);
    return t;
  }
  const std::size_t rows = m.rows();
  const std::size_t n = m.cols();
  DenseMatrix w = m;
  DenseMatrix v = DenseMatrix::identity(n);
  // Columns below this squared norm are numerically zero; their inner products
  // are rounding noise and rotating against them never settles.
  const double fro = frobenius_norm(m);
  const double negligible = std::pow(static_cast<double>(rows) * std::numeric_limits<double>::epsilon() * fro, 2);
  const double tol = kJacobiTol;
  int sweep = 0;
  bool converged = n < 2;
  while (!converged) {
    if (sweep >= kMaxJacobiSweeps)
      throw std::runtime_error("svd_small: no convergence after " + std::to_string(kMaxJacobiSweeps) + " sweeps");
    ++sweep;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto cp = w.col(p);
        auto cq = w.col(q);
        double alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += cp[i] * cp[i];
          beta += cq[i] * cq[i];
          gamma += cp[i] * cq[i];
        }
        if (alpha <= negligible || beta <= negligible) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double a = cp[i];
          const double b = cq[i];
          cp[i] = c * a - s * b;
          cq[i] = s * a + c * b;
        }
        auto vp = v.col(p);
        auto vq = v.col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    converged = !rotated;
  }
  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(w.col(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  SvdResult out;
  out.U = DenseMatrix(rows, n);
  out.V = DenseMatrix(n, n);
  out.sigma.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    auto uc = out.U.col(k);
    auto src = w.col(j);
    if (sigma[j] > 0)
      for (std::size_t i = 0; i < rows; ++i) uc[i] = src[i] / sigma[j];
    std::copy(v.col(j).begin(), v.col(j).end(), out.V.col(k).begin());
  }
  // Reconstruction residual ||M - U S V^T||_F / ||M||_F.
  DenseMatrix us = out.U;
  for (std::size_t k = 0; k < n; ++k)
    for (double& x : us.col(k)) x *= out.sigma[k];
  const DenseMatrix rec = matmul(us, out.V.transposed());
  double diff = 0.0;
  for (std::size_t t = 0; t < rec.data().size(); ++t) {
    const double d = rec.data()[t] - m.data()[t];
    diff += d * d;
  }
  const double fn = frobenius_norm(m);
  out.report.singular_values = out.sigma;
  out.report.method = "one-sided-jacobi";
  out.report.residual = fn > 0 ? std::sqrt(diff) / fn : std::sqrt(diff);
  out.report.sweeps = static_cast<std::size_t>(sweep);
  fill_kappa(out.report);
  return out;
}

SpectralReport singular_values(const DenseMatrix& m, std::size_t cap) {
  check_cap(std::max(m.rows(), m.cols()), cap, "singular_values");
  const DenseMatrix& src = m;
  const Bidiagonal bd = src.rows() >= src.cols() ? bidiagonalize(src) : bidiagonalize(src.transposed());
  const std::size_t n = bd.d.size();
  SpectralReport r;
  r.method = "bidiagonal-bisection";
  if (n == 0) return r;
  const Tridiagonal t = golub_kahan(bd);
  r.singular_values.resize(n);
  for (std::size_t k = 0; k < n; ++k) r.singular_values[k] = std::max(0.0, bisect(t, 2 * n - 1 - k));
  fill_kappa(r);
  return r;
}

double spectral_norm(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const Bidiagonal bd = m.rows() >= m.cols() ? bidiagonalize(m) : bidiagonalize(m.transposed());
  const Tridiagonal t = golub_kahan(bd);
  return std::max(0.0, bisect(t, 2 * bd.d.size() - 1));
}

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) return {};
  if (b.size() + 1 != a.size()) throw std::invalid_argument("tridiagonal_eigenvalues: size mismatch");
  const Tridiagonal t = prepare(a, b);
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = bisect(t, k);
  return out;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw std::invalid_argument("symmetric_eigenvalues: matrix must be square");
  if (n == 0) return {};
  DenseMatrix a = s;
  std::vector<double> diag(n), off(n > 0 ? n - 1 : 0);
  std::vector<double> v(n), p(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t len = n - k - 1;
    double alpha = 0.0;
    for (std::size_t i = 0; i < len; ++i) alpha += a(k + 1 + i, k) * a(k + 1 + i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) {
      off[k] = 0.0;
      continue;
    }
    const double x0 = a(k + 1, k);
    const double sg = x0 >= 0 ? 1.0 : -1.0;
    off[k] = -sg * alpha;
    for (std::size_t i = 0; i < len; ++i) v[i] = a(k + 1 + i, k);
    v[0] += sg * alpha;
    const double beta = 2.0 / (2.0 * alpha * (alpha + std::abs(x0)));
    // p = beta * S22 v; w = p - (beta/2)(v^T p) v; S22 -= v w^T + w v^T
    for (std::size_t i = 0; i < len; ++i) p[i] = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double vj = v[j];
      const double* cj = a.col(k + 1 + j).data() + k + 1;
      for (std::size_t i = 0; i < len; ++i) p[i] += cj[i] * vj;
    }
    double vp = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      p[i] *= beta;
      vp += v[i] * p[i];
    }
    const double kk = 0.5 * beta * vp;
    for (std::size_t i = 0; i < len; ++i) p[i] -= kk * v[i];
    for (std::size_t j = 0; j < len; ++j) {
      double* cj = a.col(k + 1 + j).data() + k + 1;
      const double vj = v[j];
      const double pj = p[j];
      for (std::size_t i = 0; i < len; ++i) cj[i] -= v[i] * pj + p[i] * vj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  if (n >= 2) off[n - 2] = a(n - 1, n - 2);
  return tridiagonal_eigenvalues(diag, off);
}

double determinant(DenseMatrix m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("determinant: matrix must be square");
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
    if (m(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      det = -det;
    }
    det *= m(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return det;
}

Vector cofactor_normal(const std::vector<Vector>& columns) {
  const std::size_t n = columns.size() + 1;
  if (n < 2 || n > 12) throw std::invalid_argument("cofactor_normal: need 1 to 11 columns (n <= 12)");
  for (const auto& c : columns)
    if (c.size() != n) throw std::invalid_argument("cofactor_normal: every column must have length n");
  Vector zeta(n);
  for (std::size_t r = 0; r < n; ++r) {
    DenseMatrix minor(n - 1, n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
      for (std::size_t i = 0, ii = 0; i < n; ++i) {
        if (i == r) continue;
        minor(ii++, j) = columns[j][i];
      }
    zeta[r] = ((r % 2 == 0) ? 1.0 : -1.0) * determinant(minor);
  }
  return zeta;
}

SingularConstruction singular_construction(const DenseMatrix& vhat) {
  const std::size_t n = vhat.rows();
  if (vhat.cols() != n || n < 2) throw std::invalid_argument("singular_construction: need a square matrix, n >= 2");
  DenseMatrix ct = vhat.transposed();
  for (std::size_t j = 0; j < n; ++j) ct(0, j) = 0.0;
  const SvdResult svd = svd_small(ct, std::max(n, default_oracle_cap()));
  SingularConstruction out;
  out.u.assign(svd.V.col(n - 1).begin(), svd.V.col(n - 1).end());
  out.j = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(out.u[i]) > std::abs(out.u[out.j])) out.j = i;
  const double inner = dot(vhat.col(0), out.u);
  out.a = DenseMatrix(n, n);
  out.a(out.j, 0) = inner / (std::sqrt(static_cast<double>(n)) * out.u[out.j]);
  return out;
}

std::vector<NamedMatrix> adversarial_suite(std::size_t n, const std::optional<DenseMatrix>& vhat, BitSource& src,
                                           std::size_t cap) {
  check_cap(n, cap, "adversarial_suite");
  if (n < 2) throw std::invalid_argument("adversarial_suite: n must be at least 2");
  auto normalize = [](DenseMatrix a) {
    const double s = spectral_norm(a);
    if (s > 0) a *= 1.0 / s;
    return a;
  };
  std::vector<NamedMatrix> out;
  {
    DenseMatrix a(n, n);
    a(0, 0) = 1.0;
    out.push_back({"rank_one", a});
  }
  {
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      a(i, i) = 0.5;
      if (i + 1 < n) a(i, i + 1) = 1.0;
    }
    out.push_back({"jordan", normalize(std::move(a))});
  }
  {
    const DenseMatrix q1 = random_orthogonal(n, src);
    const DenseMatrix q2 = random_orthogonal(n, src);
    DenseMatrix q1s = q1;
    for (double& x : q1s.col(n - 1)) x *= 1e-14;
    out.push_back({"near_singular", normalize(matmul(q1s, q2.transposed()))});
  }
  {
    DenseMatrix v;
    if (vhat) {
      if (vhat->rows() != n || vhat->cols() != n) throw std::invalid_argument("adversarial_suite: vhat must be n x n");
      v = *vhat;
    } else {
      const PatternParams defaults;
      v = PatternMatrix::build(n, src).to_dense();
      v *= 1.0 / (defaults.rho * std::sqrt(static_cast<double>(n)));
    }
    SingularConstruction c = singular_construction(v);
    out.push_back({"dense_defeating", normalize(std::move(c.a))});
  }
  return out;
}

}  // namespace obliv
