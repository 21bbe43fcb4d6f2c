#include "obliv/dense.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "obliv/rng.hpp"

namespace obliv {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  // Scaled accumulation keeps tiny and huge vectors finite.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("DenseMatrix::multiply: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* c = data_.data() + j * rows_;
    for (std::size_t i = 0; i < rows_; ++i) y[i] += c[i] * xj;
  }
}

void DenseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != rows_ || y.size() != cols_)
    throw std::invalid_argument("DenseMatrix::multiply_transpose: dimension mismatch");
  for (std::size_t j = 0; j < cols_; ++j) y[j] = dot(col(j), x);
}

Vector DenseMatrix::multiply(std::span<const double> x) const {
  Vector y(rows_);
  multiply(x, y);
  return y;
}

Vector DenseMatrix::multiply_transpose(std::span<const double> x) const {
  Vector y(cols_);
  multiply_transpose(x, y);
  return y;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw std::invalid_argument("DenseMatrix: dimension mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) {
  a += b;
  return a;
}

DenseMatrix operator*(double c, DenseMatrix a) {
  a *= c;
  return a;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(b(k, j), a.col(k), cj);
  }
  return c;
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, BitSource& src) {
  DenseMatrix g(rows, cols);
  for (double& v : g.data()) v = src.next_gaussian();
  return g;
}

DenseMatrix random_orthogonal(std::size_t n, BitSource& src) {
  DenseMatrix a = random_gaussian(n, n, src);
  // Householder QR; Q accumulated by applying reflectors to the identity in reverse.
  std::vector<Vector> vs;
  std::vector<double> signs(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    Vector v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = a(i, k);
    const double alpha = norm2(v);
    const double s = v[0] >= 0 ? 1.0 : -1.0;
    signs[k] = -s;  // sign of R(k,k); fixed up so Q is Haar distributed
    v[0] += s * alpha;
    const double vn = norm2(v);
    if (vn > 0) for (double& x : v) x /= vn;
    for (std::size_t j = k; j < n; ++j) {
      double t = 0;
      for (std::size_t i = k; i < n; ++i) t += v[i - k] * a(i, j);
      for (std::size_t i = k; i < n; ++i) a(i, j) -= 2 * t * v[i - k];
    }
    vs.push_back(std::move(v));
  }
  DenseMatrix q = DenseMatrix::identity(n);
  for (std::size_t kk = n; kk-- > 0;) {
    const Vector& v = vs[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double t = 0;
      for (std::size_t i = kk; i < n; ++i) t += v[i - kk] * q(i, j);
      for (std::size_t i = kk; i < n; ++i) q(i, j) -= 2 * t * v[i - kk];
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (signs[j] < 0)
      for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
  return q;
}

}  // namespace obliv
