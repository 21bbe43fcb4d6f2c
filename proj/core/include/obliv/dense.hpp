#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "obliv/common.hpp"

namespace obliv {

/// Column-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;
  Vector multiply(std::span<const double> x) const;
  Vector multiply_transpose(std::span<const double> x) const;

  DenseMatrix transposed() const;
  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator*=(double c);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double c, DenseMatrix a);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
double frobenius_norm(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Haar-distributed orthogonal matrix from Householder QR of a Gaussian matrix.
class BitSource;
DenseMatrix random_orthogonal(std::size_t n, BitSource& src);
DenseMatrix random_gaussian(std::size_t rows, std::size_t cols, BitSource& src);

}  // namespace obliv
