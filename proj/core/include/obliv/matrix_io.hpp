#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "obliv/common.hpp"
#include "obliv/dense.hpp"
#include "obliv/operator.hpp"

namespace obliv {

/// Two text formats:
///
/// Dense CSV. The first line is `n` (square) or `rows,cols`; each following
/// line is one matrix row of comma-separated numbers.
///
/// Coordinate. Lines starting with `%` or `#` are comments. The first data line
/// is `rows cols nnz`, followed by nnz lines `i j value` with 1-based indices.
/// Repeated (i, j) pairs are summed.
///
/// Paths ending in `.csv` are dense; anything else is coordinate. Parse errors
/// are std::invalid_argument naming the source and line.
enum class MatrixFormat { dense_csv, coordinate };

MatrixFormat format_for_path(const std::string& path);

DenseMatrix read_dense_csv(std::istream& in, const std::string& source);
SparseMatrix read_coordinate(std::istream& in, const std::string& source);
void write_dense_csv(std::ostream& out, const DenseMatrix& m);
void write_coordinate(std::ostream& out, const SparseMatrix& m);

struct LoadedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::optional<DenseMatrix> dense;
  std::optional<SparseMatrix> sparse;

  LinearOperator op() const;
  DenseMatrix to_dense() const;
};

LoadedMatrix load_matrix(const std::string& path);
/// A vector is a matrix file with one column (or one row).
Vector load_vector(const std::string& path);
void save_matrix(const std::string& path, const DenseMatrix& m);
void save_vector(const std::string& path, std::span<const double> v);

}  // namespace obliv
