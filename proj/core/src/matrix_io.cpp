#include "obliv/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace obliv {
namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view tok, const std::string& source, std::size_t line) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty())
    fail(source, line, "cannot parse number '" + std::string(tok) + "'");
  if (!std::isfinite(v)) fail(source, line, "non-finite value");
  return v;
}

std::size_t parse_size(std::string_view tok, const std::string& source, std::size_t line) {
  tok = trim(tok);
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty())
    fail(source, line, "expected a nonnegative integer, got '" + std::string(tok) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto k = s.find(sep, start);
    out.push_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
    if (k == std::string_view::npos) break;
    start = k + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

MatrixFormat format_for_path(const std::string& path) {
  const std::string ext = ".csv";
  if (path.size() >= ext.size()) {
    std::string tail = path.substr(path.size() - ext.size());
    for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (tail == ext) return MatrixFormat::dense_csv;
  }
  return MatrixFormat::coordinate;
}

DenseMatrix read_dense_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t rows = 0, cols = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      const auto parts = split(trim(line), ',');
      if (parts.size() == 1) {
        rows = cols = parse_size(parts[0], source, lineno);
      } else if (parts.size() == 2) {
        rows = parse_size(parts[0], source, lineno);
        cols = parse_size(parts[1], source, lineno);
      } else {
        fail(source, lineno, "header must be 'n' or 'rows,cols'");
      }
      have_header = true;
      break;
    }
  }
  if (!have_header) fail(source, lineno, "missing header line");
  if (rows == 0 || cols == 0) fail(source, lineno, "dimensions must be positive");
  DenseMatrix m(rows, cols);
  std::size_t r = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (r == rows) fail(source, lineno, "more than " + std::to_string(rows) + " data rows");
    const auto parts = split(trim(line), ',');
    if (parts.size() != cols)
      fail(source, lineno, "expected " + std::to_string(cols) + " values, found " + std::to_string(parts.size()));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_double(parts[c], source, lineno);
    ++r;
  }
  if (r != rows) fail(source, lineno, "expected " + std::to_string(rows) + " data rows, found " + std::to_string(r));
  return m;
}

SparseMatrix read_coordinate(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  SparseMatrix m;
  std::size_t nnz = 0;
  bool have_header = false;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '%' || t.front() == '#') continue;
    const auto tok = split_ws(t);
    if (!have_header) {
      if (tok.size() != 3) fail(source, lineno, "header must be 'rows cols nnz'");
      m.rows = parse_size(tok[0], source, lineno);
      m.cols = parse_size(tok[1], source, lineno);
      nnz = parse_size(tok[2], source, lineno);
      if (m.rows == 0 || m.cols == 0) fail(source, lineno, "dimensions must be positive");
      if (nnz > m.rows * m.cols) fail(source, lineno, "nnz exceeds rows * cols");
      m.row_index.reserve(nnz);
      m.col_index.reserve(nnz);
      m.values.reserve(nnz);
      have_header = true;
      continue;
    }
    if (tok.size() != 3) fail(source, lineno, "entry must be 'i j value'");
    if (seen == nnz) fail(source, lineno, "more than " + std::to_string(nnz) + " entries");
    const std::size_t i = parse_size(tok[0], source, lineno);
    const std::size_t j = parse_size(tok[1], source, lineno);
    if (i < 1 || i > m.rows || j < 1 || j > m.cols) fail(source, lineno, "index out of range (indices are 1-based)");
    m.row_index.push_back(i - 1);
    m.col_index.push_back(j - 1);
    m.values.push_back(parse_double(tok[2], source, lineno));
    ++seen;
  }
  if (!have_header) fail(source, lineno, "missing header line");
  if (seen != nnz) fail(source, lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(seen));
  return m;
}

void write_dense_csv(std::ostream& out, const DenseMatrix& m) {
  if (m.rows() == m.cols())
    out << m.rows() << '\n';
  else
    out << m.rows() << ',' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_coordinate(std::ostream& out, const SparseMatrix& m) {
  out << m.rows << ' ' << m.cols << ' ' << m.values.size() << '\n';
  for (std::size_t k = 0; k < m.values.size(); ++k)
    out << m.row_index[k] + 1 << ' ' << m.col_index[k] + 1 << ' ' << format_double(m.values[k]) << '\n';
}

LinearOperator LoadedMatrix::op() const { return dense ? exact_from_dense(*dense) : exact_from_sparse(*sparse); }

DenseMatrix LoadedMatrix::to_dense() const { return dense ? *dense : sparse->to_dense(); }

LoadedMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  LoadedMatrix lm;
  if (format_for_path(path) == MatrixFormat::dense_csv) {
    lm.dense = read_dense_csv(in, path);
    lm.rows = lm.dense->rows();
    lm.cols = lm.dense->cols();
  } else {
    lm.sparse = read_coordinate(in, path);
    lm.rows = lm.sparse->rows;
    lm.cols = lm.sparse->cols;
  }
  return lm;
}

Vector load_vector(const std::string& path) {
  const LoadedMatrix lm = load_matrix(path);
  if (lm.rows != 1 && lm.cols != 1)
    throw std::invalid_argument(path + ": a vector file needs one row or one column, got " + std::to_string(lm.rows) +
                                "x" + std::to_string(lm.cols));
  const DenseMatrix d = lm.to_dense();
  return Vector(d.data().begin(), d.data().end());
}

namespace {
template <class F>
void write_file(const std::string& path, F&& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  body(out);
  out.close();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}
}  // namespace

void save_matrix(const std::string& path, const DenseMatrix& m) {
  write_file(path, [&](std::ostream& out) {
    if (format_for_path(path) == MatrixFormat::dense_csv) {
      write_dense_csv(out, m);
    } else {
      SparseMatrix s;
      s.rows = m.rows();
      s.cols = m.cols();
      for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i)
          if (m(i, j) != 0.0) {
            s.row_index.push_back(i);
            s.col_index.push_back(j);
            s.values.push_back(m(i, j));
          }
      write_coordinate(out, s);
    }
  });
}

void save_vector(const std::string& path, std::span<const double> v) {
  DenseMatrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data().begin());
  save_matrix(path, m);
}

}  // namespace obliv
