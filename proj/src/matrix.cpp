#include "mcne/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace mcne {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                     " does not match " + shape_string());
  }
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.front().size();
  DenseMatrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != m) {
      throw ShapeError("DenseMatrix::from_rows: ragged row " + std::to_string(i));
    }
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

DenseMatrix DenseMatrix::row_vector(std::span<const double> values) {
  return DenseMatrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void DenseMatrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string DenseMatrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto b_row = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = a(r, i);
      if (ari == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += ari * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

void axpy(double scale, const DenseMatrix& b, DenseMatrix& a) {
  require_same_shape(a, b, "axpy");
  auto dst = a.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

DenseMatrix column_sums(const DenseMatrix& a) {
  DenseMatrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out(0, j) += r[j];
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto first = col_index.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
  const auto last = col_index.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_index.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) out(r, col_index[k]) = values[k];
  }
  return out;
}

DenseMatrix sparse_matmul(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols != d.rows()) {
    throw ShapeError("sparse_matmul: (" + std::to_string(s.rows) + "x" + std::to_string(s.cols) +
                     ") * " + d.shape_string());
  }
  DenseMatrix out(s.rows, d.cols());
  for (std::size_t r = 0; r < s.rows; ++r) {
    auto out_row = out.row(r);
    for (std::size_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
      const double v = s.values[k];
      auto src = d.row(s.col_index[k]);
      for (std::size_t j = 0; j < d.cols(); ++j) out_row[j] += v * src[j];
    }
  }
  return out;
}

}  // namespace mcne
