#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcne {

/// Thrown when operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds from nested rows; all rows must have equal length.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static DenseMatrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double value);
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws ShapeError unless a and b have identical shapes.
void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what);

/// a · b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ · b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a · bᵀ
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

/// a += scale * b
void axpy(double scale, const DenseMatrix& b, DenseMatrix& a);

/// Sum over rows, returning a 1×cols row vector.
DenseMatrix column_sums(const DenseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);

/// Compressed-row sparse matrix, used for the normalized adjacency.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets;  // size rows + 1
  std::vector<std::size_t> col_index;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }
  double at(std::size_t r, std::size_t c) const;
  DenseMatrix to_dense() const;
};

/// s · d where s is sparse.
DenseMatrix sparse_matmul(const SparseMatrix& s, const DenseMatrix& d);

}  // namespace mcne
