#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "netdeconf/matrix.hpp"

namespace netdeconf {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing
/// within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Rejects out-of-range indices, duplicate (row, col) pairs and non-finite
  /// values. Explicit zeros are kept.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const DenseMatrix& dense);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Stored value at (r, c), or 0.
  double at(std::size_t r, std::size_t c) const;

  std::vector<Triplet> triplets() const;
  DenseMatrix to_dense() const;
  SparseMatrix transpose() const;
  bool is_symmetric() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

/// s·d. Equals matmul(s.to_dense(), d) bit-for-bit.
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d);
/// sᵀ·d without materializing the transpose.
DenseMatrix spmm_transposed(const SparseMatrix& s, const DenseMatrix& d);

}  // namespace netdeconf
