#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace netdeconf {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Products accumulate over the inner index in ascending order, starting from
// +0.0, so results are bit-reproducible and match spmm on the densified
// operand exactly.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ without forming the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& m);

DenseMatrix relu(const DenseMatrix& m);
/// Masks `upstream` where `input` <= 0 (subgradient 0 at exactly 0).
DenseMatrix relu_backward(const DenseMatrix& input, const DenseMatrix& upstream);

void add_row_broadcast(DenseMatrix& m, std::span<const double> row);
std::vector<double> column_sums(const DenseMatrix& m);

/// Rows of `m` picked by `indices`, in that order.
DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> indices);
/// m[indices[k]] += src[k] for each k.
void scatter_add_rows(DenseMatrix& m, std::span<const std::size_t> indices, const DenseMatrix& src);

double frobenius_sq(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace netdeconf
