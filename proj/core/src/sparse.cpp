#include "netdeconf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    require_shape(t.row < rows && t.col < cols,
                  "SparseMatrix: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                      ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    if (!std::isfinite(t.value)) throw NumericError("SparseMatrix: non-finite value");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_offsets_.assign(rows + 1, 0);
  m.col_indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    if (k > 0 && triplets[k].row == triplets[k - 1].row && triplets[k].col == triplets[k - 1].col)
      throw ShapeError("SparseMatrix: duplicate entry (" + std::to_string(triplets[k].row) + "," +
                       std::to_string(triplets[k].col) + ")");
    ++m.row_offsets_[triplets[k].row + 1];
    m.col_indices_.push_back(triplets[k].col);
    m.values_.push_back(triplets[k].value);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
  return m;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < dense.rows(); ++i)
    for (std::size_t j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) t.push_back({i, j, dense(i, j)});
  return from_triplets(dense.rows(), dense.cols(), std::move(t));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  require_shape(r < rows_ && c < cols_, "SparseMatrix::at: index out of range");
  auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]);
  auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]);
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      out.push_back({r, col_indices_[k], values_[k]});
  return out;
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) out(r, col_indices_[k]) = values_[k];
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  auto t = triplets();
  for (auto& e : t) std::swap(e.row, e.col);
  return from_triplets(cols_, rows_, std::move(t));
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  return transpose() == *this;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  require_shape(s.cols() == d.rows(), "spmm: sparse " + std::to_string(s.rows()) + "x" +
                                          std::to_string(s.cols()) + " * dense " +
                                          std::to_string(d.rows()) + "x" + std::to_string(d.cols()));
  DenseMatrix out(s.rows(), d.cols());
  const auto offsets = s.row_offsets();
  const auto cols = s.col_indices();
  const auto vals = s.values();
  const std::size_t n = d.cols();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double* o = out.row(i).data();
    std::size_t k = offsets[i];
    // Four stored entries per pass; each output entry still adds them in
    // storage order.
    for (; k + 4 <= offsets[i + 1]; k += 4) {
      const double v0 = vals[k], v1 = vals[k + 1], v2 = vals[k + 2], v3 = vals[k + 3];
      const double *d0 = d.row(cols[k]).data(), *d1 = d.row(cols[k + 1]).data(), *d2 = d.row(cols[k + 2]).data(),
                   *d3 = d.row(cols[k + 3]).data();
      for (std::size_t j = 0; j < n; ++j) {
        double t = o[j];
        t += v0 * d0[j];
        t += v1 * d1[j];
        t += v2 * d2[j];
        t += v3 * d3[j];
        o[j] = t;
      }
    }
    for (; k < offsets[i + 1]; ++k) {
      const double v = vals[k];
      const double* dr = d.row(cols[k]).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += v * dr[j];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseMatrix& s, const DenseMatrix& d) {
  require_shape(s.rows() == d.rows(), "spmm_transposed: row count mismatch");
  DenseMatrix out(s.cols(), d.cols());
  const auto offsets = s.row_offsets();
  const auto cols = s.col_indices();
  const auto vals = s.values();
  const std::size_t n = d.cols();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double* dr = d.row(i).data();
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      const double v = vals[k];
      double* o = out.row(cols[k]).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += v * dr[j];
    }
  }
  return out;
}

}  // namespace netdeconf
