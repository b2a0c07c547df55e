#include "netdeconf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "netdeconf/errors.hpp"

namespace netdeconf {

namespace {

std::string dims(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require_shape(values_.size() == rows_ * cols_,
                "DenseMatrix: value count " + std::to_string(values_.size()) +
                    " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_shape(r.size() == cols_, "DenseMatrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// The kernels below take four terms per pass over an output row. Each output
// entry still accumulates its terms one at a time in ascending k, so results
// are bit-identical to the plain triple loop; only the loads and stores of the
// output row are shared.

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.rows(), "matmul: " + dims(a) + " * " + dims(b));
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  const std::size_t depth = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    const double* ar = a.row(i).data();
    std::size_t k = 0;
    for (; k + 4 <= depth; k += 4) {
      const double s0 = ar[k], s1 = ar[k + 1], s2 = ar[k + 2], s3 = ar[k + 3];
      const double *b0 = b.row(k).data(), *b1 = b.row(k + 1).data(), *b2 = b.row(k + 2).data(),
                   *b3 = b.row(k + 3).data();
      for (std::size_t j = 0; j < n; ++j) {
        double t = o[j];
        t += s0 * b0[j];
        t += s1 * b1[j];
        t += s2 * b2[j];
        t += s3 * b3[j];
        o[j] = t;
      }
    }
    for (; k < depth; ++k) {
      const double s = ar[k];
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn: " + dims(a) + "^T * " + dims(b));
  DenseMatrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  const std::size_t depth = a.rows();
  std::size_t k = 0;
  for (; k + 4 <= depth; k += 4) {
    const double *a0 = a.row(k).data(), *a1 = a.row(k + 1).data(), *a2 = a.row(k + 2).data(),
                 *a3 = a.row(k + 3).data();
    const double *b0 = b.row(k).data(), *b1 = b.row(k + 1).data(), *b2 = b.row(k + 2).data(),
                 *b3 = b.row(k + 3).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s0 = a0[i], s1 = a1[i], s2 = a2[i], s3 = a3[i];
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) {
        double t = o[j];
        t += s0 * b0[j];
        t += s1 * b1[j];
        t += s2 * b2[j];
        t += s3 * b3[j];
        o[j] = t;
      }
    }
  }
  for (; k < depth; ++k) {
    const double* ar = a.row(k).data();
    const double* br = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = ar[i];
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt: " + dims(a) + " * " + dims(b) + "^T");
  // Same per-entry summation order as the dot-product form, but the inner
  // loop runs along output rows instead of one latency-bound chain.
  return matmul(a, transpose(b));
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

DenseMatrix relu(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

DenseMatrix relu_backward(const DenseMatrix& input, const DenseMatrix& upstream) {
  require_shape(input.rows() == upstream.rows() && input.cols() == upstream.cols(),
                "relu_backward: " + dims(input) + " vs " + dims(upstream));
  DenseMatrix out(input.rows(), input.cols());
  auto in = input.values();
  auto up = upstream.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0.0 ? up[i] : 0.0;
  return out;
}

void add_row_broadcast(DenseMatrix& m, std::span<const double> row) {
  require_shape(row.size() == m.cols(), "add_row_broadcast: width mismatch");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += row[j];
  }
}

std::vector<double> column_sums(const DenseMatrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> indices) {
  DenseMatrix out(indices.size(), m.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require_shape(indices[k] < m.rows(), "gather_rows: index out of range");
    std::copy_n(m.row(indices[k]).data(), m.cols(), out.row(k).data());
  }
  return out;
}

void scatter_add_rows(DenseMatrix& m, std::span<const std::size_t> indices, const DenseMatrix& src) {
  require_shape(src.rows() == indices.size() && src.cols() == m.cols(),
                "scatter_add_rows: shape mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require_shape(indices[k] < m.rows(), "scatter_add_rows: index out of range");
    auto dst = m.row(indices[k]);
    auto s = src.row(k);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s[j];
  }
}

double frobenius_sq(const DenseMatrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += v * v;
  return acc;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double worst = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) worst = std::max(worst, std::abs(av[i] - bv[i]));
  return worst;
}

}  // namespace netdeconf
