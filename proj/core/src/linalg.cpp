#include "imitation/linalg.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return ConstMap(m.data().data(), m.rows(), m.cols()); }
MutMap view(Matrix& m) { return MutMap(m.data().data(), m.rows(), m.cols()); }

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void mismatch(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": dimension mismatch " + shape(a) + " vs " + shape(b));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw DimensionError("gather_rows: index out of range");
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw DimensionError("append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

bool Matrix::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  if (out.empty()) return out;
  if (a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

CholeskyFactor::CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {
  if (lower_.rows() != lower_.cols()) throw DimensionError("CholeskyFactor: not square");
}

double CholeskyFactor::half_log_det() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
  return s;
}

CholeskyFactor cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionError("cholesky: matrix is " + shape(a) + ", not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * std::max(1.0, std::abs(a(i, j))))
        throw DimensionError("cholesky: matrix not symmetric");

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    auto lj = l.row(j);
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "cholesky: non-positive pivot " << d << " at column " << j;
      throw NotPositiveDefinite(msg.str());
    }
    const double ljj = std::sqrt(d);
    lj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l.row(i);
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }
  return CholeskyFactor(std::move(l));
}

Matrix solve_triangular(const CholeskyFactor& factor, const Matrix& b, TriangularSide side) {
  const Matrix& l = factor.lower();
  const std::size_t n = l.rows();
  if (b.rows() != n) mismatch("solve_triangular", l, b);
  for (std::size_t i = 0; i < n; ++i)
    if (l(i, i) == 0.0) throw NumericalError("solve_triangular: zero diagonal");

  Matrix x = b;
  const std::size_t m = b.cols();
  if (side == TriangularSide::lower) {
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = x.row(i);
      for (std::size_t k = 0; k < i; ++k) {
        const double lik = l(i, k);
        if (lik == 0.0) continue;
        auto xk = x.row(k);
        for (std::size_t c = 0; c < m; ++c) xi[c] -= lik * xk[c];
      }
      for (std::size_t c = 0; c < m; ++c) xi[c] /= l(i, i);
    }
  } else {
    for (std::size_t ii = n; ii-- > 0;) {
      auto xi = x.row(ii);
      for (std::size_t k = ii + 1; k < n; ++k) {
        const double lki = l(k, ii);
        if (lki == 0.0) continue;
        auto xk = x.row(k);
        for (std::size_t c = 0; c < m; ++c) xi[c] -= lki * xk[c];
      }
      for (std::size_t c = 0; c < m; ++c) xi[c] /= l(ii, ii);
    }
  }
  return x;
}

Matrix cholesky_solve(const CholeskyFactor& factor, const Matrix& b) {
  return solve_triangular(factor, solve_triangular(factor, b, TriangularSide::lower),
                          TriangularSide::upper);
}

CholeskyFactor cholesky_with_jitter(const Matrix& a, double jitter, double* used_jitter) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky_with_jitter: not square");
  double j = jitter;
  for (;;) {
    Matrix shifted = a;
    for (std::size_t i = 0; i < a.rows(); ++i) shifted(i, i) += j;
    try {
      auto f = cholesky(shifted);
      if (used_jitter) *used_jitter = j;
      return f;
    } catch (const NotPositiveDefinite&) {
      j = j > 0.0 ? j * 10.0 : 1e-10;
      if (j > kMaxJitter * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "matrix not positive definite after jitter ladder up to " << kMaxJitter;
        throw NotPositiveDefinite(msg.str());
      }
    }
  }
}

SpdSolve solve_spd_factored(const Matrix& a, const Matrix& b, double jitter) {
  if (a.rows() != b.rows()) mismatch("solve_spd", a, b);
  double used = jitter;
  auto factor = cholesky_with_jitter(a, jitter, &used);
  auto x = cholesky_solve(factor, b);
  return {std::move(x), std::move(factor), used};
}

Matrix solve_spd(const Matrix& a, const Matrix& b, double jitter) {
  return solve_spd_factored(a, b, jitter).x;
}

}  // namespace imitation
