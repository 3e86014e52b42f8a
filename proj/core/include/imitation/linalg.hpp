#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace imitation {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  /// Rows selected by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  void append_row(std::span<const double> values);

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Lower-triangular factor L with L·Lᵀ = A.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(Matrix lower);

  const Matrix& lower() const noexcept { return lower_; }
  std::size_t dim() const noexcept { return lower_.rows(); }
  /// Σ log Lᵢᵢ, i.e. ½·log det A.
  double half_log_det() const noexcept;

 private:
  Matrix lower_;
};

enum class TriangularSide { lower, upper };

/// Throws NotPositiveDefinite when a pivot is not strictly positive.
CholeskyFactor cholesky(const Matrix& a);

/// Solves L·x = b (lower) or Lᵀ·x = b (upper).
Matrix solve_triangular(const CholeskyFactor& factor, const Matrix& b, TriangularSide side);

/// Solves A·x = b given the factor of A.
Matrix cholesky_solve(const CholeskyFactor& factor, const Matrix& b);

struct SpdSolve {
  Matrix x;
  CholeskyFactor factor;
  double jitter;  ///< the jitter that finally factorized
};

/// Largest jitter tried by the escalation ladder.
inline constexpr double kMaxJitter = 1e-2;

/// Factorizes a + jitter·I, multiplying the jitter by 10 (starting from 1e-10
/// when zero) until it factorizes or exceeds kMaxJitter.
CholeskyFactor cholesky_with_jitter(const Matrix& a, double jitter, double* used_jitter = nullptr);

SpdSolve solve_spd_factored(const Matrix& a, const Matrix& b, double jitter);
Matrix solve_spd(const Matrix& a, const Matrix& b, double jitter);

}  // namespace imitation
