#include <gtest/gtest.h>

#include <random>

#include "imitation/errors.hpp"
#include "imitation/linalg.hpp"
#include "oracles.hpp"

using namespace imitation;

TEST(Matrix, ConstructAndIndex) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(m.row(1)[0], 4.0);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>(3)), DimensionError);
}

TEST(Matrix, TransposeGatherAppend) {
  Matrix m{{1, 2}, {3, 4}, {5, 6}};
  EXPECT_EQ(m.transposed(), (Matrix{{1, 3, 5}, {2, 4, 6}}));
  const std::vector<std::size_t> idx{2, 0};
  EXPECT_EQ(m.gather_rows(idx), (Matrix{{5, 6}, {1, 2}}));
  const std::vector<double> r{7, 8};
  m.append_row(r);
  EXPECT_EQ(m.rows(), 4u);
  EXPECT_EQ(m(3, 1), 8.0);
  const std::vector<double> bad{1};
  EXPECT_THROW(m.append_row(bad), DimensionError);
}

TEST(Matrix, AllFinite) {
  Matrix m(2, 2, 1.0);
  EXPECT_TRUE(m.all_finite());
  m(1, 1) = std::nan("");
  EXPECT_FALSE(m.all_finite());
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng() % 17, k = 1 + rng() % 13, p = 1 + rng() % 19;
    const Matrix a = oracle::random_matrix(n, k, rng);
    const Matrix b = oracle::random_matrix(k, p, rng);
    EXPECT_LT(oracle::max_abs_diff(matmul(a, b), oracle::naive_matmul(a, b)), 1e-12);
    const Matrix bt = b.transposed();
    EXPECT_LT(oracle::max_abs_diff(matmul_nt(a, bt), oracle::naive_matmul(a, b)), 1e-12);
    const Matrix at = a.transposed();
    EXPECT_LT(oracle::max_abs_diff(matmul_tn(at, b), oracle::naive_matmul(a, b)), 1e-12);
  }
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  EXPECT_THROW(matmul_nt(Matrix(2, 3), Matrix(2, 4)), DimensionError);
  EXPECT_THROW(matmul_tn(Matrix(2, 3), Matrix(3, 3)), DimensionError);
}

TEST(Cholesky, ReconstructsInput) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 5u, 20u}) {
    const Matrix a = oracle::random_spd(n, rng);
    const auto f = cholesky(a);
    const Matrix& l = f.lower();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) EXPECT_EQ(l(i, j), 0.0);
    EXPECT_LT(oracle::max_abs_diff(oracle::naive_matmul(l, l.transposed()), a), 1e-10);
  }
}

TEST(Cholesky, HalfLogDetMatchesDiagonal) {
  const Matrix a{{4, 2}, {2, 3}};
  EXPECT_NEAR(cholesky(a).half_log_det(), 0.5 * std::log(8.0), 1e-14);
}

TEST(Cholesky, RejectsIndefiniteAndAsymmetric) {
  EXPECT_THROW(cholesky(Matrix{{1, 2}, {2, 1}}), NotPositiveDefinite);
  EXPECT_THROW(cholesky(Matrix{{1, 0.5}, {0.4, 1}}), DimensionError);
  EXPECT_THROW(cholesky(Matrix(2, 3)), DimensionError);
}

TEST(Solve, TriangularAndSpdAgreeWithInverse) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + trial * 4;
    const Matrix a = oracle::random_spd(n, rng);
    const Matrix b = oracle::random_matrix(n, 3, rng);
    const Matrix expect = oracle::naive_matmul(oracle::gauss_inverse(a), b);
    EXPECT_LT(oracle::max_abs_diff(solve_spd(a, b, 0.0), expect), 1e-10);

    const auto f = cholesky(a);
    const Matrix z = solve_triangular(f, b, TriangularSide::lower);
    EXPECT_LT(oracle::max_abs_diff(oracle::naive_matmul(f.lower(), z), b), 1e-10);
    const Matrix w = solve_triangular(f, b, TriangularSide::upper);
    EXPECT_LT(oracle::max_abs_diff(oracle::naive_matmul(f.lower().transposed(), w), b), 1e-10);
  }
}

TEST(Solve, JitterLadderRescuesSingular) {
  // Rank-one PSD matrix: fails plain Cholesky, succeeds once jitter is added.
  const Matrix a{{1, 1}, {1, 1}};
  double used = -1.0;
  const auto f = cholesky_with_jitter(a, 0.0, &used);
  EXPECT_GT(used, 0.0);
  EXPECT_LE(used, kMaxJitter);
  EXPECT_EQ(f.dim(), 2u);
  const auto s = solve_spd_factored(a, Matrix{{1}, {1}}, 0.0);
  EXPECT_EQ(s.jitter, used);
}

TEST(Solve, JitterLadderGivesUp) {
  const Matrix a{{-1, 0}, {0, -1}};
  EXPECT_THROW(cholesky_with_jitter(a, 0.0), NotPositiveDefinite);
}
