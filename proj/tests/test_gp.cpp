#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

#include "imitation/errors.hpp"
#include "imitation/gp.hpp"
#include "oracles.hpp"

using namespace imitation;

namespace {

Dataset two_blobs(std::size_t per_class, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.5);
  Dataset ds;
  ds.class_count = 2;
  ds.features = Matrix(2 * per_class, 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const std::size_t c = i % 2;
    ds.features(i, 0) = n(rng) + (c == 0 ? -sep : sep);
    ds.features(i, 1) = n(rng);
    ds.labels.push_back(c);
  }
  return ds;
}

Matrix one_hot_pm(const Dataset& ds) {
  Matrix y(ds.size(), ds.class_count, -1.0);
  for (std::size_t i = 0; i < ds.size(); ++i) y(i, ds.labels[i]) = 1.0;
  return y;
}

// Lower Cholesky factor, plain loops.
Matrix naive_cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace

TEST(Kernel, MatrixMatchesPointwise) {
  std::mt19937_64 rng(1);
  const RbfKernel k{1.7, 0.8};
  const Matrix a = oracle::random_matrix(6, 3, rng), b = oracle::random_matrix(4, 3, rng);
  const Matrix km = kernel_matrix(k, a, b);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double expect = 1.7 * std::exp(-oracle::sq_dist(a.row(i), b.row(j)) / (2 * 0.64));
      EXPECT_NEAR(km(i, j), expect, 1e-13);
      EXPECT_NEAR(k(a.row(i), b.row(j)), expect, 1e-14);
    }
  const Matrix kaa = kernel_matrix(k, a, a);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(kaa(i, i), 1.7);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(kaa(i, j), kaa(j, i));
  }
  EXPECT_THROW((RbfKernel{-1.0, 1.0}.validate()), ConfigError);
}

TEST(Regression, MatchesDenseInverseOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 10 + 8 * trial;
    const Matrix x = oracle::random_matrix(n, 3, rng);
    const Matrix y = oracle::random_matrix(n, 2, rng);
    const Matrix xs = oracle::random_matrix(7, 3, rng);
    const RbfKernel k{1.3, 1.1};
    const GpModel m = fit_targets(x, y, k, 0.05);
    Matrix mean;
    std::vector<double> var;
    m.regression_moments(xs, mean, var);
    const auto ref = oracle::dense_gp(x, y, xs, 1.3, 1.1, 0.05);
    for (std::size_t s = 0; s < xs.rows(); ++s) {
      EXPECT_NEAR(var[s], ref.variance[s], 1e-8);
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(mean(s, c), ref.mean[s][c], 1e-8);
    }
  }
}

TEST(Regression, ClassifierProbsAreSoftmaxOfMean) {
  const Dataset ds = two_blobs(10, 2.0, 4);
  const GpModel m = fit(ds, RbfKernel{1.0, 1.0}, GpMode::regression, 1e-2);
  const Matrix xs{{-2.0, 0.0}, {2.0, 0.0}, {0.0, 0.0}};
  const RefBatch b = m.predict_batch(xs);
  const auto ref = oracle::dense_gp(ds.features, one_hot_pm(ds), xs, 1.0, 1.0, 1e-2);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto p = oracle::naive_softmax(ref.mean[s]);
    EXPECT_NEAR(b.probs(s, 0), p[0], 1e-9);
    EXPECT_NEAR(b.sigma[s], std::sqrt(ref.variance[s]), 1e-8);
  }
  EXPECT_GT(b.probs(0, 0), 0.5);
  EXPECT_GT(b.probs(1, 1), 0.5);
}

TEST(Regression, LogMarginalLikelihoodMatchesClosedForm) {
  std::mt19937_64 rng(9);
  const Matrix x = oracle::random_matrix(12, 2, rng);
  const Matrix y = oracle::random_matrix(12, 1, rng);
  const RbfKernel k{0.9, 0.7};
  const GpModel m = fit_targets(x, y, k, 0.1);
  Matrix kk = kernel_matrix(k, x, x);
  for (std::size_t i = 0; i < 12; ++i) kk(i, i) += 0.1;
  const Matrix inv = oracle::gauss_inverse(kk);
  const Matrix l = naive_cholesky(kk);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    logdet += 2.0 * std::log(l(i, i));
    for (std::size_t j = 0; j < 12; ++j) quad += y(i, 0) * inv(i, j) * y(j, 0);
  }
  const double expect = -0.5 * quad - 0.5 * logdet - 6.0 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(m.log_marginal_likelihood(), expect, 1e-9);
}

TEST(Laplace, ModeIsFixedPointAndClassifies) {
  const Dataset ds = two_blobs(15, 1.5, 5);
  const RbfKernel k{2.0, 1.0};
  const double noise = 1e-2;
  const GpModel m = fit(ds, k, GpMode::laplace_binary, noise);
  ASSERT_EQ(m.laplace().size(), 2u);
  Matrix kp = kernel_matrix(k, ds.features, ds.features);
  for (std::size_t i = 0; i < ds.size(); ++i) kp(i, i) += noise;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& sub = m.laplace()[c];
    EXPECT_LE(sub.iterations, kNewtonMaxIterations);
    // At the mode f = K·∇log p(y|f) and ∇log p = t − sigmoid(f).
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double f = 0.0;
      for (std::size_t j = 0; j < ds.size(); ++j) f += kp(i, j) * sub.grad_log_lik[j];
      const double t = ds.labels[i] == c ? 1.0 : 0.0;
      EXPECT_NEAR(sub.grad_log_lik[i], t - 1.0 / (1.0 + std::exp(-f)), 1e-7);
    }
  }
  const RefBatch b = m.predict_batch(Matrix{{-3.0, 0.0}, {3.0, 0.0}, {40.0, 40.0}});
  EXPECT_GT(b.probs(0, 0), 0.6);
  EXPECT_GT(b.probs(1, 1), 0.6);
  // Far from the data the latent reverts to the prior: equal probabilities, maximal sigma.
  EXPECT_NEAR(b.probs(2, 0), 0.5, 1e-9);
  EXPECT_NEAR(b.sigma[2], std::sqrt(2.0 + noise), 1e-9);
  EXPECT_LT(b.sigma[0], b.sigma[2]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(b.probs(i, 0) + b.probs(i, 1), 1.0, 1e-12);
}

TEST(Ensemble, KeepsTopKInGridOrderAndAverages) {
  const Dataset ds = two_blobs(8, 1.5, 6);
  const auto grid = hyper_grid(ds.features, std::vector<double>{0.5, 1, 2, 4, 8},
                               std::vector<double>{0.5, 1, 2});
  ASSERT_EQ(grid.size(), 15u);
  const double med = median_pairwise_distance(ds.features);
  EXPECT_DOUBLE_EQ(grid[0].lengthscale, 0.5 * med);
  EXPECT_DOUBLE_EQ(grid[1].variance, 1.0);

  std::vector<double> lml;
  for (const auto& k : grid) lml.push_back(fit(ds, k, GpMode::regression, 1e-2).log_marginal_likelihood());
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lml[a] > lml[b]; });
  std::vector<std::size_t> top(order.begin(), order.begin() + 3);
  std::sort(top.begin(), top.end());

  const GpEnsemble ens = fit_ensemble(ds, grid, GpMode::regression, 1e-2, 3);
  ASSERT_EQ(ens.members().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ens.members()[i].kernel().lengthscale, grid[top[i]].lengthscale);
    EXPECT_EQ(ens.members()[i].kernel().variance, grid[top[i]].variance);
  }

  const std::vector<double> x{0.3, -0.2};
  const RefPrediction avg = ensemble_predict(ens, x);
  double p0 = 0.0, s = 0.0;
  for (const auto& m : ens.members()) {
    const auto r = predict(m, x);
    p0 += r.probs[0] / 3.0;
    s += r.sigma / 3.0;
  }
  EXPECT_NEAR(avg.probs[0], p0, 1e-12);
  EXPECT_NEAR(avg.sigma, s, 1e-12);
  EXPECT_NEAR(avg.probs[0] + avg.probs[1], 1.0, 1e-9);
  EXPECT_THROW(fit_ensemble(ds, grid, GpMode::regression, 1e-2, 16), ConfigError);
}

TEST(Ensemble, RecoversGeneratingLengthscale) {
  // Draw functions from a known GP and check the evidence picks its lengthscale.
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(100 + trial);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::normal_distribution<double> z(0.0, 1.0);
    const std::size_t n = 60;
    const double true_ell = 1.0, noise = 1e-2;
    Matrix x(n, 1);
    for (auto& v : x.data()) v = u(rng);
    Matrix kk(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        kk(i, j) = std::exp(-oracle::sq_dist(x.row(i), x.row(j)) / (2 * true_ell * true_ell)) +
                   (i == j ? noise : 0.0);
    const Matrix l = naive_cholesky(kk);
    Matrix e(n, 1), y(n, 1);
    for (auto& v : e.data()) v = z(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) y(i, 0) += l(i, j) * e(j, 0);

    std::vector<RbfKernel> grid;
    for (double ell : {0.25, 0.5, 1.0, 2.0, 4.0}) grid.push_back({1.0, ell});
    const GpEnsemble ens = fit_ensemble_targets(x, y, grid, noise, 1);
    if (ens.members().front().kernel().lengthscale == true_ell) ++hits;
  }
  EXPECT_GE(hits, 8);
}

TEST(Gp, RejectsBadInput) {
  const Dataset ds = two_blobs(3, 1.0, 1);
  EXPECT_THROW(fit(ds, RbfKernel{1, 1}, GpMode::regression, 0.0), ConfigError);
  const GpModel m = fit(ds, RbfKernel{1, 1}, GpMode::regression, 1e-2);
  EXPECT_THROW(m.predict_batch(Matrix(1, 3)), DimensionError);
  EXPECT_DOUBLE_EQ(median_pairwise_distance(Matrix{{0, 0}, {3, 4}}), 5.0);
  EXPECT_DOUBLE_EQ(median_pairwise_distance(Matrix{{1, 1}}), 1.0);
}
