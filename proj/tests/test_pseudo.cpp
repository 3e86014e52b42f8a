#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "imitation/errors.hpp"
#include "imitation/pseudo.hpp"
#include "oracles.hpp"

using namespace imitation;

namespace {

Dataset labeled_set(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.class_count = 2;
  ds.features = oracle::random_matrix(2 * per_class, 3, rng);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    ds.labels.push_back(i % 2);
    ds.features(i, 0) += i % 2 ? 1.5 : -1.5;
  }
  return ds;
}

GpEnsemble reference_for(const Dataset& ds) {
  const std::vector<RbfKernel> grid{{1.0, 1.0}};
  return fit_ensemble(ds, grid, GpMode::regression, 1e-2, 1);
}

}  // namespace

TEST(PseudoSets, GrowthLawAndCopySemantics) {
  const Dataset ds = labeled_set(3, 1);
  const GpEnsemble ref = reference_for(ds);
  const Matrix init = init_pseudo(ds, 7, 1.0, 0.0, 2);
  PseudoSets sets = make_pseudo_sets(init, ref, AdamHyper{0.05});
  EXPECT_EQ(sets.current.size(), 7u);
  EXPECT_EQ(sets.next.size(), 7u);
  for (std::size_t t = 1; t < 6; ++t) {
    sets.next[0].x[0] += 1.0;  // stand-in for an optimization pass
    sets.next[0].optimizer.step_count = 5;
    const auto moved = sets.next[0].x;
    sets = merge_and_advance(std::move(sets));
    EXPECT_EQ(sets.step, t);
    EXPECT_EQ(sets.current.size(), (t + 1) * 7);
    EXPECT_EQ(sets.next.size(), 7u);
    EXPECT_EQ(sets.current.back().x.size(), moved.size());
    EXPECT_EQ(sets.current[t * 7].x, moved);
    EXPECT_EQ(sets.next[0].x, moved);
    EXPECT_EQ(sets.next[0].optimizer.step_count, 0);
    EXPECT_EQ(sets.next[0].optimizer.hyper.lr, 0.05);
  }
}

TEST(PseudoSets, RelabelMatchesReference) {
  const Dataset ds = labeled_set(4, 3);
  const GpEnsemble ref = reference_for(ds);
  PseudoSets sets = make_pseudo_sets(init_pseudo(ds, 5, 0.5, 0.3, 4), ref, AdamHyper{});
  for (const auto& p : sets.current) {
    const auto r = ensemble_predict(ref, p.x);
    EXPECT_EQ(p.ref_probs, r.probs);
    EXPECT_EQ(p.sigma, r.sigma);
  }
}

TEST(InitPseudo, InterpolationsLieOnSegments) {
  const Dataset ds = labeled_set(1, 5);  // two points, so every pair is the same segment
  const Matrix pts = init_pseudo(ds, 50, 1.0, 0.2, 6);
  ASSERT_EQ(pts.rows(), 50u);
  const auto a = ds.features.row(0), b = ds.features.row(1);
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const double u = (pts(i, 0) - b[0]) / (a[0] - b[0]);
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GE(pts(i, k), std::min(a[k], b[k]) - 1e-12);
      EXPECT_LE(pts(i, k), std::max(a[k], b[k]) + 1e-12);
      EXPECT_NEAR(pts(i, k), u * a[k] + (1 - u) * b[k], 1e-12);
    }
  }
}

TEST(InitPseudo, JitterStaysNearLabeledPointsAndIsSeeded) {
  const Dataset ds = labeled_set(5, 7);
  const Matrix a = init_pseudo(ds, 40, 0.25, 1e-3, 8);
  const Matrix b = init_pseudo(ds, 40, 0.25, 1e-3, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_pseudo(ds, 40, 0.25, 1e-3, 9));
  for (std::size_t i = 10; i < 40; ++i) {  // round(0.25·40) interpolations come first
    double best = 1e300;
    for (std::size_t j = 0; j < ds.size(); ++j)
      best = std::min(best, oracle::sq_dist(a.row(i), ds.features.row(j)));
    EXPECT_LT(std::sqrt(best), 0.05);
  }
  EXPECT_THROW(init_pseudo(ds, 0, 0.5, 0.1, 1), ConfigError);
  EXPECT_THROW(init_pseudo(ds, 5, 1.5, 0.1, 1), ConfigError);
}

TEST(DenseGrid, CoversBounds) {
  const std::vector<double> bounds{-1, 1, 0, 2};
  const Matrix g = dense_grid_pseudo(bounds, 50);
  EXPECT_EQ(g.rows(), 2500u);
  EXPECT_EQ(g(0, 0), -1.0);
  EXPECT_EQ(g(2499, 1), 2.0);
}

TEST(Fidelity, Identities) {
  const std::vector<double> sigmas{0.0, 0.5, 1.0, 1.5, 2.0};  // mean 1
  const auto w = fidelity_weights(sigmas, 100.0, 1.0);
  EXPECT_NEAR(w[0], 100.0, 1e-12);
  EXPECT_NEAR(w[1], 10.0, 1e-12);
  EXPECT_NEAR(w[2], 1.0, 1e-12);
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    EXPECT_NEAR(w[i], oracle::fidelity(sigmas[i], 100.0, 1.0, 1.0), 1e-12);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LT(w[i], w[i - 1]);
}

TEST(Fidelity, DegenerateCases) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_EQ(fidelity_weights(zeros, 10.0, 2.0), (std::vector<double>{2.0, 2.0}));
  const std::vector<double> s{1.0, 3.0};
  const auto flat = fidelity_weights(s, 2.0, 2.0);
  EXPECT_NEAR(flat[0], 2.0, 1e-15);
  EXPECT_NEAR(flat[1], 2.0, 1e-15);
  EXPECT_THROW(fidelity_weights(s, 1.0, 2.0), ConfigError);
  const std::vector<double> bad{1.0, -1.0};
  EXPECT_THROW(fidelity_weights(bad, 10.0, 1.0), NumericalError);
}
