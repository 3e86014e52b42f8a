#include <benchmark/benchmark.h>

#include <random>

#include "imitation/gp.hpp"
#include "imitation/imitation.hpp"
#include "imitation/linalg.hpp"
#include "imitation/mlp.hpp"
#include "imitation/pseudo.hpp"

using namespace imitation;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.data()) v = n(rng);
  return m;
}

Dataset random_dataset(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  Dataset ds;
  ds.class_count = classes;
  ds.features = random_matrix(n, d, seed);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(i % classes);
  return ds;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

static void BM_Cholesky(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix b = random_matrix(n, n, 3);
  Matrix a = matmul_nt(b, b);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
  for (auto _ : state) benchmark::DoNotOptimize(cholesky(a));
}
BENCHMARK(BM_Cholesky)->Arg(50)->Arg(200);

static void BM_ForwardBackward(benchmark::State& state) {
  const std::vector<std::size_t> dims{784, 256, 256, 10};
  const Mlp net = init_weights(dims, 4);
  const Matrix x = random_matrix(110, 784, 5);
  const Matrix d = random_matrix(110, 10, 6);
  for (auto _ : state) {
    auto trace = forward(net, x);
    benchmark::DoNotOptimize(backward_params(net, trace, d));
  }
  state.SetItemsProcessed(state.iterations() * 110);
}
BENCHMARK(BM_ForwardBackward);

static void BM_GpEnsemblePredict(benchmark::State& state) {
  const Dataset train = random_dataset(50, 784, 10, 7);
  const auto grid = hyper_grid(train.features, std::vector<double>{0.5, 1, 2, 4, 8},
                               std::vector<double>{0.5, 1, 2});
  const GpEnsemble ens = fit_ensemble(train, grid, GpMode::regression, 1e-2, 3);
  const Matrix x = random_matrix(500, 784, 8);
  for (auto _ : state) benchmark::DoNotOptimize(ens.predict_batch(x));
  state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_GpEnsemblePredict);

static void BM_LaplaceFit(benchmark::State& state) {
  const Dataset train = random_dataset(10, 100, 2, 9);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(train, RbfKernel{1.0, 10.0}, GpMode::laplace_binary, 1e-2));
}
BENCHMARK(BM_LaplaceFit);

static void BM_PseudoPass(benchmark::State& state) {
  const Dataset train = random_dataset(10, 784, 10, 10);
  const std::vector<RbfKernel> grid{{1.0, 30.0}};
  const GpEnsemble ens = fit_ensemble(train, grid, GpMode::regression, 1e-2, 1);
  const std::vector<std::size_t> dims{784, 256, 256, 10};
  const Mlp net = init_weights(dims, 11);
  PseudoSets sets = make_pseudo_sets(init_pseudo(train, 500, 1.0, 0.0, 12), ens, AdamHyper{0.02});
  for (auto _ : state) pseudo_update_pass(sets.next, net, ens, UpdateMode::gradient, 0.02);
  state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_PseudoPass);

BENCHMARK_MAIN();
