#include "imitation/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

PseudoSets make_pseudo_sets(const Matrix& initial, const GpEnsemble& reference,
                            const AdamHyper& pseudo_optimizer) {
  PseudoSets sets;
  sets.n0 = initial.rows();
  sets.current.resize(initial.rows());
  for (std::size_t i = 0; i < initial.rows(); ++i) {
    auto r = initial.row(i);
    sets.current[i].x.assign(r.begin(), r.end());
  }
  relabel(sets.current, reference);
  sets.next = sets.current;
  for (auto& p : sets.next) p.optimizer = AdamState(p.x.size(), pseudo_optimizer);
  return sets;
}

PseudoSets merge_and_advance(PseudoSets sets) {
  PseudoSets out;
  out.n0 = sets.n0;
  out.step = sets.step + 1;
  out.next = sets.next;
  for (auto& p : out.next) p.optimizer = AdamState(p.x.size(), p.optimizer.hyper);
  out.current = std::move(sets.current);
  out.current.reserve(out.current.size() + sets.next.size());
  for (auto& p : sets.next) {
    p.optimizer = AdamState();
    out.current.push_back(std::move(p));
  }
  return out;
}

Matrix stack_points(std::span<const PseudoExample> examples) {
  if (examples.empty()) return {};
  Matrix m(examples.size(), examples.front().x.size());
  for (std::size_t i = 0; i < examples.size(); ++i)
    std::copy(examples[i].x.begin(), examples[i].x.end(), m.row(i).begin());
  return m;
}

void relabel(std::span<PseudoExample> examples, const GpEnsemble& reference) {
  if (examples.empty()) return;
  const RefBatch refs = reference.predict_batch(stack_points(examples));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto r = refs.probs.row(i);
    examples[i].ref_probs.assign(r.begin(), r.end());
    examples[i].sigma = refs.sigma[i];
  }
}

Matrix init_pseudo(const Dataset& labeled, std::size_t count, double interp_fraction,
                   double jitter_scale, std::uint64_t seed) {
  if (labeled.empty()) throw DataError("init_pseudo: no labeled examples");
  if (count == 0) throw ConfigError("init_pseudo: count must be >= 1");
  if (!(interp_fraction >= 0.0 && interp_fraction <= 1.0))
    throw ConfigError("init_pseudo: interp_fraction must be in [0,1]");
  if (!(jitter_scale >= 0.0)) throw ConfigError("init_pseudo: jitter_scale must be >= 0");
  const auto n_interp =
      static_cast<std::size_t>(std::llround(interp_fraction * static_cast<double>(count)));
  const std::size_t n = labeled.size();
  const std::size_t d = labeled.dim();
  if (n_interp > 0 && n < 2)
    throw DataError("init_pseudo: interpolation needs at least 2 labeled examples");

  std::vector<double> stddev(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += labeled.features(i, k);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = labeled.features(i, k) - mean;
      ss += dv * dv;
    }
    stddev[k] = std::sqrt(ss / static_cast<double>(n));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(count, d);
  for (std::size_t p = 0; p < count; ++p) {
    auto dst = out.row(p);
    if (p < n_interp) {
      const std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      const double u = unit(rng);
      auto a = labeled.features.row(i);
      auto b = labeled.features.row(j);
      for (std::size_t k = 0; k < d; ++k) dst[k] = u * a[k] + (1.0 - u) * b[k];
    } else {
      auto a = labeled.features.row(pick(rng));
      for (std::size_t k = 0; k < d; ++k) dst[k] = a[k] + jitter_scale * stddev[k] * normal(rng);
    }
  }
  return out;
}

Matrix dense_grid_pseudo(std::span<const double> bounds, std::size_t resolution) {
  if (bounds.size() != 4)
    throw DimensionError("dense_grid_pseudo: expected 2-d bounds {xmin, xmax, ymin, ymax}");
  return make_grid(bounds[0], bounds[1], bounds[2], bounds[3], resolution);
}

std::vector<double> fidelity_weights(std::span<const double> sigmas, double lambda_hat2,
                                     double lambda_bar2) {
  if (!(lambda_bar2 > 0.0) || !(lambda_hat2 >= lambda_bar2))
    throw ConfigError("fidelity_weights: need 0 < lambda_bar2 <= lambda_hat2");
  std::vector<double> w(sigmas.size(), lambda_bar2);
  if (sigmas.empty()) return w;
  double mean = 0.0;
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw NumericalError("fidelity_weights: invalid sigma");
    mean += s;
  }
  mean /= static_cast<double>(sigmas.size());
  if (mean == 0.0) return w;
  const double rate = std::log(lambda_hat2 / lambda_bar2);
  for (std::size_t n = 0; n < sigmas.size(); ++n)
    w[n] = std::max(lambda_hat2 * std::exp(-rate * sigmas[n] / mean),
                    std::numeric_limits<double>::min());
  return w;
}

}  // namespace imitation
