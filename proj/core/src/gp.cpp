#include "imitation/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "imitation/errors.hpp"
#include "imitation/mlp.hpp"

namespace imitation {

void RbfKernel::validate() const {
  if (!(variance > 0.0) || !std::isfinite(variance) || !(lengthscale > 0.0) ||
      !std::isfinite(lengthscale)) {
    throw ConfigError("RbfKernel: variance and lengthscale must be positive and finite");
  }
}

double RbfKernel::operator()(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return variance * std::exp(-d2 / (2.0 * lengthscale * lengthscale));
}

Matrix kernel_matrix(const RbfKernel& k, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("kernel_matrix: feature widths " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " differ");
  }
  k.validate();
  // ‖a−b‖² = ‖a‖² + ‖b‖² − 2a·b keeps the O(n·m·d) part in one product.
  Matrix cross = matmul_nt(a, b);
  std::vector<double> na(a.rows()), nb(b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double v : a.row(i)) na[i] += v * v;
  for (std::size_t j = 0; j < b.rows(); ++j)
    for (double v : b.row(j)) nb[j] += v * v;
  const double scale = -1.0 / (2.0 * k.lengthscale * k.lengthscale);
  const bool same = &a == &b;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = cross.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double d2 = same && i == j ? 0.0 : std::max(na[i] + nb[j] - 2.0 * r[j], 0.0);
      r[j] = k.variance * std::exp(d2 * scale);
    }
  }
  if (same) {
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) cross(j, i) = cross(i, j);
  }
  return cross;
}

RefPrediction RefBatch::at(std::size_t i) const {
  auto r = probs.row(i);
  return {std::vector<double>(r.begin(), r.end()), sigma[i]};
}

GpModel::GpModel(RbfKernel kernel, GpMode mode, Matrix train_x, Matrix alpha,
                 CholeskyFactor factor, double noise, std::size_t class_count, double log_marginal,
                 std::vector<LaplaceSubmodel> laplace)
    : kernel_(kernel),
      mode_(mode),
      train_x_(std::move(train_x)),
      alpha_(std::move(alpha)),
      factor_(std::move(factor)),
      noise_(noise),
      class_count_(class_count),
      log_marginal_(log_marginal),
      laplace_(std::move(laplace)) {}

namespace {

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

Matrix as_column(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }

LaplaceSubmodel laplace_mode(const Matrix& kn, const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> f(n, 0.0), a(n, 0.0), pi(n), w(n), sw(n);
  LaplaceSubmodel sub;
  for (int it = 1;; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      pi[i] = sigmoid(f[i]);
      w[i] = pi[i] * (1.0 - pi[i]);
      sw[i] = std::sqrt(w[i]);
    }
    Matrix b_mat(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b_mat(i, j) = sw[i] * kn(i, j) * sw[j] + (i == j ? 1.0 : 0.0);
    CholeskyFactor lb = cholesky(b_mat);

    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = w[i] * f[i] + (0.5 * (y[i] + 1.0) - pi[i]);
    Matrix kb = matmul(kn, as_column(b));
    for (std::size_t i = 0; i < n; ++i) kb(i, 0) *= sw[i];
    Matrix s = cholesky_solve(lb, kb);
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] - sw[i] * s(i, 0);
    Matrix f_new = matmul(kn, as_column(a));

    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      delta = std::max(delta, std::abs(f_new(i, 0) - f[i]));
      f[i] = f_new(i, 0);
    }
    if (!std::isfinite(delta)) throw NumericalError("laplace: non-finite Newton step");
    if (delta < kNewtonTolerance) {
      sub.iterations = it;
      break;
    }
    if (it >= kNewtonMaxIterations) {
      throw NumericalError("laplace: Newton mode-finding did not converge in " +
                           std::to_string(kNewtonMaxIterations) + " iterations");
    }
  }

  sub.grad_log_lik.resize(n);
  sub.sqrt_w.resize(n);
  Matrix b_mat(n, n);
  double fit = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pi[i] = sigmoid(f[i]);
    sub.grad_log_lik[i] = 0.5 * (y[i] + 1.0) - pi[i];
    sub.sqrt_w[i] = std::sqrt(pi[i] * (1.0 - pi[i]));
    fit += log_sigmoid(y[i] * f[i]) - 0.5 * a[i] * f[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b_mat(i, j) = sub.sqrt_w[i] * kn(i, j) * sub.sqrt_w[j] + (i == j ? 1.0 : 0.0);
  sub.b_factor = cholesky(b_mat);
  sub.log_marginal = fit - sub.b_factor->half_log_det();
  return sub;
}

}  // namespace

GpModel fit_targets(const Matrix& x, const Matrix& targets, const RbfKernel& kernel, double noise) {
  if (x.rows() == 0) throw DataError("gp fit: empty training set");
  if (targets.rows() != x.rows()) throw DimensionError("gp fit: targets/features row mismatch");
  if (!(noise > 0.0)) throw ConfigError("gp fit: noise must be positive");
  kernel.validate();
  Matrix k = kernel_matrix(kernel, x, x);
  for (std::size_t i = 0; i < k.rows(); ++i) k(i, i) += noise;
  auto solved = solve_spd_factored(k, targets, 0.0);
  const double n = static_cast<double>(x.rows());
  double lml = 0.0;
  for (std::size_t c = 0; c < targets.cols(); ++c) {
    double quad = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) quad += targets(i, c) * solved.x(i, c);
    lml += -0.5 * quad - solved.factor.half_log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi);
  }
  return GpModel(kernel, GpMode::regression, x, std::move(solved.x), std::move(solved.factor),
                 noise + solved.jitter, targets.cols(), lml);
}

GpModel fit(const Dataset& train, const RbfKernel& kernel, GpMode mode, double noise) {
  if (train.empty()) throw DataError("gp fit: empty training set");
  train.validate();
  const std::size_t n = train.size();
  const std::size_t classes = train.class_count;
  Matrix y(n, classes, -1.0);
  for (std::size_t i = 0; i < n; ++i) y(i, train.labels[i]) = 1.0;
  if (mode == GpMode::regression) return fit_targets(train.features, y, kernel, noise);

  if (!(noise > 0.0)) throw ConfigError("gp fit: noise must be positive");
  kernel.validate();
  Matrix kn = kernel_matrix(kernel, train.features, train.features);
  for (std::size_t i = 0; i < n; ++i) kn(i, i) += noise;
  double used_jitter = 0.0;
  CholeskyFactor factor = cholesky_with_jitter(kn, 0.0, &used_jitter);
  for (std::size_t i = 0; i < n; ++i) kn(i, i) += used_jitter;

  std::vector<LaplaceSubmodel> subs;
  double lml = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> yc(n);
    for (std::size_t i = 0; i < n; ++i) yc[i] = y(i, c);
    subs.push_back(laplace_mode(kn, yc));
    lml += subs.back().log_marginal;
  }
  return GpModel(kernel, GpMode::laplace_binary, train.features, Matrix(n, 0), std::move(factor),
                 noise + used_jitter, classes, lml, std::move(subs));
}

void GpModel::regression_moments(const Matrix& x, Matrix& mean, std::vector<double>& variance) const {
  if (x.cols() != train_x_.cols()) {
    throw DimensionError("gp predict: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(train_x_.cols()));
  }
  Matrix ks = kernel_matrix(kernel_, x, train_x_);  // m × n
  mean = matmul(ks, alpha_);
  Matrix v = solve_triangular(factor_, ks.transposed(), TriangularSide::lower);  // n × m
  const double prior = kernel_.variance + noise_;
  variance.assign(x.rows(), prior);
  for (std::size_t k = 0; k < v.rows(); ++k) {
    auto r = v.row(k);
    for (std::size_t i = 0; i < r.size(); ++i) variance[i] -= r[i] * r[i];
  }
  for (double& s : variance) s = std::clamp(s, 0.0, prior);
}

RefBatch GpModel::predict_batch(const Matrix& x) const {
  RefBatch out;
  out.probs = Matrix(x.rows(), class_count_);
  out.sigma.assign(x.rows(), 0.0);
  if (mode_ == GpMode::regression) {
    Matrix mean;
    std::vector<double> var;
    regression_moments(x, mean, var);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto p = softmax(mean.row(i));
      std::copy(p.begin(), p.end(), out.probs.row(i).begin());
      out.sigma[i] = std::sqrt(var[i]);
    }
    return out;
  }

  if (x.cols() != train_x_.cols()) {
    throw DimensionError("gp predict: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(train_x_.cols()));
  }
  Matrix ks = kernel_matrix(kernel_, x, train_x_);  // m × n
  const std::size_t n = train_x_.rows();
  const double prior = kernel_.variance + noise_;
  for (std::size_t c = 0; c < class_count_; ++c) {
    const auto& sub = laplace_[c];
    Matrix ws(n, x.rows());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < x.rows(); ++i) ws(j, i) = sub.sqrt_w[j] * ks(i, j);
    Matrix v = solve_triangular(*sub.b_factor, ws, TriangularSide::lower);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean += ks(i, j) * sub.grad_log_lik[j];
      double var = prior;
      for (std::size_t j = 0; j < n; ++j) var -= v(j, i) * v(j, i);
      var = std::clamp(var, 0.0, prior);
      // Logistic-Gaussian integral via the probit-matched moment approximation.
      out.probs(i, c) = sigmoid(mean / std::sqrt(1.0 + std::numbers::pi * var / 8.0));
      out.sigma[i] += std::sqrt(var) / static_cast<double>(class_count_);
    }
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = out.probs.row(i);
    const double s = std::accumulate(r.begin(), r.end(), 0.0);
    for (double& p : r) p /= s;
  }
  return out;
}

RefPrediction predict(const GpModel& model, std::span<const double> x) {
  Matrix one(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return model.predict_batch(one).at(0);
}

GpEnsemble::GpEnsemble(std::vector<GpModel> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("GpEnsemble: no members");
  for (const auto& m : members_) {
    if (m.class_count() != members_.front().class_count() ||
        m.train_x().rows() != members_.front().train_x().rows() ||
        m.train_x().cols() != members_.front().train_x().cols()) {
      throw DimensionError("GpEnsemble: members disagree on training data or classes");
    }
  }
}

RefBatch GpEnsemble::predict_batch(const Matrix& x) const {
  RefBatch out = members_.front().predict_batch(x);
  for (std::size_t k = 1; k < members_.size(); ++k) {
    RefBatch b = members_[k].predict_batch(x);
    auto dst = out.probs.data();
    auto src = b.probs.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t i = 0; i < out.sigma.size(); ++i) out.sigma[i] += b.sigma[i];
  }
  const double m = static_cast<double>(members_.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = out.probs.row(i);
    double s = 0.0;
    for (double& p : r) {
      p /= m;
      s += p;
    }
    for (double& p : r) p /= s;
    out.sigma[i] /= m;
  }
  return out;
}

RefPrediction ensemble_predict(const GpEnsemble& ens, std::span<const double> x) {
  Matrix one(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return ens.predict_batch(one).at(0);
}

namespace {

template <typename FitFn>
GpEnsemble select_top(std::span<const RbfKernel> grid, std::size_t top_k, FitFn&& fit_one) {
  if (grid.empty()) throw ConfigError("fit_ensemble: empty hyperparameter grid");
  if (top_k == 0 || top_k > grid.size())
    throw ConfigError("fit_ensemble: top_k must be in [1, grid size]");
  std::vector<std::pair<std::size_t, GpModel>> fitted;
  std::string last_error;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    try {
      fitted.emplace_back(g, fit_one(grid[g]));
    } catch (const NumericalError& e) {
      last_error = e.what();
    }
  }
  if (fitted.empty()) throw NumericalError("fit_ensemble: every grid member failed: " + last_error);
  std::stable_sort(fitted.begin(), fitted.end(), [](const auto& a, const auto& b) {
    return a.second.log_marginal_likelihood() > b.second.log_marginal_likelihood();
  });
  fitted.erase(fitted.begin() + static_cast<std::ptrdiff_t>(std::min(top_k, fitted.size())),
               fitted.end());
  std::sort(fitted.begin(), fitted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<GpModel> members;
  for (auto& f : fitted) members.push_back(std::move(f.second));
  return GpEnsemble(std::move(members));
}

}  // namespace

GpEnsemble fit_ensemble(const Dataset& train, std::span<const RbfKernel> grid, GpMode mode,
                        double noise, std::size_t top_k) {
  return select_top(grid, top_k, [&](const RbfKernel& k) { return fit(train, k, mode, noise); });
}

GpEnsemble fit_ensemble_targets(const Matrix& x, const Matrix& targets,
                                std::span<const RbfKernel> grid, double noise, std::size_t top_k) {
  return select_top(grid, top_k,
                    [&](const RbfKernel& k) { return fit_targets(x, targets, k, noise); });
}

double median_pairwise_distance(const Matrix& x) {
  std::vector<double> d;
  d.reserve(x.rows() * (x.rows() - 1) / 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      auto a = x.row(i), b = x.row(j);
      for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      d.push_back(std::sqrt(s));
    }
  }
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

std::vector<RbfKernel> hyper_grid(const Matrix& x, std::span<const double> lengthscale_factors,
                                  std::span<const double> variances) {
  const double med = median_pairwise_distance(x);
  std::vector<RbfKernel> grid;
  for (double f : lengthscale_factors)
    for (double v : variances) grid.push_back({v, f * med});
  return grid;
}

}  // namespace imitation
