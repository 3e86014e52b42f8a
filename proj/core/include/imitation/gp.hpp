#pragma once

#include <optional>
#include <span>
#include <vector>

#include "imitation/data.hpp"
#include "imitation/linalg.hpp"

namespace imitation {

struct RbfKernel {
  double variance = 1.0;
  double lengthscale = 1.0;

  void validate() const;
  double operator()(std::span<const double> a, std::span<const double> b) const;
};

/// K[i][j] = variance · exp(−‖aᵢ − bⱼ‖² / (2·lengthscale²)).
Matrix kernel_matrix(const RbfKernel& k, const Matrix& a, const Matrix& b);

enum class GpMode { regression, laplace_binary };

/// Per-point class probabilities and a scalar predictive uncertainty.
struct RefPrediction {
  std::vector<double> probs;
  double sigma = 0.0;
};

/// Batched reference predictions: one probability row and one sigma per point.
struct RefBatch {
  Matrix probs;  // N × classes
  std::vector<double> sigma;

  RefPrediction at(std::size_t i) const;
};

/// One-vs-rest Laplace posterior for a single binary submodel.
struct LaplaceSubmodel {
  std::vector<double> grad_log_lik;  // ∇ log p(y|f̂) = t − π̂
  std::vector<double> sqrt_w;        // W^{1/2}
  std::optional<CholeskyFactor> b_factor;  // chol(I + W½ K W½)
  double log_marginal = 0.0;
  int iterations = 0;
};

/// Fitted GP reference model.
///
/// Regression mode solves (K + σ²ₙI)α = Y for ±1 one-hot targets.
/// Laplace mode runs Newton mode-finding on a logistic likelihood per class
/// (one-vs-rest), with K + σ²ₙI as the latent prior covariance.
class GpModel {
 public:
  GpModel(RbfKernel kernel, GpMode mode, Matrix train_x, Matrix alpha, CholeskyFactor factor,
          double noise, std::size_t class_count, double log_marginal,
          std::vector<LaplaceSubmodel> laplace = {});

  const RbfKernel& kernel() const noexcept { return kernel_; }
  GpMode mode() const noexcept { return mode_; }
  const Matrix& train_x() const noexcept { return train_x_; }
  /// N × classes solve vectors (regression mode).
  const Matrix& alpha() const noexcept { return alpha_; }
  const CholeskyFactor& factor() const noexcept { return factor_; }
  double noise() const noexcept { return noise_; }
  std::size_t class_count() const noexcept { return class_count_; }
  double log_marginal_likelihood() const noexcept { return log_marginal_; }
  const std::vector<LaplaceSubmodel>& laplace() const noexcept { return laplace_; }

  /// Regression latent mean (N × classes) and variance k(x,x)+σ²ₙ−k*ᵀ(K+σ²ₙI)⁻¹k*.
  void regression_moments(const Matrix& x, Matrix& mean, std::vector<double>& variance) const;

  RefBatch predict_batch(const Matrix& x) const;

 private:
  RbfKernel kernel_;
  GpMode mode_;
  Matrix train_x_;
  Matrix alpha_;
  CholeskyFactor factor_;
  double noise_;
  std::size_t class_count_;
  double log_marginal_;
  std::vector<LaplaceSubmodel> laplace_;
};

/// Laplace Newton iterations stop once ‖Δf‖∞ drops below this.
inline constexpr double kNewtonTolerance = 1e-8;
inline constexpr int kNewtonMaxIterations = 50;

GpModel fit(const Dataset& train, const RbfKernel& kernel, GpMode mode, double noise);

/// Regression GP on arbitrary real targets (N × outputs).
GpModel fit_targets(const Matrix& x, const Matrix& targets, const RbfKernel& kernel, double noise);

RefPrediction predict(const GpModel& model, std::span<const double> x);

class GpEnsemble {
 public:
  explicit GpEnsemble(std::vector<GpModel> members);

  const std::vector<GpModel>& members() const noexcept { return members_; }
  std::size_t class_count() const noexcept { return members_.front().class_count(); }
  std::size_t input_dim() const noexcept { return members_.front().train_x().cols(); }

  RefBatch predict_batch(const Matrix& x) const;

 private:
  std::vector<GpModel> members_;
};

/// Fits every grid kernel, keeps the top_k by log marginal likelihood, and
/// returns them in grid order. Members that fail to factorize are skipped.
GpEnsemble fit_ensemble(const Dataset& train, std::span<const RbfKernel> grid, GpMode mode,
                        double noise, std::size_t top_k);

/// Same selection rule for regression on real-valued targets.
GpEnsemble fit_ensemble_targets(const Matrix& x, const Matrix& targets,
                                std::span<const RbfKernel> grid, double noise, std::size_t top_k);

RefPrediction ensemble_predict(const GpEnsemble& ens, std::span<const double> x);

double median_pairwise_distance(const Matrix& x);

/// lengthscale_factors × median pairwise distance crossed with variances,
/// lengthscale-major.
std::vector<RbfKernel> hyper_grid(const Matrix& x, std::span<const double> lengthscale_factors,
                                  std::span<const double> variances);

}  // namespace imitation
