#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "imitation/data.hpp"
#include "imitation/gp.hpp"
#include "imitation/mlp.hpp"
#include "imitation/pseudo.hpp"

namespace imitation {

enum class UpdateMode { gradient, sign };

struct ImitationConfig {
  double lambda1 = 1.0;
  double lambda_bar2 = 1.0;
  double lambda_hat2 = 10.0;
  bool fidelity_enabled = true;
  bool pseudo_optimize_enabled = true;
  UpdateMode update_mode = UpdateMode::gradient;
  double pseudo_lr = 0.05;
  double target_lr = 1e-3;
  std::size_t steps = 4;
  std::size_t epochs_per_step = 50;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  /// Evaluate the test set after every epoch instead of once per step.
  bool eval_every_epoch = false;

  void validate() const;
};

/// A labeled minibatch: rows of x with hard labels.
struct LabeledBatch {
  const Matrix& x;
  std::span<const std::size_t> labels;
};

/// A pseudo minibatch: rows of x with reference probabilities and weights λ2,n.
struct PseudoBatch {
  const Matrix& x;
  const Matrix& ref_probs;
  std::span<const double> weights;
};

struct ImitationLoss {
  double loss = 0.0;
  double hard_term = 0.0;  ///< (1/N_L)·Σ D1, before λ1
  double soft_term = 0.0;  ///< (1/N_P)·Σ λ2,n·D2
  Matrix labeled_dlogits;
  Matrix pseudo_dlogits;
};

/// (λ1/N_L)·Σ D1(yₙ, f(xₙ)) + (1/N_P)·Σ λ2,n·D2(g(xᴾₙ), f(xᴾₙ)) from logits.
/// Either batch may be empty, in which case its term is zero.
ImitationLoss imitation_loss_from_logits(const Matrix& labeled_logits,
                                         std::span<const std::size_t> labels,
                                         const Matrix& pseudo_logits, const Matrix& ref_probs,
                                         std::span<const double> weights, double lambda1);

struct ImitationEval {
  ImitationLoss loss;
  Gradients grads;  ///< parameter grads; input grads stacked labeled rows first
};

/// Loss and gradients of the imitation objective on one combined minibatch.
ImitationEval imitation_loss(const Mlp& net, const LabeledBatch& labeled, const PseudoBatch& pseudo,
                             double lambda1);

/// Per-row ∇ₓ D2(g(x), f(x)) with g held constant.
Matrix soft_loss_input_gradients(const Mlp& net, const Matrix& x, const Matrix& ref_probs);

/// One adversarial pass over the next set: every point moves to increase D2
/// (Adam ascent, or x += lr·sign(∇)), then its reference output is refreshed.
void pseudo_update_pass(std::vector<PseudoExample>& next, const Mlp& net,
                        const GpEnsemble& reference, UpdateMode mode, double lr);

/// Nadam state for every parameter tensor of a network (weights, bias per layer).
struct TargetOptimizer {
  TargetOptimizer(const Mlp& net, double lr);
  void step(Mlp& net, const Gradients& grads);

  std::vector<NadamState> weight_states;
  std::vector<NadamState> bias_states;
};

struct EpochRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double hard_loss = 0.0;
  double soft_loss = 0.0;
  std::size_t current_size = 0;
  std::optional<double> test_accuracy;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> sigma_bar;  ///< mean reference uncertainty per step
  std::vector<std::size_t> current_sizes;  ///< |current| per step
};

struct TrainResult {
  Mlp net;
  TrainReport report;
  PseudoSets final_sets;
};

/// Called at the start of each step after fidelity weights are assigned.
using StepObserver = std::function<void(std::size_t step, const PseudoSets& sets)>;

/// Staged imitation training with copy-merge pseudo-set growth.
///
/// With an empty initial pseudo set (and a null reference) this degenerates
/// to plain supervised training on the labeled set.
TrainResult train(const Dataset& labeled, const GpEnsemble* reference, Mlp net,
                  const ImitationConfig& cfg, const Matrix& initial_pseudo,
                  const Dataset* test = nullptr, const StepObserver& observer = {});

double accuracy(const Mlp& net, const Dataset& test);
double accuracy(const GpEnsemble& reference, const Dataset& test);

/// step,epoch,hard_loss,soft_loss,current_size,test_accuracy
void write_report_csv(const TrainReport& report, std::ostream& out);

/// step,index,<coordinates>,ref_argmax,sigma,weight. coords has one row per example.
void write_pseudo_snapshot_csv(std::size_t step, const Matrix& coords,
                               std::span<const PseudoExample> examples, std::ostream& out);

}  // namespace imitation
