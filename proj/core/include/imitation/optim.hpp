#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace imitation {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators for one parameter tensor.
///
/// Shared by Adam and Nadam; the two differ only in how the update is formed.
struct MomentState {
  MomentState() = default;
  MomentState(std::size_t n, AdamHyper hyper);

  AdamHyper hyper;
  std::int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

using AdamState = MomentState;
using NadamState = MomentState;

/// One bias-corrected Adam descent step. Throws NumericalError naming the
/// first non-finite gradient coordinate; the state is untouched in that case.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Nadam with constant momentum: the Nesterov lookahead uses
/// β1·m_t/(1-β1^{t+1}) + (1-β1)·g_t/(1-β1^t) as the first-moment estimate.
void nadam_step(NadamState& state, std::span<double> params, std::span<const double> grads);

/// Gradient ascent with Adam; identical to adam_step on the negated gradient.
void ascend(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace imitation
