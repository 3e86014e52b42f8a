#include "imitation/optim.hpp"

#include <cmath>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

namespace {

void check(const MomentState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("optimizer: params/grads/state length mismatch (" +
                         std::to_string(params.size()) + ", " + std::to_string(grads.size()) +
                         ", " + std::to_string(state.m.size()) + ")");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalError("optimizer: non-finite gradient at coordinate " + std::to_string(i));
    }
  }
}

template <bool kNegate>
void adam_impl(AdamState& state, std::span<double> params, std::span<const double> grads) {
  check(state, params, grads);
  const auto& h = state.hyper;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = kNegate ? -grads[i] : grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

}  // namespace

MomentState::MomentState(std::size_t n, AdamHyper hyper_)
    : hyper(hyper_), m(n, 0.0), v(n, 0.0) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  adam_impl<false>(state, params, grads);
}

void ascend(AdamState& state, std::span<double> params, std::span<const double> grads) {
  adam_impl<true>(state, params, grads);
}

void nadam_step(NadamState& state, std::span<double> params, std::span<const double> grads) {
  check(state, params, grads);
  const auto& h = state.hyper;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c1_next = 1.0 - std::pow(h.beta1, t + 1.0);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_bar = h.beta1 * state.m[i] / c1_next + (1.0 - h.beta1) * g / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= h.lr * m_bar / (std::sqrt(v_hat) + h.eps);
  }
}

}  // namespace imitation
