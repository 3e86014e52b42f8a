#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "imitation/linalg.hpp"

namespace imitation {

struct DenseLayer {
  Matrix weights;             // out × in
  std::vector<double> bias;   // out

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }
};

/// Fully-connected network: ReLU hidden layers, linear output logits.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  std::size_t input_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t class_count() const noexcept { return layers_.back().out_dim(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::vector<std::size_t> dims() const;
  std::size_t parameter_count() const noexcept;

  std::span<DenseLayer> layers() noexcept { return layers_; }
  std::span<const DenseLayer> layers() const noexcept { return layers_; }

  friend bool operator==(const Mlp&, const Mlp&);

 private:
  std::vector<DenseLayer> layers_;
};

/// Intermediates of one forward pass over a minibatch.
struct ForwardTrace {
  /// inputs[k] is the input batch to layer k (inputs[0] is the network input).
  std::vector<Matrix> inputs;
  /// pre_activations[k] = inputs[k]·Wₖᵀ + bₖ; the last one holds the logits.
  std::vector<Matrix> pre_activations;

  const Matrix& logits() const { return pre_activations.back(); }
};

/// Gradients aligned with Mlp::layers().
struct LayerGrads {
  Matrix weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Matrix inputs;  // batch × input_dim
};

ForwardTrace forward(const Mlp& net, const Matrix& x);

/// Logits only, without keeping the trace.
Matrix predict_logits(const Mlp& net, const Matrix& x);

/// Reverse-mode gradients of Σᵢⱼ dlogits(i,j)·logits(i,j).
Gradients backward(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits);

/// Parameter gradients only; Gradients::inputs is left empty.
Gradients backward_params(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits);

/// Input gradients only; skips the parameter-gradient products.
Matrix backward_inputs(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Row-wise softmax of a logits batch.
Matrix softmax_rows(const Matrix& logits);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> dlogits;
};

/// KL(ref ‖ softmax(logits)); gradient w.r.t. logits is softmax(logits) − ref.
LossGrad kl_soft_loss(std::span<const double> ref_probs, std::span<const double> logits);

/// Weston–Watkins multi-class hinge Σ_{j≠y} max(0, 1 + z_j − z_y).
LossGrad hinge_hard_loss(std::size_t label, std::span<const double> logits);

/// He-normal weights N(0, 2/fan_in), zero biases. dims = {in, hidden..., classes}.
Mlp init_weights(std::span<const std::size_t> dims, std::uint64_t seed);

std::size_t argmax(std::span<const double> values);

/// Text checkpoint: header line, dims line, then every weight and bias in
/// shortest round-trip decimal form.
void save_checkpoint(const Mlp& net, std::ostream& out);
Mlp load_checkpoint(std::istream& in);
void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace imitation
