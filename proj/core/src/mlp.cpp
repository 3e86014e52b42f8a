#include "imitation/mlp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("Mlp: no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.bias.size() != l.out_dim()) throw DimensionError("Mlp: bias length mismatch");
    if (k > 0 && l.in_dim() != layers_[k - 1].out_dim())
      throw DimensionError("Mlp: layer " + std::to_string(k) + " input width does not conform");
  }
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> d{layers_.front().in_dim()};
  for (const auto& l : layers_) d.push_back(l.out_dim());
  return d;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    if (!(a.layers_[k].weights == b.layers_[k].weights)) return false;
    if (a.layers_[k].bias != b.layers_[k].bias) return false;
  }
  return true;
}

namespace {

Matrix affine(const DenseLayer& layer, const Matrix& x) {
  Matrix z = matmul_nt(x, layer.weights);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
  }
  return z;
}

Matrix relu(const Matrix& z) {
  Matrix a = z;
  for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
  return a;
}

void check_input(const Mlp& net, const Matrix& x) {
  if (x.cols() != net.input_dim()) {
    throw DimensionError("forward: input width " + std::to_string(x.cols()) +
                         " != network input " + std::to_string(net.input_dim()));
  }
}

}  // namespace

ForwardTrace forward(const Mlp& net, const Matrix& x) {
  check_input(net, x);
  ForwardTrace trace;
  const auto layers = net.layers();
  trace.inputs.reserve(layers.size());
  trace.pre_activations.reserve(layers.size());
  trace.inputs.push_back(x);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    trace.pre_activations.push_back(affine(layers[k], trace.inputs.back()));
    if (k + 1 < layers.size()) trace.inputs.push_back(relu(trace.pre_activations.back()));
  }
  if (!trace.logits().all_finite()) throw NumericalError("forward: non-finite activation");
  return trace;
}

Matrix predict_logits(const Mlp& net, const Matrix& x) {
  check_input(net, x);
  const auto layers = net.layers();
  Matrix h = affine(layers[0], x);
  for (std::size_t k = 1; k < layers.size(); ++k) h = affine(layers[k], relu(h));
  if (!h.all_finite()) throw NumericalError("forward: non-finite activation");
  return h;
}

namespace {

Gradients backward_impl(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits,
                        bool param_grads, bool input_grads) {
  const auto layers = net.layers();
  if (trace.inputs.size() != layers.size() || trace.pre_activations.size() != layers.size())
    throw DimensionError("backward: trace depth does not match network");
  if (dlogits.rows() != trace.logits().rows() || dlogits.cols() != net.class_count())
    throw DimensionError("backward: dlogits shape does not match logits");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (trace.inputs[k].cols() != layers[k].in_dim())
      throw DimensionError("backward: trace does not belong to this network");
  }

  Gradients grads;
  grads.layers.resize(layers.size());
  Matrix delta = dlogits;
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (param_grads) {
      auto& g = grads.layers[k];
      g.weights = matmul_tn(delta, trace.inputs[k]);
      g.bias.assign(layers[k].out_dim(), 0.0);
      for (std::size_t i = 0; i < delta.rows(); ++i) {
        auto r = delta.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) g.bias[j] += r[j];
      }
    }
    if (k == 0) {
      if (input_grads) grads.inputs = matmul(delta, layers[k].weights);
    } else {
      Matrix upstream = matmul(delta, layers[k].weights);
      const Matrix& z = trace.pre_activations[k - 1];
      auto u = upstream.data();
      auto zd = z.data();
      for (std::size_t i = 0; i < u.size(); ++i)
        if (!(zd[i] > 0.0)) u[i] = 0.0;
      delta = std::move(upstream);
    }
  }
  return grads;
}

}  // namespace

Gradients backward(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits) {
  return backward_impl(net, trace, dlogits, true, true);
}

Gradients backward_params(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits) {
  return backward_impl(net, trace, dlogits, true, false);
}

Matrix backward_inputs(const Mlp& net, const ForwardTrace& trace, const Matrix& dlogits) {
  return backward_impl(net, trace, dlogits, false, true).inputs;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto p = softmax(logits.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

LossGrad kl_soft_loss(std::span<const double> ref_probs, std::span<const double> logits) {
  if (ref_probs.size() != logits.size())
    throw DimensionError("kl_soft_loss: reference and logits lengths differ");
  double total = 0.0;
  for (double g : ref_probs) total += g;
  if (std::abs(total - 1.0) > 1e-6) {
    throw NumericalError("kl_soft_loss: reference probabilities sum to " + std::to_string(total));
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double log_norm = mx + std::log(sum);

  LossGrad out;
  out.dlogits.resize(logits.size());
  double loss = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double log_f = logits[c] - log_norm;
    const double g = ref_probs[c];
    if (g > 0.0) loss += g * (std::log(g) - log_f);
    out.dlogits[c] = std::exp(log_f) - g;
  }
  // Rounding can leave a tiny negative value when g == f.
  out.loss = std::max(loss, 0.0);
  return out;
}

LossGrad hinge_hard_loss(std::size_t label, std::span<const double> logits) {
  if (label >= logits.size()) {
    throw DimensionError("hinge_hard_loss: label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
  }
  LossGrad out;
  out.dlogits.assign(logits.size(), 0.0);
  const double zy = logits[label];
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j == label) continue;
    const double margin = 1.0 + logits[j] - zy;
    if (margin > 0.0) {
      out.loss += margin;
      out.dlogits[j] += 1.0;
      out.dlogits[label] -= 1.0;
    }
  }
  return out;
}

Mlp init_weights(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw DimensionError("init_weights: need at least input and output dims");
  for (auto d : dims)
    if (d == 0) throw DimensionError("init_weights: zero-width layer");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t in = dims[k];
    const std::size_t out = dims[k + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : layer.weights.data()) w = dist(rng);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

namespace {

constexpr const char* kCheckpointMagic = "imitation-mlp";
constexpr int kCheckpointVersion = 1;

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

double read_double(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw DataError("checkpoint: truncated");
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw DataError("checkpoint: bad number '" + tok + "'");
  return v;
}

}  // namespace

void save_checkpoint(const Mlp& net, std::ostream& out) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  const auto dims = net.dims();
  out << dims.size();
  for (auto d : dims) out << ' ' << d;
  out << '\n';
  for (const auto& layer : net.layers()) {
    for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
      auto row = layer.weights.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        write_double(out, row[c]);
      }
      out << '\n';
    }
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
      if (j) out << ' ';
      write_double(out, layer.bias[j]);
    }
    out << '\n';
  }
  if (!out) throw DataError("checkpoint: write failed");
}

Mlp load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic)
    throw DataError("checkpoint: missing header");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  std::size_t n = 0;
  if (!(in >> n) || n < 2 || n > 1024) throw DataError("checkpoint: bad layer count");
  std::vector<std::size_t> dims(n);
  for (auto& d : dims)
    if (!(in >> d) || d == 0) throw DataError("checkpoint: bad dims");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    DenseLayer layer{Matrix(dims[k + 1], dims[k]), std::vector<double>(dims[k + 1])};
    for (double& w : layer.weights.data()) w = read_double(in);
    for (double& b : layer.bias) b = read_double(in);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot open " + path.string());
  save_checkpoint(net, out);
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace imitation
