#include "imitation/imitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

void ImitationConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("ImitationConfig." + field + ": " + why);
  };
  if (!(lambda1 >= 0.0)) fail("lambda1", "must be >= 0");
  if (!(lambda_bar2 > 0.0)) fail("lambda_bar2", "must be > 0");
  if (!(lambda_hat2 >= lambda_bar2)) fail("lambda_hat2", "must be >= lambda_bar2");
  if (!(pseudo_lr > 0.0)) fail("pseudo_lr", "must be > 0");
  if (!(target_lr > 0.0)) fail("target_lr", "must be > 0");
  if (steps == 0) fail("steps", "must be >= 1");
  if (epochs_per_step == 0) fail("epochs_per_step", "must be >= 1");
  if (batch_size == 0) fail("batch_size", "must be >= 1");
}

ImitationLoss imitation_loss_from_logits(const Matrix& labeled_logits,
                                         std::span<const std::size_t> labels,
                                         const Matrix& pseudo_logits, const Matrix& ref_probs,
                                         std::span<const double> weights, double lambda1) {
  if (labeled_logits.rows() != labels.size())
    throw DimensionError("imitation_loss: labeled logits/labels mismatch");
  if (pseudo_logits.rows() != ref_probs.rows() || pseudo_logits.rows() != weights.size())
    throw DimensionError("imitation_loss: pseudo logits/reference/weights mismatch");
  if (pseudo_logits.rows() > 0 && pseudo_logits.cols() != ref_probs.cols())
    throw DimensionError("imitation_loss: class count mismatch");

  ImitationLoss out;
  out.labeled_dlogits = Matrix(labeled_logits.rows(), labeled_logits.cols());
  out.pseudo_dlogits = Matrix(pseudo_logits.rows(), pseudo_logits.cols());

  const std::size_t n_l = labeled_logits.rows();
  if (n_l > 0) {
    const double scale = lambda1 / static_cast<double>(n_l);
    double sum = 0.0;
    for (std::size_t n = 0; n < n_l; ++n) {
      auto lg = hinge_hard_loss(labels[n], labeled_logits.row(n));
      sum += lg.loss;
      auto dst = out.labeled_dlogits.row(n);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = scale * lg.dlogits[c];
    }
    out.hard_term = sum / static_cast<double>(n_l);
  }

  const std::size_t n_p = pseudo_logits.rows();
  if (n_p > 0) {
    const double inv = 1.0 / static_cast<double>(n_p);
    double sum = 0.0;
    for (std::size_t n = 0; n < n_p; ++n) {
      auto lg = kl_soft_loss(ref_probs.row(n), pseudo_logits.row(n));
      sum += weights[n] * lg.loss;
      auto dst = out.pseudo_dlogits.row(n);
      const double scale = weights[n] * inv;
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = scale * lg.dlogits[c];
    }
    out.soft_term = sum * inv;
  }

  out.loss = lambda1 * out.hard_term + out.soft_term;
  if (!std::isfinite(out.loss)) throw NumericalError("imitation_loss: non-finite loss");
  return out;
}

namespace {

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw DimensionError("vstack: width mismatch");
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

Matrix top_rows(const Matrix& m, std::size_t begin, std::size_t count) {
  std::vector<double> data(m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                           m.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * m.cols()));
  return Matrix(count, m.cols(), std::move(data));
}

ImitationEval evaluate(const Mlp& net, const LabeledBatch& labeled, const PseudoBatch& pseudo,
                       double lambda1, bool input_grads) {
  const Matrix x = vstack(labeled.x, pseudo.x);
  ImitationEval out;
  if (x.rows() == 0) {
    out.grads.layers.resize(net.depth());
    for (std::size_t k = 0; k < net.depth(); ++k) {
      const auto& l = net.layers()[k];
      out.grads.layers[k] = {Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim())};
    }
    return out;
  }
  ForwardTrace trace = forward(net, x);
  const Matrix& logits = trace.logits();
  const std::size_t n_l = labeled.x.rows();
  out.loss = imitation_loss_from_logits(top_rows(logits, 0, n_l), labeled.labels,
                                        top_rows(logits, n_l, pseudo.x.rows()), pseudo.ref_probs,
                                        pseudo.weights, lambda1);
  const Matrix dlogits = vstack(out.loss.labeled_dlogits, out.loss.pseudo_dlogits);
  out.grads = input_grads ? backward(net, trace, dlogits) : backward_params(net, trace, dlogits);
  return out;
}

}  // namespace

ImitationEval imitation_loss(const Mlp& net, const LabeledBatch& labeled, const PseudoBatch& pseudo,
                             double lambda1) {
  return evaluate(net, labeled, pseudo, lambda1, true);
}

Matrix soft_loss_input_gradients(const Mlp& net, const Matrix& x, const Matrix& ref_probs) {
  if (x.rows() != ref_probs.rows()) throw DimensionError("soft_loss_input_gradients: row mismatch");
  ForwardTrace trace = forward(net, x);
  const Matrix& logits = trace.logits();
  Matrix dlogits(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto lg = kl_soft_loss(ref_probs.row(i), logits.row(i));
    std::copy(lg.dlogits.begin(), lg.dlogits.end(), dlogits.row(i).begin());
  }
  return backward_inputs(net, trace, dlogits);
}

void pseudo_update_pass(std::vector<PseudoExample>& next, const Mlp& net,
                        const GpEnsemble& reference, UpdateMode mode, double lr) {
  if (next.empty()) return;
  constexpr std::size_t kChunk = 256;
  const std::size_t classes = net.class_count();
  for (std::size_t begin = 0; begin < next.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, next.size() - begin);
    std::span<PseudoExample> chunk(next.data() + begin, count);
    Matrix x = stack_points(chunk);
    Matrix refs(count, classes);
    for (std::size_t i = 0; i < count; ++i)
      std::copy(chunk[i].ref_probs.begin(), chunk[i].ref_probs.end(), refs.row(i).begin());
    Matrix grads = soft_loss_input_gradients(net, x, refs);
    for (std::size_t i = 0; i < count; ++i) {
      auto g = grads.row(i);
      auto& p = chunk[i];
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (!std::isfinite(g[k])) {
          throw NumericalError("pseudo_update_pass: non-finite gradient at point " +
                               std::to_string(begin + i));
        }
      }
      if (mode == UpdateMode::gradient) {
        if (p.optimizer.m.size() != p.x.size()) p.optimizer = AdamState(p.x.size(), AdamHyper{lr});
        p.optimizer.hyper.lr = lr;
        ascend(p.optimizer, p.x, g);
      } else {
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (g[k] > 0.0) p.x[k] += lr;
          else if (g[k] < 0.0) p.x[k] -= lr;
        }
      }
    }
  }
  relabel(next, reference);
}

TargetOptimizer::TargetOptimizer(const Mlp& net, double lr) {
  AdamHyper hyper;
  hyper.lr = lr;
  for (const auto& l : net.layers()) {
    weight_states.emplace_back(l.weights.size(), hyper);
    bias_states.emplace_back(l.bias.size(), hyper);
  }
}

void TargetOptimizer::step(Mlp& net, const Gradients& grads) {
  auto layers = net.layers();
  if (grads.layers.size() != layers.size()) throw DimensionError("TargetOptimizer: depth mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    nadam_step(weight_states[k], layers[k].weights.data(), grads.layers[k].weights.data());
    nadam_step(bias_states[k], layers[k].bias, grads.layers[k].bias);
  }
}

double accuracy(const Mlp& net, const Dataset& test) {
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, test.size() - begin);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), begin);
    Matrix logits = predict_logits(net, test.features.gather_rows(idx));
    for (std::size_t i = 0; i < count; ++i)
      if (argmax(logits.row(i)) == test.labels[begin + i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

double accuracy(const GpEnsemble& reference, const Dataset& test) {
  if (test.empty()) return 0.0;
  std::size_t correct = 0;
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, test.size() - begin);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), begin);
    RefBatch refs = reference.predict_batch(test.features.gather_rows(idx));
    for (std::size_t i = 0; i < count; ++i)
      if (argmax(refs.probs.row(i)) == test.labels[begin + i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

void assign_weights(PseudoSets& sets, const ImitationConfig& cfg, double& sigma_bar) {
  std::vector<double> sigmas;
  sigmas.reserve(sets.current.size());
  for (const auto& p : sets.current) sigmas.push_back(p.sigma);
  sigma_bar = sigmas.empty() ? 0.0
                             : std::accumulate(sigmas.begin(), sigmas.end(), 0.0) /
                                   static_cast<double>(sigmas.size());
  if (cfg.fidelity_enabled) {
    auto w = fidelity_weights(sigmas, cfg.lambda_hat2, cfg.lambda_bar2);
    for (std::size_t i = 0; i < w.size(); ++i) sets.current[i].weight = w[i];
  } else {
    for (auto& p : sets.current) p.weight = cfg.lambda_bar2;
  }
}

}  // namespace

TrainResult train(const Dataset& labeled, const GpEnsemble* reference, Mlp net,
                  const ImitationConfig& cfg, const Matrix& initial_pseudo, const Dataset* test,
                  const StepObserver& observer) {
  cfg.validate();
  if (!labeled.empty() && labeled.dim() != net.input_dim())
    throw DimensionError("train: labeled width does not match network input");
  if (initial_pseudo.rows() > 0) {
    if (reference == nullptr) throw ConfigError("train: pseudo examples need a reference model");
    if (initial_pseudo.cols() != net.input_dim())
      throw DimensionError("train: pseudo width does not match network input");
    if (reference->class_count() != net.class_count())
      throw DimensionError("train: reference and target class counts differ");
  }
  if (labeled.empty() && initial_pseudo.rows() == 0)
    throw DataError("train: nothing to train on");

  AdamHyper pseudo_hyper;
  pseudo_hyper.lr = cfg.pseudo_lr;
  PseudoSets sets;
  if (initial_pseudo.rows() > 0) sets = make_pseudo_sets(initial_pseudo, *reference, pseudo_hyper);

  TargetOptimizer optimizer(net, cfg.target_lr);
  std::mt19937_64 rng(cfg.seed);
  TrainReport report;
  const std::size_t classes = net.class_count();

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    double sigma_bar = 0.0;
    assign_weights(sets, cfg, sigma_bar);
    report.sigma_bar.push_back(sigma_bar);
    report.current_sizes.push_back(sets.current.size());
    if (observer) observer(step, sets);

    std::vector<std::size_t> order(sets.current.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t n_batches =
        sets.current.empty() ? 1 : (sets.current.size() + cfg.batch_size - 1) / cfg.batch_size;

    for (std::size_t epoch = 0; epoch < cfg.epochs_per_step; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double hard_sum = 0.0;
      double soft_sum = 0.0;
      for (std::size_t b = 0; b < n_batches; ++b) {
        const std::size_t begin = b * cfg.batch_size;
        const std::size_t count =
            sets.current.empty() ? 0 : std::min(cfg.batch_size, sets.current.size() - begin);
        Matrix px(count, net.input_dim());
        Matrix refs(count, classes);
        std::vector<double> weights(count);
        for (std::size_t i = 0; i < count; ++i) {
          const auto& p = sets.current[order[begin + i]];
          std::copy(p.x.begin(), p.x.end(), px.row(i).begin());
          std::copy(p.ref_probs.begin(), p.ref_probs.end(), refs.row(i).begin());
          weights[i] = p.weight;
        }
        ImitationEval ev;
        try {
          ev = evaluate(net, {labeled.features, labeled.labels}, {px, refs, weights}, cfg.lambda1,
                        false);
        } catch (const NumericalError& e) {
          std::ostringstream msg;
          msg << "train: step " << step << " epoch " << epoch << ": " << e.what();
          throw NumericalError(msg.str());
        }
        hard_sum += ev.loss.hard_term;
        soft_sum += ev.loss.soft_term;
        optimizer.step(net, ev.grads);
      }

      if (cfg.pseudo_optimize_enabled && !sets.next.empty()) {
        pseudo_update_pass(sets.next, net, *reference, cfg.update_mode, cfg.pseudo_lr);
      }

      EpochRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.hard_loss = hard_sum / static_cast<double>(n_batches);
      rec.soft_loss = soft_sum / static_cast<double>(n_batches);
      rec.current_size = sets.current.size();
      if (!std::isfinite(rec.hard_loss) || !std::isfinite(rec.soft_loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at step " << step << " epoch " << epoch;
        throw NumericalError(msg.str());
      }
      const bool last_epoch = epoch + 1 == cfg.epochs_per_step;
      if (test != nullptr && (cfg.eval_every_epoch || last_epoch))
        rec.test_accuracy = accuracy(net, *test);
      report.epochs.push_back(rec);
    }

    if (step + 1 < cfg.steps && sets.n0 > 0) sets = merge_and_advance(std::move(sets));
  }
  return {std::move(net), std::move(report), std::move(sets)};
}

namespace {

void put(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  out << buf;
}

}  // namespace

void write_report_csv(const TrainReport& report, std::ostream& out) {
  out << "step,epoch,hard_loss,soft_loss,current_size,test_accuracy\n";
  for (const auto& r : report.epochs) {
    out << r.step << ',' << r.epoch << ',';
    put(out, r.hard_loss);
    out << ',';
    put(out, r.soft_loss);
    out << ',' << r.current_size << ',';
    if (r.test_accuracy) put(out, *r.test_accuracy);
    out << '\n';
  }
}

void write_pseudo_snapshot_csv(std::size_t step, const Matrix& coords,
                               std::span<const PseudoExample> examples, std::ostream& out) {
  if (coords.rows() != examples.size())
    throw DimensionError("write_pseudo_snapshot_csv: coordinate rows != examples");
  out << "step,index";
  if (coords.cols() == 2) {
    out << ",x,y";
  } else {
    for (std::size_t k = 0; k < coords.cols(); ++k) out << ",x" << k;
  }
  out << ",ref_argmax,sigma,weight\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out << step << ',' << i;
    for (double v : coords.row(i)) {
      out << ',';
      put(out, v);
    }
    out << ',' << argmax(examples[i].ref_probs) << ',';
    put(out, examples[i].sigma);
    out << ',';
    put(out, examples[i].weight);
    out << '\n';
  }
}

}  // namespace imitation
