#include "legnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace legnn {

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ContractError("train config: alpha must be in (0, 1)");
  }
  if (!(delta > 0.0)) throw ContractError("train config: delta must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError("train config: threshold must be in (0, 1)");
  }
  if (lambda < 0.0) throw ContractError("train config: lambda must be >= 0");
  if (!(learning_rate > 0.0)) {
    throw ContractError("train config: learning_rate must be > 0");
  }
  if (lr_min < 0.0 || lr_min > learning_rate) {
    throw ContractError("train config: lr_min must be in [0, learning_rate]");
  }
  if (max_epochs == 0) throw ContractError("train config: max_epochs must be >= 1");
}

SplitResult select_training_nodes(const std::vector<std::size_t>& labeled,
                                  double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ContractError("select_training_nodes: alpha must be in (0, 1)");
  }
  if (labeled.size() < 2) {
    throw ContractError("select_training_nodes: need at least two labeled nodes");
  }
  const std::size_t take = static_cast<std::size_t>(
      std::floor(alpha * static_cast<double>(labeled.size())));
  if (take == 0 || take == labeled.size()) {
    std::ostringstream os;
    os << "select_training_nodes: degenerate split, floor(alpha*|L|) = " << take
       << " of " << labeled.size();
    throw ContractError(os.str());
  }
  std::vector<std::size_t> pool(labeled);
  rng.shuffle(pool);
  SplitResult out;
  out.targets.assign(pool.begin(), pool.begin() + take);
  out.connected.assign(pool.begin() + take, pool.end());
  std::sort(out.targets.begin(), out.targets.end());
  std::sort(out.connected.begin(), out.connected.end());
  return out;
}

double training_confidence(std::size_t epoch, double delta) {
  if (epoch < 1) throw ContractError("training_confidence: epoch counts from 1");
  if (!(delta > 0.0)) throw ContractError("training_confidence: delta must be > 0");
  // sigmoid(log x) = x / (1 + x), exact at the closed-form points
  const double x = static_cast<double>(epoch) / delta;
  return x / (1.0 + x);
}

PseudoState gate_pseudo_labels(const Tensor& probs,
                               const std::vector<std::size_t>& unlabeled,
                               double tc, double threshold) {
  PseudoState state;
  state.tc = tc;
  for (std::size_t node : unlabeled) {
    const auto row = probs.values().subspan(node * probs.cols(), probs.cols());
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;  // ties keep the lowest class index
    }
    const double p = row[best];
    if (p * tc > threshold) {
      state.nodes.push_back(node);
      state.labels.push_back(best);
      state.confidence.push_back(p);
    }
  }
  return state;
}

double cross_entropy(std::span<const double> y_onehot, std::span<const double> p) {
  if (y_onehot.size() != p.size()) {
    throw DimensionError("cross_entropy: row lengths differ");
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (y_onehot[c] != 0.0) {
      loss -= y_onehot[c] * std::log(std::max(p[c], 1e-12));
    }
  }
  return loss;
}

Tensor composite_loss(const std::vector<std::size_t>& targets, const Tensor& probs,
                      const Tensor& y, const PseudoState& pseudo, double lambda) {
  if (targets.empty()) {
    throw ContractError("composite_loss: target set must be nonempty");
  }
  if (y.rows() != probs.rows() || y.cols() != probs.cols()) {
    throw DimensionError("composite_loss: probs and labels differ in shape");
  }
  Tensor weights(probs.rows(), probs.cols());
  const double w_sup = 1.0 / static_cast<double>(targets.size());
  for (std::size_t node : targets) {
    bool labeled = false;
    for (std::size_t c = 0; c < y.cols(); ++c) {
      if (y.at(node, c) == 1.0) {
        weights.set(node, c, weights.at(node, c) + w_sup);
        labeled = true;
        break;
      }
    }
    if (!labeled) {
      throw ContractError("composite_loss: target node has no label");
    }
  }
  if (!pseudo.empty() && lambda > 0.0) {
    const double w_pseudo =
        lambda * pseudo.tc / static_cast<double>(pseudo.size());
    for (std::size_t i = 0; i < pseudo.size(); ++i) {
      const std::size_t node = pseudo.nodes[i];
      const std::size_t cls = pseudo.labels[i];
      weights.set(node, cls,
                  weights.at(node, cls) + w_pseudo * pseudo.confidence[i]);
    }
  }
  return scale(sum_all(elementwise_mul(log_clamped(probs), weights)), -1.0);
}

void adam_step(std::vector<Tensor>& params, const GradientMap& grads,
               AdamState& state, double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Tensor& p : params) {
    const Tensor g = grads.get(p);
    if (!g.all_finite()) {
      std::ostringstream os;
      os << "adam_step: non-finite gradient for parameter id " << p.id() << " ("
         << p.rows() << "x" << p.cols() << ") at step " << state.step;
      throw ContractError(os.str());
    }
    auto it = state.moments.find(p.id());
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(p.id(), std::make_pair(Tensor(p.rows(), p.cols()),
                                               Tensor(p.rows(), p.cols())))
               .first;
    }
    auto m = it->second.first.values_mut();
    auto v = it->second.second.values_mut();
    auto pv = p.values_mut();
    auto gv = g.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gv[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gv[i] * gv[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      pv[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double cosine_lr(std::size_t epoch, std::size_t max_epochs, double lr_max,
                 double lr_min) {
  if (epoch > max_epochs) {
    throw ContractError("cosine_lr: epoch must be <= max_epochs");
  }
  const double phase = 3.14159265358979323846 * static_cast<double>(epoch) /
                       static_cast<double>(max_epochs);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

std::vector<std::size_t> argmax_rows(const Tensor& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.values().subspan(r * probs.cols(), probs.cols());
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[r] = best;
  }
  return out;
}

namespace {

double accuracy_on(const Tensor& probs, const Graph& g,
                   const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t node : nodes) {
    const auto row = probs.values().subspan(node * probs.cols(), probs.cols());
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    if (static_cast<int>(best) == g.label_of(node)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

std::vector<std::size_t> unlabeled_set(const Graph& g) {
  // U = V \ L where L is the labeled training split
  std::vector<std::size_t> out;
  out.reserve(g.num_nodes - g.train_nodes.size());
  std::size_t cursor = 0;
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    while (cursor < g.train_nodes.size() && g.train_nodes[cursor] < v) ++cursor;
    if (cursor < g.train_nodes.size() && g.train_nodes[cursor] == v) continue;
    out.push_back(v);
  }
  return out;
}

std::optional<double> pseudo_accuracy_vs_truth(const PseudoState& pseudo,
                                               const Graph& g) {
  if (pseudo.empty()) return std::nullopt;
  std::size_t known = 0, hit = 0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const int truth = g.label_of(pseudo.nodes[i]);
    if (truth < 0) continue;
    ++known;
    if (static_cast<std::size_t>(truth) == pseudo.labels[i]) ++hit;
  }
  if (known == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(known);
}

}  // namespace

TrainResult train(const Graph& g, const LabelFeatures& lf, Method method,
                  const BackboneConfig& bcfg, const TrainConfig& tcfg) {
  bcfg.validate();
  tcfg.validate();
  if (g.valid_nodes.empty()) {
    throw ContractError("train: validation split must be nonempty");
  }
  const std::vector<std::size_t>& labeled = g.train_nodes;
  if (labeled.size() < 2) {
    throw ContractError("train: need at least two labeled training nodes");
  }
  for (std::size_t v : labeled) {
    if (!g.is_labeled(v)) {
      throw ContractError("train: training split contains an unlabeled node");
    }
  }
  const std::vector<std::size_t> unlabeled = unlabeled_set(g);

  const std::size_t node_in_dim =
      method == Method::concat ? g.feature_dim + g.num_classes : g.feature_dim;
  Rng init_rng(Rng::mix(tcfg.seed, 0));
  Rng split_rng(Rng::mix(tcfg.seed, 1));
  Rng dropout_rng(Rng::mix(tcfg.seed, 2));
  ModelParams params =
      ModelParams::init(node_in_dim, lf.features.cols(), g.feature_dim,
                        g.num_classes, bcfg, init_rng);
  std::vector<Tensor> param_tensors = params.all_tensors();
  AdamState adam;

  TrainResult result;
  result.best_val_accuracy = -1.0;
  std::size_t epochs_since_best = 0;

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const double lr =
        cosine_lr(epoch - 1, tcfg.max_epochs, tcfg.learning_rate, tcfg.lr_min);

    std::vector<std::size_t> targets, visible;
    if (tcfg.disable_tns) {
      targets = labeled;
      visible = labeled;
    } else {
      SplitResult split = select_training_nodes(labeled, tcfg.alpha, split_rng);
      targets = std::move(split.targets);
      visible = std::move(split.connected);
      // leakage guard: no node may be predicted and label-connected at once
      for (std::size_t i = 0, j = 0; i < targets.size() && j < visible.size();) {
        if (targets[i] == visible[j]) {
          throw ContractError("train: target node also label-connected");
        }
        targets[i] < visible[j] ? ++i : ++j;
      }
    }

    const double tc =
        tcfg.ablate_tc ? 1.0 : training_confidence(epoch, tcfg.delta);

    Tape tape;
    double loss_value = 0.0;
    double train_acc = 0.0;
    PseudoState pseudo;
    {
      Tape::Scope scope(tape);
      ForwardContext ctx;
      ctx.mode = Mode::train;
      ctx.dropout_rng = &dropout_rng;
      ctx.sample_seed = Rng::mix(Rng::mix(tcfg.seed, 3), epoch);
      ForwardResult fwd =
          run_method_forward(g, lf, method, visible, params, bcfg, ctx);

      if (tcfg.self_training) {
        pseudo = gate_pseudo_labels(fwd.probs, unlabeled, tc, tcfg.threshold);
        if (tcfg.ablate_ec) {
          std::fill(pseudo.confidence.begin(), pseudo.confidence.end(), 1.0);
        }
      }
      pseudo.tc = tc;

      Tensor loss = composite_loss(targets, fwd.probs, g.labels_onehot, pseudo,
                                   tcfg.lambda);
      loss_value = loss.at(0, 0);
      if (!std::isfinite(loss_value)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch;
        throw ContractError(os.str());
      }
      train_acc = accuracy_on(fwd.probs, g, targets);

      GradientMap grads = tape.backward(loss);
      adam_step(param_tensors, grads, adam, lr);
    }

    Tensor val_probs = infer(g, lf, method, params, bcfg);
    const double val_acc = accuracy_on(val_probs, g, g.valid_nodes);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss = loss_value;
    rec.train_accuracy = train_acc;
    rec.val_accuracy = val_acc;
    rec.pseudo_count = pseudo.size();
    rec.tc = tc;
    rec.pseudo_accuracy = pseudo_accuracy_vs_truth(pseudo, g);
    result.history.push_back(rec);

    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.params = params.clone();
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= tcfg.patience) break;
    }
  }
  return result;
}

Tensor infer(const Graph& g, const LabelFeatures& lf, Method method,
             const ModelParams& params, const BackboneConfig& bcfg) {
  ForwardContext ctx;
  ctx.mode = Mode::eval;
  ForwardResult fwd =
      run_method_forward(g, lf, method, g.train_nodes, params, bcfg, ctx);
  return fwd.probs;
}

}  // namespace legnn
