#ifndef LEGNN_TRAINING_HPP
#define LEGNN_TRAINING_HPP

#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "legnn/backbones.hpp"
#include "legnn/graph.hpp"
#include "legnn/tape.hpp"

namespace legnn {

struct TrainConfig {
  double alpha = 0.5;        // selection rate, in (0, 1)
  double delta = 10.0;       // confidence scale factor, > 0
  double threshold = 0.7;    // pseudo gate t, in (0, 1)
  double lambda = 0.5;       // pseudo loss weight, >= 0
  double learning_rate = 0.01;
  double lr_min = 0.0;
  std::size_t max_epochs = 300;
  std::size_t patience = 50;
  std::uint64_t seed = 1;
  bool self_training = false;

  // Ablation switches. disable_tns connects every labeled node and predicts
  // all of them; ablate_tc / ablate_ec force the respective confidence
  // factor to 1 in both the gate and the loss.
  bool disable_tns = false;
  bool ablate_tc = false;
  bool ablate_ec = false;

  void validate() const;
};

// Per-epoch pseudo-labeling outcome: members of U' with their assigned
// classes and evaluating confidences, plus the epoch's training confidence.
struct PseudoState {
  std::vector<std::size_t> nodes;   // sorted
  std::vector<std::size_t> labels;
  std::vector<double> confidence;   // EC_i, each in (t, 1]
  double tc = 0.0;

  bool empty() const { return nodes.empty(); }
  std::size_t size() const { return nodes.size(); }
};

struct SplitResult {
  std::vector<std::size_t> targets;    // prediction targets, |targets| = floor(alpha*|L|)
  std::vector<std::size_t> connected;  // the rest; gets label edges
};

// Random partition of the labeled set; no node lands in both halves.
SplitResult select_training_nodes(const std::vector<std::size_t>& labeled,
                                  double alpha, Rng& rng);

// sigmoid(log(e / delta)) = (e/delta) / (1 + e/delta); epochs count from 1.
double training_confidence(std::size_t epoch, double delta);

// Selects unlabeled nodes whose top predicted probability p satisfies
// p * tc > threshold; assigns the argmax class (lowest index on ties) and
// EC = p. Recomputed from scratch each call.
PseudoState gate_pseudo_labels(const Tensor& probs,
                               const std::vector<std::size_t>& unlabeled,
                               double tc, double threshold);

// -sum_c y_c log(max(p_c, 1e-12)).
double cross_entropy(std::span<const double> y_onehot, std::span<const double> p);

// Mean supervised cross-entropy over the targets plus the confidence-weighted
// pseudo term: (lambda * TC / |U'|) * sum EC_i * CE_i. The confidences enter
// as constants. Recorded on the active tape through `probs`.
Tensor composite_loss(const std::vector<std::size_t>& targets, const Tensor& probs,
                      const Tensor& y, const PseudoState& pseudo, double lambda);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::unordered_map<std::size_t, std::pair<Tensor, Tensor>> moments;  // by param id
};

// One bias-corrected Adam update in place. Throws on non-finite gradients.
void adam_step(std::vector<Tensor>& params, const GradientMap& grads,
               AdamState& state, double lr);

double cosine_lr(std::size_t epoch, std::size_t max_epochs, double lr_max,
                 double lr_min);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double train_accuracy = 0.0;  // on the epoch's prediction targets
  double val_accuracy = 0.0;
  std::size_t pseudo_count = 0;
  double tc = 0.0;
  std::optional<double> pseudo_accuracy;  // vs known ground truth, absent when U' empty
};

struct TrainResult {
  ModelParams params;  // snapshot with the best validation accuracy
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

// Full training loop: per-epoch training-node selection, forward in train
// mode, optional pseudo-label gating, composite loss, backward + Adam with
// cosine-annealed lr, validation on the inference-mode graph, early stopping.
TrainResult train(const Graph& g, const LabelFeatures& lf, Method method,
                  const BackboneConfig& bcfg, const TrainConfig& tcfg);

// Eval-mode forward with every labeled training node connected (or visible,
// for the feature-augmented baselines). Returns probs, M x C.
Tensor infer(const Graph& g, const LabelFeatures& lf, Method method,
             const ModelParams& params, const BackboneConfig& bcfg);

std::vector<std::size_t> argmax_rows(const Tensor& probs);

}  // namespace legnn

#endif  // LEGNN_TRAINING_HPP
