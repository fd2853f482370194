#ifndef LEGNN_METRICS_HPP
#define LEGNN_METRICS_HPP

#include <optional>
#include <vector>

#include "legnn/tensor.hpp"
#include "legnn/training.hpp"

namespace legnn {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  double graph_difference = 0.0;                 // filled by callers that have embeddings
  std::vector<double> label_difference;          // LD_c per class, NaN for empty classes
  std::optional<double> pseudo_accuracy;
};

double accuracy(const std::vector<std::size_t>& predicted,
                const std::vector<std::size_t>& truth);

// Unweighted mean over all C classes of F1 = 2PR/(P+R); a class with
// P + R == 0 contributes 0.
double macro_f1(const std::vector<std::size_t>& predicted,
                const std::vector<std::size_t>& truth, std::size_t num_classes);

EvalReport evaluate(const std::vector<std::size_t>& predicted,
                    const std::vector<std::size_t>& truth, std::size_t num_classes);

// Mean L2 distance of the member rows of z to their centroid.
double label_difference(const Tensor& z, const std::vector<std::size_t>& members);

// Mean of LD_c over classes with at least one member among `nodes`;
// membership read from the one-hot rows of y.
double graph_difference(const Tensor& z, const Tensor& y,
                        const std::vector<std::size_t>& nodes);

struct PseudoAccuracyReport {
  double overall = 0.0;
  std::vector<std::size_t> bucket_total;            // 10 deciles of p_i
  std::vector<std::optional<double>> bucket_accuracy;
};

// Accuracy of pseudo labels against known ground truth, overall and per
// confidence decile. Absent when U' is empty.
std::optional<PseudoAccuracyReport> pseudo_label_accuracy(
    const PseudoState& pseudo, const Graph& g);

}  // namespace legnn

#endif  // LEGNN_METRICS_HPP
