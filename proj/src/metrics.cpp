#include "legnn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "legnn/errors.hpp"

namespace legnn {

double accuracy(const std::vector<std::size_t>& predicted,
                const std::vector<std::size_t>& truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw ContractError("accuracy: inputs must be nonempty and equal-length");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

namespace {

std::vector<ClassScores> per_class_scores(const std::vector<std::size_t>& predicted,
                                          const std::vector<std::size_t>& truth,
                                          std::size_t num_classes) {
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= num_classes || truth[i] >= num_classes) {
      throw ContractError("macro_f1: label outside [0, C)");
    }
    if (predicted[i] == truth[i]) {
      tp[truth[i]]++;
    } else {
      fp[predicted[i]]++;
      fn[truth[i]]++;
    }
  }
  std::vector<ClassScores> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double denom_p = static_cast<double>(tp[c] + fp[c]);
    const double denom_r = static_cast<double>(tp[c] + fn[c]);
    out[c].precision = denom_p > 0.0 ? tp[c] / denom_p : 0.0;
    out[c].recall = denom_r > 0.0 ? tp[c] / denom_r : 0.0;
    // 2PR/(P+R) in integer-count form; a class with P + R == 0 scores 0
    const double denom_f = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    out[c].f1 = denom_f > 0.0 ? 2.0 * static_cast<double>(tp[c]) / denom_f : 0.0;
  }
  return out;
}

}  // namespace

double macro_f1(const std::vector<std::size_t>& predicted,
                const std::vector<std::size_t>& truth, std::size_t num_classes) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw ContractError("macro_f1: inputs must be nonempty and equal-length");
  }
  if (num_classes == 0) throw ContractError("macro_f1: need at least one class");
  const auto scores = per_class_scores(predicted, truth, num_classes);
  double total = 0.0;
  for (const ClassScores& s : scores) total += s.f1;
  return total / static_cast<double>(num_classes);
}

EvalReport evaluate(const std::vector<std::size_t>& predicted,
                    const std::vector<std::size_t>& truth,
                    std::size_t num_classes) {
  EvalReport report;
  report.accuracy = accuracy(predicted, truth);
  report.per_class = per_class_scores(predicted, truth, num_classes);
  double total = 0.0;
  for (const ClassScores& s : report.per_class) total += s.f1;
  report.macro_f1 = total / static_cast<double>(num_classes);
  return report;
}

double label_difference(const Tensor& z, const std::vector<std::size_t>& members) {
  if (members.empty()) {
    throw ContractError("label_difference: class has no members");
  }
  const std::size_t d = z.cols();
  std::vector<double> centroid(d, 0.0);
  for (std::size_t v : members) {
    const auto row = z.values().subspan(v * d, d);
    for (std::size_t j = 0; j < d; ++j) centroid[j] += row[j];
  }
  for (double& x : centroid) x /= static_cast<double>(members.size());
  double total = 0.0;
  for (std::size_t v : members) {
    const auto row = z.values().subspan(v * d, d);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - centroid[j];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(members.size());
}

double graph_difference(const Tensor& z, const Tensor& y,
                        const std::vector<std::size_t>& nodes) {
  const std::size_t num_classes = y.cols();
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t v : nodes) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (y.at(v, c) == 1.0) {
        members[c].push_back(v);
        break;
      }
    }
  }
  double total = 0.0;
  std::size_t populated = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (members[c].empty()) continue;  // empty classes are skipped, not zeroed
    total += label_difference(z, members[c]);
    ++populated;
  }
  if (populated == 0) {
    throw ContractError("graph_difference: no labeled nodes");
  }
  return total / static_cast<double>(populated);
}

std::optional<PseudoAccuracyReport> pseudo_label_accuracy(
    const PseudoState& pseudo, const Graph& g) {
  if (pseudo.empty()) return std::nullopt;
  PseudoAccuracyReport report;
  report.bucket_total.assign(10, 0);
  std::vector<std::size_t> bucket_known(10, 0), bucket_hit(10, 0);
  std::size_t known = 0, hit = 0;
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const double p = pseudo.confidence[i];
    const std::size_t bucket =
        std::min<std::size_t>(9, static_cast<std::size_t>(p * 10.0));
    report.bucket_total[bucket]++;
    const int truth = g.label_of(pseudo.nodes[i]);
    if (truth < 0) continue;
    ++known;
    bucket_known[bucket]++;
    if (static_cast<std::size_t>(truth) == pseudo.labels[i]) {
      ++hit;
      bucket_hit[bucket]++;
    }
  }
  report.overall = known > 0
                       ? static_cast<double>(hit) / static_cast<double>(known)
                       : 0.0;
  report.bucket_accuracy.assign(10, std::nullopt);
  for (std::size_t b = 0; b < 10; ++b) {
    if (bucket_known[b] > 0) {
      report.bucket_accuracy[b] = static_cast<double>(bucket_hit[b]) /
                                  static_cast<double>(bucket_known[b]);
    }
  }
  return report;
}

}  // namespace legnn
