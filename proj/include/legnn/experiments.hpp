#ifndef LEGNN_EXPERIMENTS_HPP
#define LEGNN_EXPERIMENTS_HPP

#include <map>
#include <string>
#include <vector>

#include "legnn/metrics.hpp"
#include "legnn/training.hpp"

namespace legnn {

// Flat experiment description. Parsing is exhaustive: unknown keys are
// rejected and every default lands in the resolved record that gets written
// next to the results.
struct ExperimentConfig {
  std::string dataset;
  Method method = Method::legnn;
  BackboneConfig backbone;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::string& origin = "<config>");
  std::string resolved_json() const;  // full config incl. defaults, stable order
  void validate() const;
};

// When set, outputs land under $LEGNN_OUTPUT_ROOT/<output_dir>.
std::string resolve_output_dir(const ExperimentConfig& cfg);

struct SeedRunResult {
  std::uint64_t seed = 0;
  bool failed = false;   // training aborted; `error` holds the reason
  std::string error;
  double test_accuracy = 0.0;
  double test_macro_f1 = 0.0;
  double train_accuracy = 0.0;  // at the best-validation epoch
  double val_accuracy = 0.0;
  double gd_test = 0.0;  // graph difference of learned embeddings, test nodes
  double gd_all = 0.0;   // same over all labeled nodes
  std::vector<double> ld_test;  // per-class label difference on test nodes
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double wall_seconds = 0.0;  // only non-deterministic field
  std::vector<EpochRecord> history;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev; 0 for a single seed
};

struct RunResult {
  std::vector<SeedRunResult> per_seed;
  Aggregate test_accuracy;
  Aggregate test_macro_f1;
  Aggregate gd_test;
  Aggregate gd_all;
};

// Trains and evaluates one seed; no file output.
SeedRunResult run_seed(const Graph& g, const LabelFeatures& lf, Method method,
                       const BackboneConfig& bcfg, TrainConfig tcfg,
                       std::uint64_t seed);

// Full experiment: every seed, aggregation, and result.json / history.csv /
// plotdata/ under the resolved output directory.
RunResult run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  std::size_t s = 0;
  double homophily = 0.0;
  std::map<std::string, Aggregate> accuracy_by_method;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// One synthetic dataset per S (same generator seed, so edge sets nest),
// each method trained per seed on it. Writes sweep.csv and plotdata/.
SweepResult run_synthetic_sweep(const ExperimentConfig& cfg,
                                const std::vector<std::size_t>& s_values);

enum class AblationKind { tns, tc, ec, both };

AblationKind ablation_from_string(const std::string& s);
std::string to_string(AblationKind k);

struct AblationRow {
  std::string variant;
  Aggregate train_accuracy;
  Aggregate val_accuracy;
  Aggregate test_accuracy;
  Aggregate test_macro_f1;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // [0] = unablated reference, [1] = ablated
};

// tns: connect every labeled node and predict them all. tc/ec/both: drop the
// respective confidence factor from the gate and the loss (self-training is
// forced on for these). Writes ablation.csv.
AblationResult run_ablation(const ExperimentConfig& cfg, AblationKind kind);

enum class EmitFormat { json, csv, plotdata };

// Writes the run's files in one format under `dir`:
//   json     -> result.json
//   csv      -> history.csv
//   plotdata -> plotdata/*.tsv x/y series
void emit_results(const RunResult& result, const ExperimentConfig& cfg,
                  EmitFormat format, const std::string& dir);

}  // namespace legnn

#endif  // LEGNN_EXPERIMENTS_HPP
