// Experiment runner: train / sweep / ablate / homophily / gen-synthetic.
// Every failure path exits nonzero after printing one machine-parsable
// `error: <CODE>: message` line on stderr.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "legnn/experiments.hpp"

namespace {

std::vector<std::size_t> parse_s_values(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      const long long v = std::stoll(token);
      if (v < 0) throw std::invalid_argument("negative");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw legnn::UsageError("--s-values: expected comma-separated counts, got '" +
                              token + "'");
    }
  }
  if (out.empty()) throw legnn::UsageError("--s-values: list is empty");
  return out;
}

void print_aggregate(const std::string& name, const legnn::Aggregate& a) {
  std::cout << name << ": " << a.mean << " +/- " << a.stddev << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Label-enhanced GNN training engine"};
  app.require_subcommand(1);

  std::string config_path, dataset_dir, out_dir, ablation_kind, s_values_csv;
  std::size_t synth_edges = 0;
  std::uint64_t synth_seed = 1;

  CLI::App* cmd_train = app.add_subcommand("train", "Run one experiment config");
  cmd_train->add_option("--config", config_path, "JSON config file")->required();

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Synthetic cross-label-edge sweep");
  cmd_sweep->add_option("--config", config_path, "JSON config file")->required();
  cmd_sweep->add_option("--s-values", s_values_csv, "Comma-separated added-edge counts")
      ->required();

  CLI::App* cmd_ablate = app.add_subcommand("ablate", "Ablation comparison");
  cmd_ablate->add_option("--config", config_path, "JSON config file")->required();
  cmd_ablate->add_option("--kind", ablation_kind, "tns|tc|ec|both")->required();

  CLI::App* cmd_homophily =
      app.add_subcommand("homophily", "Print a dataset's homophily");
  cmd_homophily->add_option("--dataset", dataset_dir, "Dataset directory")->required();

  CLI::App* cmd_gen =
      app.add_subcommand("gen-synthetic", "Write a cross-label-edge variant of a dataset");
  cmd_gen->add_option("--dataset", dataset_dir, "Base dataset directory")->required();
  cmd_gen->add_option("--s", synth_edges, "Number of cross-label edges to add")
      ->required();
  cmd_gen->add_option("--seed", synth_seed, "Generator seed");
  cmd_gen->add_option("--out", out_dir, "Output dataset directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (cmd_train->parsed()) {
    auto cfg = legnn::ExperimentConfig::from_json_file(config_path);
    legnn::RunResult result = legnn::run_experiment(cfg);
    std::cout << "wrote " << legnn::resolve_output_dir(cfg) << "/result.json\n";
    print_aggregate("test_accuracy", result.test_accuracy);
    print_aggregate("test_macro_f1", result.test_macro_f1);
    print_aggregate("gd_test", result.gd_test);
  } else if (cmd_sweep->parsed()) {
    auto cfg = legnn::ExperimentConfig::from_json_file(config_path);
    auto s_values = parse_s_values(s_values_csv);
    legnn::SweepResult sweep = legnn::run_synthetic_sweep(cfg, s_values);
    std::cout << "wrote " << legnn::resolve_output_dir(cfg) << "/sweep.csv\n";
    for (const legnn::SweepRow& row : sweep.rows) {
      std::cout << "S=" << row.s << " homophily=" << row.homophily;
      for (const auto& [m, agg] : row.accuracy_by_method) {
        std::cout << " " << m << "=" << agg.mean;
      }
      std::cout << "\n";
    }
  } else if (cmd_ablate->parsed()) {
    auto cfg = legnn::ExperimentConfig::from_json_file(config_path);
    auto kind = legnn::ablation_from_string(ablation_kind);
    legnn::AblationResult result = legnn::run_ablation(cfg, kind);
    for (const legnn::AblationRow& row : result.rows) {
      std::cout << row.variant << ": train=" << row.train_accuracy.mean
                << " val=" << row.val_accuracy.mean
                << " test=" << row.test_accuracy.mean << "\n";
    }
  } else if (cmd_homophily->parsed()) {
    legnn::Graph g = legnn::load_dataset(dataset_dir);
    std::cout.precision(6);
    std::cout << std::fixed << legnn::compute_homophily(g) << "\n";
  } else if (cmd_gen->parsed()) {
    legnn::Graph g = legnn::load_dataset(dataset_dir);
    legnn::Graph out = legnn::generate_synthetic(g, synth_edges, synth_seed);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw legnn::IoError(out_dir + ": cannot create directory");
    legnn::save_dataset(out_dir, out);
    std::cout << "wrote " << out_dir << " (homophily "
              << legnn::compute_homophily(out) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const legnn::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL: " << e.what() << std::endl;
    return 1;
  }
}
