#include "legnn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace legnn {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char* kKnownKeys[] = {
    "dataset",       "method",     "backbone",    "hidden_dim",
    "layers",        "heads",      "fanouts",     "residual",
    "dropout",       "activation", "activation_slope", "attention_slope",
    "alpha",         "delta",      "threshold",   "lambda",
    "learning_rate", "lr_min",     "max_epochs",  "patience",
    "self_training", "seeds",      "output_dir"};

Activation activation_from_string(const std::string& s, double slope) {
  if (s == "relu") return Activation::relu();
  if (s == "elu") return Activation::elu();
  if (s == "leaky_relu") return Activation::leaky_relu(slope);
  if (s == "sigmoid") return Activation::sigmoid();
  throw UsageError("config: unknown activation '" + s + "'");
}

std::string activation_to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::elu: return "elu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::sigmoid: return "sigmoid";
  }
  return "?";
}

std::vector<std::size_t> default_fanouts(std::size_t layers) {
  // 15, 10, 5, then 5 for any deeper layer
  static const std::size_t base[] = {15, 10, 5};
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < layers; ++k) out.push_back(k < 3 ? base[k] : 5);
  return out;
}

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: field '") + key + "' has the wrong type");
  }
}

Aggregate aggregate_of(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  double total = 0.0;
  for (double x : xs) total += x;
  a.mean = total / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return a;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create directory: " + ec.message());
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(origin + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError(origin + ": config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : kKnownKeys) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw UsageError(origin + ": unknown config field '" + it.key() + "'");
  }

  ExperimentConfig cfg;
  if (!j.contains("dataset") || !j["dataset"].is_string()) {
    throw UsageError(origin + ": required string field 'dataset' missing");
  }
  cfg.dataset = j["dataset"].get<std::string>();
  cfg.method = method_from_string(get_field<std::string>(j, "method", "legnn"));
  cfg.backbone.kind =
      backbone_from_string(get_field<std::string>(j, "backbone", "gcn"));
  cfg.backbone.layers = get_field<std::size_t>(j, "layers", 2);
  cfg.backbone.hidden_dim = get_field<std::size_t>(j, "hidden_dim", 16);
  cfg.backbone.heads = get_field<std::size_t>(j, "heads", 1);
  cfg.backbone.fanouts = get_field<std::vector<std::size_t>>(
      j, "fanouts", default_fanouts(cfg.backbone.layers));
  cfg.backbone.residual = get_field<bool>(j, "residual", true);
  cfg.backbone.dropout = get_field<double>(j, "dropout", 0.1);
  cfg.backbone.attention_slope = get_field<double>(j, "attention_slope", 0.2);
  if (j.contains("activation")) {
    cfg.backbone.activation =
        activation_from_string(j["activation"].get<std::string>(),
                               get_field<double>(j, "activation_slope", 0.2));
  }
  cfg.train.alpha = get_field<double>(j, "alpha", 0.5);
  cfg.train.delta = get_field<double>(j, "delta", 10.0);
  cfg.train.threshold = get_field<double>(j, "threshold", 0.7);
  cfg.train.lambda = get_field<double>(j, "lambda", 0.5);
  cfg.train.learning_rate = get_field<double>(j, "learning_rate", 0.01);
  cfg.train.lr_min = get_field<double>(j, "lr_min", 0.0);
  cfg.train.max_epochs = get_field<std::size_t>(j, "max_epochs", 300);
  cfg.train.patience = get_field<std::size_t>(j, "patience", 50);
  cfg.train.self_training = get_field<bool>(j, "self_training", false);
  cfg.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", {1});
  cfg.output_dir = get_field<std::string>(j, "output_dir", "out");
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw UsageError("config: 'dataset' must be nonempty");
  if (seeds.empty()) throw UsageError("config: 'seeds' must list at least one seed");
  try {
    backbone.validate();
    train.validate();
  } catch (const ContractError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

std::string ExperimentConfig::resolved_json() const {
  ordered_json j;
  j["dataset"] = dataset;
  j["method"] = to_string(method);
  j["backbone"] = to_string(backbone.kind);
  j["layers"] = backbone.layers;
  j["hidden_dim"] = backbone.hidden_dim;
  j["heads"] = backbone.heads;
  j["fanouts"] = backbone.fanouts;
  j["residual"] = backbone.residual;
  j["dropout"] = backbone.dropout;
  j["activation"] = activation_to_string(backbone.effective_activation());
  j["activation_slope"] = backbone.effective_activation().slope;
  j["attention_slope"] = backbone.attention_slope;
  j["alpha"] = train.alpha;
  j["delta"] = train.delta;
  j["threshold"] = train.threshold;
  j["lambda"] = train.lambda;
  j["learning_rate"] = train.learning_rate;
  j["lr_min"] = train.lr_min;
  j["max_epochs"] = train.max_epochs;
  j["patience"] = train.patience;
  j["self_training"] = train.self_training;
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  return j.dump(2);
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  const char* root = std::getenv("LEGNN_OUTPUT_ROOT");
  if (root != nullptr && root[0] != '\0') {
    return std::string(root) + "/" + cfg.output_dir;
  }
  return cfg.output_dir;
}

SeedRunResult run_seed(const Graph& g, const LabelFeatures& lf, Method method,
                       const BackboneConfig& bcfg, TrainConfig tcfg,
                       std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  tcfg.seed = seed;
  TrainResult trained = train(g, lf, method, bcfg, tcfg);

  SeedRunResult out;
  out.seed = seed;
  out.history = std::move(trained.history);
  out.best_epoch = trained.best_epoch;
  out.epochs_run = out.history.size();
  out.val_accuracy = trained.best_val_accuracy;
  out.train_accuracy =
      trained.best_epoch > 0 ? out.history[trained.best_epoch - 1].train_accuracy
                             : 0.0;

  ForwardContext ctx;
  ctx.mode = Mode::eval;
  ForwardResult fwd =
      run_method_forward(g, lf, method, g.train_nodes, trained.params, bcfg, ctx);
  std::vector<std::size_t> pred, truth;
  for (std::size_t v : g.test_nodes) {
    const int c = g.label_of(v);
    if (c < 0) continue;
    truth.push_back(static_cast<std::size_t>(c));
    const auto row = fwd.probs.values().subspan(v * fwd.probs.cols(), fwd.probs.cols());
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k) {
      if (row[k] > row[best]) best = k;
    }
    pred.push_back(best);
  }
  if (!pred.empty()) {
    out.test_accuracy = accuracy(pred, truth);
    out.test_macro_f1 = macro_f1(pred, truth, g.num_classes);
  }
  out.gd_test = graph_difference(fwd.z_nodes, g.labels_onehot, g.test_nodes);
  out.gd_all = graph_difference(fwd.z_nodes, g.labels_onehot, g.labeled_nodes());
  out.ld_test.assign(g.num_classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < g.num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t v : g.test_nodes) {
      if (g.label_of(v) == static_cast<int>(c)) members.push_back(v);
    }
    if (!members.empty()) {
      out.ld_test[c] = label_difference(fwd.z_nodes, members);
    }
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

namespace {

RunResult aggregate_run(std::vector<SeedRunResult> per_seed) {
  RunResult r;
  std::vector<double> acc, f1, gdt, gda;
  for (const SeedRunResult& s : per_seed) {
    if (s.failed) continue;
    acc.push_back(s.test_accuracy);
    f1.push_back(s.test_macro_f1);
    gdt.push_back(s.gd_test);
    gda.push_back(s.gd_all);
  }
  r.per_seed = std::move(per_seed);
  r.test_accuracy = aggregate_of(acc);
  r.test_macro_f1 = aggregate_of(f1);
  r.gd_test = aggregate_of(gdt);
  r.gd_all = aggregate_of(gda);
  return r;
}

void write_result_json(const RunResult& result, const ExperimentConfig& cfg,
                       const std::string& path) {
  ordered_json j;
  j["config"] = ordered_json::parse(cfg.resolved_json());
  j["per_seed"] = ordered_json::array();
  for (const SeedRunResult& s : result.per_seed) {
    ordered_json row;
    row["seed"] = s.seed;
    if (s.failed) {
      row["failed"] = true;
      row["error"] = s.error;
      row["wall_seconds"] = s.wall_seconds;
      j["per_seed"].push_back(row);
      continue;
    }
    row["test_accuracy"] = s.test_accuracy;
    row["test_macro_f1"] = s.test_macro_f1;
    row["train_accuracy"] = s.train_accuracy;
    row["val_accuracy"] = s.val_accuracy;
    row["gd_test"] = s.gd_test;
    row["gd_all"] = s.gd_all;
    row["ld_test"] = ordered_json::array();
    for (double ld : s.ld_test) {
      if (std::isnan(ld)) {
        row["ld_test"].push_back(nullptr);  // class absent from the test split
      } else {
        row["ld_test"].push_back(ld);
      }
    }
    row["best_epoch"] = s.best_epoch;
    row["epochs_run"] = s.epochs_run;
    row["wall_seconds"] = s.wall_seconds;
    j["per_seed"].push_back(row);
  }
  auto agg = [](const Aggregate& a) {
    ordered_json o;
    o["mean"] = a.mean;
    o["std"] = a.stddev;
    return o;
  };
  j["aggregate"]["test_accuracy"] = agg(result.test_accuracy);
  j["aggregate"]["test_macro_f1"] = agg(result.test_macro_f1);
  j["aggregate"]["gd_test"] = agg(result.gd_test);
  j["aggregate"]["gd_all"] = agg(result.gd_all);
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_history_csv(const RunResult& result, const std::string& path) {
  auto out = open_out(path);
  out << "seed,epoch,lr,loss,train_accuracy,val_accuracy,pseudo_count,tc,"
         "pseudo_accuracy\n";
  out.precision(17);
  for (const SeedRunResult& s : result.per_seed) {
    for (const EpochRecord& e : s.history) {
      out << s.seed << "," << e.epoch << "," << e.lr << "," << e.loss << ","
          << e.train_accuracy << "," << e.val_accuracy << "," << e.pseudo_count
          << "," << e.tc << ",";
      if (e.pseudo_accuracy) out << *e.pseudo_accuracy;
      out << "\n";
    }
  }
}

void write_plotdata(const RunResult& result, const std::string& dir) {
  ensure_dir(dir);
  for (const SeedRunResult& s : result.per_seed) {
    if (s.failed) continue;
    const std::string suffix = "_seed" + std::to_string(s.seed) + ".tsv";
    auto val = open_out(dir + "/val_accuracy" + suffix);
    auto tr = open_out(dir + "/train_accuracy" + suffix);
    auto ps = open_out(dir + "/pseudo_count" + suffix);
    val.precision(17);
    tr.precision(17);
    for (const EpochRecord& e : s.history) {
      val << e.epoch << "\t" << e.val_accuracy << "\n";
      tr << e.epoch << "\t" << e.train_accuracy << "\n";
      ps << e.epoch << "\t" << e.pseudo_count << "\n";
    }
  }
}

}  // namespace

void emit_results(const RunResult& result, const ExperimentConfig& cfg,
                  EmitFormat format, const std::string& dir) {
  if (result.per_seed.empty()) {
    throw ContractError("emit_results: nothing to write");
  }
  ensure_dir(dir);
  switch (format) {
    case EmitFormat::json:
      write_result_json(result, cfg, dir + "/result.json");
      break;
    case EmitFormat::csv:
      write_history_csv(result, dir + "/history.csv");
      break;
    case EmitFormat::plotdata:
      write_plotdata(result, dir + "/plotdata");
      break;
  }
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Graph g = load_dataset(cfg.dataset);
  LabelFeatures lf = LabelFeatures::one_hot(g.num_classes);
  std::vector<SeedRunResult> per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    try {
      per_seed.push_back(run_seed(g, lf, cfg.method, cfg.backbone, cfg.train, seed));
    } catch (const Error& e) {
      // a diverged run is recorded, not fatal for the other seeds
      SeedRunResult failed;
      failed.seed = seed;
      failed.failed = true;
      failed.error = std::string(e.code()) + ": " + e.what();
      per_seed.push_back(std::move(failed));
    }
  }
  RunResult result = aggregate_run(std::move(per_seed));
  const std::string dir = resolve_output_dir(cfg);
  emit_results(result, cfg, EmitFormat::json, dir);
  emit_results(result, cfg, EmitFormat::csv, dir);
  emit_results(result, cfg, EmitFormat::plotdata, dir);
  return result;
}

SweepResult run_synthetic_sweep(const ExperimentConfig& cfg,
                                const std::vector<std::size_t>& s_values) {
  cfg.validate();
  if (s_values.empty()) {
    throw UsageError("sweep: need at least one S value");
  }
  Graph base = load_dataset(cfg.dataset);
  LabelFeatures lf = LabelFeatures::one_hot(base.num_classes);
  const Method methods[] = {Method::vanilla, Method::concat, Method::addition,
                            Method::legnn};
  // one generator stream for the whole sweep, so edge sets nest across S
  const std::uint64_t gen_seed = Rng::mix(cfg.seeds.front(), 0x5eedu);

  SweepResult sweep;
  for (std::size_t s : s_values) {
    Graph g = s == 0 ? base : generate_synthetic(base, s, gen_seed);
    SweepRow row;
    row.s = s;
    row.homophily = compute_homophily(g);
    for (Method m : methods) {
      std::vector<double> accs;
      for (std::uint64_t seed : cfg.seeds) {
        accs.push_back(
            run_seed(g, lf, m, cfg.backbone, cfg.train, seed).test_accuracy);
      }
      row.accuracy_by_method[to_string(m)] = aggregate_of(accs);
    }
    sweep.rows.push_back(std::move(row));
  }

  const std::string dir = resolve_output_dir(cfg);
  ensure_dir(dir);
  {
    auto out = open_out(dir + "/sweep.csv");
    out << "s,homophily";
    for (Method m : methods) {
      out << "," << to_string(m) << "_mean," << to_string(m) << "_std";
    }
    out << "\n";
    out.precision(17);
    for (const SweepRow& row : sweep.rows) {
      out << row.s << "," << row.homophily;
      for (Method m : methods) {
        const Aggregate& a = row.accuracy_by_method.at(to_string(m));
        out << "," << a.mean << "," << a.stddev;
      }
      out << "\n";
    }
  }
  {
    const std::string pd = dir + "/plotdata";
    ensure_dir(pd);
    for (Method m : methods) {
      auto out = open_out(pd + "/sweep_accuracy_" + to_string(m) + ".tsv");
      out.precision(17);
      for (const SweepRow& row : sweep.rows) {
        out << row.s << "\t" << row.accuracy_by_method.at(to_string(m)).mean
            << "\n";
      }
    }
    auto out = open_out(pd + "/sweep_homophily.tsv");
    out.precision(17);
    for (const SweepRow& row : sweep.rows) {
      out << row.s << "\t" << row.homophily << "\n";
    }
  }
  return sweep;
}

AblationKind ablation_from_string(const std::string& s) {
  if (s == "tns") return AblationKind::tns;
  if (s == "tc") return AblationKind::tc;
  if (s == "ec") return AblationKind::ec;
  if (s == "both") return AblationKind::both;
  throw UsageError("unknown ablation '" + s + "'");
}

std::string to_string(AblationKind k) {
  switch (k) {
    case AblationKind::tns: return "tns";
    case AblationKind::tc: return "tc";
    case AblationKind::ec: return "ec";
    case AblationKind::both: return "both";
  }
  return "?";
}

AblationResult run_ablation(const ExperimentConfig& cfg, AblationKind kind) {
  cfg.validate();
  if (kind == AblationKind::tns && cfg.method == Method::vanilla) {
    throw UsageError("ablation: tns does not apply to the vanilla method");
  }
  Graph g = load_dataset(cfg.dataset);
  LabelFeatures lf = LabelFeatures::one_hot(g.num_classes);

  TrainConfig reference = cfg.train;
  TrainConfig ablated = cfg.train;
  std::string ref_name, abl_name;
  if (kind == AblationKind::tns) {
    ref_name = "with_tns";
    abl_name = "without_tns";
    ablated.disable_tns = true;
  } else {
    // confidence ablations only make sense with self-training running
    reference.self_training = true;
    ablated.self_training = true;
    ref_name = "as_train";
    abl_name = "without_" + to_string(kind);
    ablated.ablate_tc = kind == AblationKind::tc || kind == AblationKind::both;
    ablated.ablate_ec = kind == AblationKind::ec || kind == AblationKind::both;
  }

  auto run_variant = [&](const TrainConfig& tcfg, const std::string& name) {
    std::vector<double> train_acc, val_acc, test_acc, test_f1;
    for (std::uint64_t seed : cfg.seeds) {
      SeedRunResult r = run_seed(g, lf, cfg.method, cfg.backbone, tcfg, seed);
      train_acc.push_back(r.train_accuracy);
      val_acc.push_back(r.val_accuracy);
      test_acc.push_back(r.test_accuracy);
      test_f1.push_back(r.test_macro_f1);
    }
    AblationRow row;
    row.variant = name;
    row.train_accuracy = aggregate_of(train_acc);
    row.val_accuracy = aggregate_of(val_acc);
    row.test_accuracy = aggregate_of(test_acc);
    row.test_macro_f1 = aggregate_of(test_f1);
    return row;
  };

  AblationResult result;
  result.rows.push_back(run_variant(reference, ref_name));
  result.rows.push_back(run_variant(ablated, abl_name));

  const std::string dir = resolve_output_dir(cfg);
  ensure_dir(dir);
  auto out = open_out(dir + "/ablation_" + to_string(kind) + ".csv");
  out << "variant,train_accuracy_mean,train_accuracy_std,val_accuracy_mean,"
         "val_accuracy_std,test_accuracy_mean,test_accuracy_std,"
         "test_macro_f1_mean,test_macro_f1_std\n";
  out.precision(17);
  for (const AblationRow& row : result.rows) {
    out << row.variant << "," << row.train_accuracy.mean << ","
        << row.train_accuracy.stddev << "," << row.val_accuracy.mean << ","
        << row.val_accuracy.stddev << "," << row.test_accuracy.mean << ","
        << row.test_accuracy.stddev << "," << row.test_macro_f1.mean << ","
        << row.test_macro_f1.stddev << "\n";
  }
  return result;
}

}  // namespace legnn
