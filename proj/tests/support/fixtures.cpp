#include "support/fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "legnn/rng.hpp"

namespace legnn::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  const fs::path base = fs::temp_directory_path();
  static std::atomic<unsigned> counter{0};
  for (int attempt = 0; attempt < 100; ++attempt) {
    fs::path candidate =
        base / ("legnn_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
    std::error_code ec;
    if (fs::create_directory(candidate, ec)) {
      path_ = candidate.string();
      return;
    }
  }
  throw std::runtime_error("TempDir: could not create scratch directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_toy_dataset(const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream(dir + "/meta.json")
      << "{\"num_nodes\": 4, \"num_classes\": 2, \"feature_dim\": 3}\n";
  std::ofstream(dir + "/edges.tsv") << "0\t1\n1\t2\n2\t3\n";
  std::ofstream(dir + "/features.tsv") << "1\t0\t0\n0\t1\t0\n1\t0\t1\n0\t0\t1\n";
  std::ofstream(dir + "/labels.tsv") << "0\t0\n1\t1\n2\t0\n";
  std::ofstream(dir + "/split.tsv") << "0\ttrain\n1\ttrain\n2\tvalid\n3\ttest\n";
}

namespace {

Graph assemble(std::size_t num_nodes, std::size_t num_classes,
               std::size_t feature_dim,
               std::set<std::pair<std::size_t, std::size_t>> edges,
               std::vector<double> features, std::vector<int> labels,
               std::vector<std::size_t> train, std::vector<std::size_t> valid,
               std::vector<std::size_t> test) {
  Graph g;
  g.num_nodes = num_nodes;
  g.num_classes = num_classes;
  g.feature_dim = feature_dim;
  g.edges.assign(edges.begin(), edges.end());
  g.features = Tensor(num_nodes, feature_dim, std::move(features));
  g.labels_onehot = Tensor(num_nodes, num_classes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (labels[i] >= 0) {
      g.labels_onehot.set(i, static_cast<std::size_t>(labels[i]), 1.0);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(valid.begin(), valid.end());
  std::sort(test.begin(), test.end());
  g.train_nodes = std::move(train);
  g.valid_nodes = std::move(valid);
  g.test_nodes = std::move(test);
  g.validate();
  return g;
}

}  // namespace

Graph separable_graph(std::size_t per_class, std::uint64_t seed) {
  const std::size_t n = 2 * per_class;
  const std::size_t f = 4;
  Rng rng(seed);
  std::vector<double> features(n * f, 0.0);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = i < per_class ? 0 : 1;
    labels[i] = cls;
    for (std::size_t j = 0; j < f; ++j) {
      const double centroid = (cls == 0) == (j < f / 2) ? 1.0 : 0.0;
      features[i * f + j] = centroid + 0.05 * rng.normal();
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (int cls = 0; cls < 2; ++cls) {
    const std::size_t base = cls == 0 ? 0 : per_class;
    for (std::size_t i = 0; i < per_class; ++i) {
      edges.emplace(std::minmax(base + i, base + (i + 1) % per_class));
      edges.emplace(std::minmax(base + i, base + (i + 2) % per_class));
    }
  }
  std::vector<std::size_t> train, valid, test;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = i % per_class;
    if (pos < per_class * 3 / 10) {
      train.push_back(i);
    } else if (pos < per_class / 2) {
      valid.push_back(i);
    } else {
      test.push_back(i);
    }
  }
  return assemble(n, 2, f, std::move(edges), std::move(features),
                  std::move(labels), std::move(train), std::move(valid),
                  std::move(test));
}

Graph planted_graph(std::size_t per_class, std::size_t classes,
                    std::size_t feature_dim, double feature_noise,
                    std::size_t intra_degree, std::size_t train_per_class,
                    std::size_t val_per_class, std::uint64_t seed) {
  const std::size_t n = per_class * classes;
  Rng rng(seed);
  std::vector<double> features(n * feature_dim, 0.0);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i / per_class;
    labels[i] = static_cast<int>(cls);
    for (std::size_t j = 0; j < feature_dim; ++j) {
      // two indicator dims per class, wrapped when feature_dim is small
      const bool on = (j % classes) == cls && j < 2 * classes;
      features[i * feature_dim + j] =
          (on ? 1.0 : 0.0) + feature_noise * rng.normal();
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i / per_class;
    const std::size_t base = cls * per_class;
    std::size_t placed = 0;
    while (placed < intra_degree) {
      const std::size_t peer = base + rng.uniform_index(per_class);
      if (peer == i) continue;
      edges.emplace(std::minmax(i, peer));
      ++placed;  // counts draws, so multigraph collisions just skip
    }
  }
  std::vector<std::size_t> train, valid, test;
  for (std::size_t cls = 0; cls < classes; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < per_class; ++k) members.push_back(cls * per_class + k);
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < train_per_class) {
        train.push_back(members[k]);
      } else if (k < train_per_class + val_per_class) {
        valid.push_back(members[k]);
      } else {
        test.push_back(members[k]);
      }
    }
  }
  return assemble(n, classes, feature_dim, std::move(edges), std::move(features),
                  std::move(labels), std::move(train), std::move(valid),
                  std::move(test));
}

FixturePair lowered_homophily_pair(double target_homophily) {
  FixturePair pair;
  pair.base = planted_graph(/*per_class=*/50, /*classes=*/4,
                            /*feature_dim=*/8, /*feature_noise=*/0.8,
                            /*intra_degree=*/3, /*train_per_class=*/10,
                            /*val_per_class=*/10, /*seed=*/2024);
  // homophily(S) = same / (|E| + S): solve for the S that hits the target
  std::size_t same = 0;
  for (const auto& [u, v] : pair.base.edges) {
    if (pair.base.label_of(u) == pair.base.label_of(v)) ++same;
  }
  const double s_exact = static_cast<double>(same) / target_homophily -
                         static_cast<double>(pair.base.edges.size());
  pair.added_edges = s_exact > 0.0 ? static_cast<std::size_t>(std::llround(s_exact)) : 0;
  pair.lowered = generate_synthetic(pair.base, pair.added_edges, /*seed=*/7);
  return pair;
}

}  // namespace legnn::testing
