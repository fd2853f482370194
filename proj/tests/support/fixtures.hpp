#ifndef LEGNN_TESTS_FIXTURES_HPP
#define LEGNN_TESTS_FIXTURES_HPP

#include <string>

#include "legnn/graph.hpp"

namespace legnn::testing {

// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// 4 nodes / 2 classes on disk: nodes 0,1 train, 2 valid, 3 unlabeled test.
void write_toy_dataset(const std::string& dir);

// Small, cleanly separable 2-class graph a model must fit exactly:
// `per_class` nodes each, strong intra-class connectivity, low feature noise.
Graph separable_graph(std::size_t per_class, std::uint64_t seed);

// Planted-partition fixture: `classes` blocks of `per_class` nodes, noisy
// class-centroid features, mostly intra-class edges. All nodes carry labels;
// splits take `train_per_class` / `val_per_class` and the rest is test.
Graph planted_graph(std::size_t per_class, std::size_t classes,
                    std::size_t feature_dim, double feature_noise,
                    std::size_t intra_degree, std::size_t train_per_class,
                    std::size_t val_per_class, std::uint64_t seed);

// The 200-node 4-class pair used by the directional checks: the base graph
// and a variant with enough cross-label edges to push homophily near the
// requested value.
struct FixturePair {
  Graph base;
  Graph lowered;
  std::size_t added_edges = 0;
};
FixturePair lowered_homophily_pair(double target_homophily);

}  // namespace legnn::testing

#endif  // LEGNN_TESTS_FIXTURES_HPP
